"""Delay-feedback outcome for a range of initial heights.

    python scripts/delay_sweep.py                      # C = -30, tau = 1, r = 0.6
    python scripts/delay_sweep.py --gain 30 --x0 5 10  # opposite feedback sign
"""

import argparse
import sys
import time

from chatter import output
from chatter.cli import run_control
from chatter.config import config_from_mapping


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--x0", type=float, nargs="+", default=[2.1, 2.5, 3.0, 5.0, 10.0, 100.0, 200.0])
    ap.add_argument("--gain", type=float, default=-30.0)
    ap.add_argument("--tau", type=float, default=1.0)
    ap.add_argument("--t-end", type=float, default=70.0)
    ap.add_argument("--t-skip", type=float, default=50.0)
    args = ap.parse_args(argv)

    columns = ["x1_0", "period", "amplitude_half_pp", "amplitude_peak", "classification", "n_impacts",
               "termination", "seconds"]
    rows = []
    for x0 in args.x0:
        start = time.perf_counter()
        cfg = config_from_mapping({"model": "pyragas_example1", "x1_0": x0, "control_C": args.gain,
                                   "control_tau": args.tau, "t_end": args.t_end})
        _, traj, report, outcome, _ = run_control(cfg, t_skip=args.t_skip)
        rows.append({"x1_0": x0, "period": outcome.period, "amplitude_half_pp": outcome.amplitude_half_pp,
                     "amplitude_peak": outcome.amplitude_peak, "classification": outcome.classification,
                     "n_impacts": report["n_impacts"], "termination": report["termination"],
                     "seconds": round(time.perf_counter() - start, 2)})
    sys.stdout.write(output.rows_csv(columns, rows))


if __name__ == "__main__":
    main()
