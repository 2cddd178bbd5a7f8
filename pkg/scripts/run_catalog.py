"""Simulate every catalog model with its defaults and write traces and reports."""

import argparse
from pathlib import Path

from chatter import output
from chatter.catalog import catalog, instantiate
from chatter.control import classify_outcome, simulate_controlled
from chatter.engine import simulate


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for spec in catalog():
        m = instantiate(spec.name)
        if m.control is not None:
            traj = simulate_controlled(m.system, m.control.gain, m.control.delay, m.init, m.t_end)
            extra = {"control": classify_outcome(traj).to_dict()}
        else:
            traj = simulate(m.system, m.init, m.t_end)
            extra = None
        report = output.simulation_report(traj, m.name, m.params, extra=extra)
        (out / f"{m.name}_report.json").write_text(output.dumps(report))
        trace = output.trace_csv(output.trace_records(traj), m.system.dimension)
        (out / f"{m.name}_trace.csv").write_text(trace)
        theta = report["theta_inf_estimate"]
        print(f"{m.name:24s} impacts {report['n_impacts']:4d}  verdict {report['verdict']:15s} "
              f"theta_inf {'-' if theta is None else format(theta, '.6f'):>12s}  {traj.termination}")


if __name__ == "__main__":
    main()
