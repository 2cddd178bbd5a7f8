"""Command line entry point: ``chatter {simulate,check,sweep,control,list-models}``.

Exit codes: 0 success (or certificate holds), 1 negative verdict,
2 usage or configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from . import catalog, output
from .config import KEYS, RunConfig, config_from_mapping
from .control import DEFAULT_SKIP, DEFAULT_TOL_T, classify_outcome, simulate_controlled
from .engine import simulate
from .errors import ChatterError, SchemaError
from .model import DomainBox
from .theorem import DEFAULT_GRID, theorem_verdict

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

CONTROL_COLUMNS = ("period", "amplitude_half_pp", "amplitude_peak", "classification")
SIMULATE_COLUMNS = ("n_impacts", "theta_inf_estimate", "terminal_ratio", "verdict", "termination")


# -- configuration assembly ----------------------------------------------------

def _parse_set(items):
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise SchemaError(item, "expected NAME=VALUE")
        out[name.strip()] = value.strip()
    return out


def config_mapping(args) -> dict:
    """Merge the config file, per-key flags and ``--set`` pairs (later wins)."""
    data = {}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise SchemaError("--config", str(exc)) from exc
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise SchemaError("--config", f"not a valid document: {exc}") from exc
        if loaded is not None and not isinstance(loaded, dict):
            raise SchemaError("--config", "configuration must be a key/value table")
        data.update(loaded or {})
    for key in KEYS:
        value = getattr(args, f"ov_{key}", None)
        if value is not None:
            data[key] = value
    data.update(_parse_set(args.set))
    if data.get("model") is not None and data.get("field") is not None and args.config:
        # a flag naming one source replaces the other from the file
        if getattr(args, "ov_model", None) is not None:
            data.pop("field")
        elif getattr(args, "ov_field", None) is not None:
            data.pop("model")
    return data


def _outputs(cfg: RunConfig, args, name):
    out = Path(args.out)
    ext = "json" if cfg.format == "json" else "csv"
    trace = out / (cfg.out_trace or f"{name}_trace.{ext}")
    report = out / (cfg.out_report or f"{name}_report.json")
    return trace, report


def _write(path: Path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _trace_text(traj, cfg: RunConfig):
    records = output.trace_records(traj, cfg.step_control)
    dim = traj.system.dimension
    return output.trace_json(records, dim) if cfg.format == "json" else output.trace_csv(records, dim)


# -- runs shared by the subcommands and the sweep workers -----------------------

def run_simulation(cfg: RunConfig):
    inst = cfg.build()
    cap = cfg.resolved_cap(inst.system.impact.r)
    traj = simulate(inst.system, inst.init, inst.t_end, cfg.step_control, cfg.zeno_options, impact_cap=cap)
    report = output.simulation_report(traj, inst.name, inst.params, cfg.zeno_options,
                                      {"impact_cap": cap})
    return inst, traj, report


def run_control(cfg: RunConfig, t_skip=DEFAULT_SKIP, tol_T=DEFAULT_TOL_T):
    inst = cfg.build()
    if inst.control is None:
        raise SchemaError("control_C", "control needs control_C and control_tau (or a model with a default)")
    cap = cfg.resolved_cap(inst.system.impact.r)
    traj = simulate_controlled(inst.system, inst.control.gain, inst.control.delay, inst.init, inst.t_end,
                               cfg.step_control, cfg.zeno_options, impact_cap=cap)
    report = output.simulation_report(traj, inst.name, inst.params, cfg.zeno_options,
                                      {"impact_cap": cap})
    outcome = classify_outcome(traj, t_skip=t_skip, tol_T=tol_T)
    outcome_doc = {"schema": output.SCHEMA, "model": inst.name,
                   "control": {"C": inst.control.gain, "tau": inst.control.delay}}
    outcome_doc.update(outcome.to_dict())
    return inst, traj, report, outcome, outcome_doc


# -- subcommands ------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, args) -> int:
    inst, traj, report = run_simulation(cfg)
    trace_path, report_path = _outputs(cfg, args, inst.name)
    _write(trace_path, _trace_text(traj, cfg))
    _write(report_path, output.dumps(report))
    theta = report["theta_inf_estimate"]
    print(f"{inst.name}: {len(traj.impacts)} impacts, verdict {report['verdict']}, "
          f"theta_inf {theta if theta is None else format(theta, '.12g')}, termination {traj.termination}")
    print(f"wrote {trace_path} and {report_path}")
    return EXIT_OK


def cmd_check(cfg: RunConfig, args) -> int:
    inst = cfg.build()
    box = inst.box
    if args.box_h is not None or args.box_hbar is not None or box is None:
        phi = box.phi if box is not None else inst.system.guard.position(inst.init.t)
        h = args.box_h if args.box_h is not None else (box.h if box else None)
        hbar = args.box_hbar if args.box_hbar is not None else (box.hbar if box else None)
        if h is None or hbar is None:
            raise SchemaError("--box-h", "no domain box: give --box-h and --box-hbar")
        box = DomainBox(phi, h, hbar)
    times = tuple(args.check_time) if args.check_time else (0.0,)
    cert = theorem_verdict(inst.system.field, box, args.grid_n, times=times, m=args.m, M=args.M)
    print(cert.summary())
    doc = {"schema": output.SCHEMA, "model": inst.name, "certificate": cert.to_dict()}
    _write(Path(args.out) / (cfg.out_report or f"{inst.name}_check.json"), output.dumps(doc))
    return EXIT_OK if cert.holds else EXIT_NEGATIVE


def cmd_control(cfg: RunConfig, args) -> int:
    inst, traj, report, outcome, doc = run_control(cfg, args.t_skip, args.tol_T)
    trace_path, report_path = _outputs(cfg, args, inst.name)
    outcome_path = report_path.with_name(f"{inst.name}_outcome.json")
    _write(trace_path, _trace_text(traj, cfg))
    _write(report_path, output.dumps(report))
    _write(outcome_path, output.dumps(doc))
    line = f"{inst.name}: {outcome.classification}"
    if outcome.classification == "periodic":
        line += (f", T = {outcome.period:.4f}, half peak-to-trough = {outcome.amplitude_half_pp:.4f}, "
                 f"peak = {outcome.amplitude_peak:.4f}")
    print(line)
    print(f"wrote {trace_path}, {report_path} and {outcome_path}")
    return EXIT_NEGATIVE if outcome.classification == "unresolved" else EXIT_OK


def _sweep_one(job):
    """Worker: run one sweep point from a plain mapping; never raises."""
    mapping, param, value, mode, t_skip, tol_T = job
    row = {param: value, "status": "ok", "error": ""}
    try:
        cfg = config_from_mapping(dict(mapping, **{param: value}))
        if mode == "control":
            _, _, report, outcome, doc = run_control(cfg, t_skip, tol_T)
            row.update({k: doc[k] for k in CONTROL_COLUMNS})
            return row, {"report": report, "outcome": doc}
        _, _, report = run_simulation(cfg)
        row.update({"n_impacts": report["n_impacts"], "theta_inf_estimate": report["theta_inf_estimate"],
                    "terminal_ratio": report["terminal_ratio"], "verdict": report["verdict"],
                    "termination": report["termination"]})
        return row, {"report": report}
    except (ChatterError, ValueError, ArithmeticError) as exc:
        row.update({"status": "failed", "error": f"{type(exc).__name__}: {exc}"})
        return row, None


def _sweep_values(raw):
    values = []
    for item in raw or ():
        for part in str(item).replace(",", " ").split():
            try:
                values.append(float(part))
            except ValueError:
                raise SchemaError("--values", f"not a number: {part!r}") from None
    if not values:
        raise SchemaError("--values", "sweep needs at least one value")
    return sorted(set(values))


def cmd_sweep(cfg: RunConfig, args, mapping) -> int:
    values = _sweep_values(args.values)
    param = args.param
    inst = cfg.build()
    if cfg.model is not None:
        spec = catalog.get_spec(cfg.model)
        if param not in spec.param_names() and param not in ("x0", "v0"):
            raise SchemaError(param, f"model {cfg.model!r} has no parameter {param!r}")
    elif param not in KEYS:
        raise SchemaError(param, "not a configuration key")
    mode = args.mode
    if mode == "auto":
        mode = "control" if inst.control is not None and inst.control.gain != 0 else "simulate"
    jobs = [(mapping, param, v, mode, args.t_skip, args.tol_T) for v in values]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(job) for job in jobs]

    out = Path(args.out)
    for (row, docs), v in zip(results, values):
        if docs is None:
            continue
        stem = f"{inst.name}_{param}_{float(v)!r}"
        _write(out / f"{stem}_report.json", output.dumps(docs["report"]))
        if "outcome" in docs:
            _write(out / f"{stem}_outcome.json", output.dumps(docs["outcome"]))
    columns = [param] + list(CONTROL_COLUMNS if mode == "control" else SIMULATE_COLUMNS) + ["status", "error"]
    rows = [row for row, _ in results]
    if cfg.format == "json":
        text, name = output.dumps({"schema": output.SCHEMA, "columns": columns, "rows": rows}), "sweep.json"
    else:
        text, name = output.rows_csv(columns, rows), "sweep.csv"
    _write(out / name, text)
    sys.stdout.write(output.rows_csv(columns, rows))
    return EXIT_RUNTIME if any(r["status"] != "ok" for r in rows) else EXIT_OK


def cmd_list_models(args) -> int:
    entries = []
    for spec in catalog.catalog():
        entries.append({"name": spec.name, "description": spec.description,
                        "params": [{"name": p.name, "default": p.default, "units": p.units, "doc": p.doc}
                                   for p in spec.params]})
    if args.format == "json":
        sys.stdout.write(output.dumps({"schema": output.SCHEMA, "models": entries}))
        return EXIT_OK
    for e in entries:
        print(f"{e['name']}: {e['description']}")
        for p in e["params"]:
            units = f" [{p['units']}]" if p["units"] else ""
            doc = f"  {p['doc']}" if p["doc"] else ""
            print(f"    {p['name']} = {p['default']!r}{units}{doc}")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------------

def _common(parser):
    parser.add_argument("--config", metavar="FILE", help="YAML/JSON run configuration")
    parser.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
    parser.add_argument("--set", action="append", metavar="NAME=VALUE",
                        help="override a model parameter (repeatable)")
    for key in KEYS:
        flags = [f"--{key}"]
        if "_" in key:
            flags.append(f"--{key.replace('_', '-')}")
        parser.add_argument(*flags, dest=f"ov_{key}", metavar="VALUE", default=None,
                            help=argparse.SUPPRESS if key != "format" else "trace/table format: csv or json")


_KEYS_EPILOG = ("Every configuration key is also a flag overriding the config file: "
                + ", ".join(f"--{k}" for k in KEYS) + ".")


def build_parser():
    parser = argparse.ArgumentParser(prog="chatter", description="Impact oscillator chattering toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate and write trace + accumulation report", epilog=_KEYS_EPILOG)
    _common(p)

    p = sub.add_parser("check", help="sampled check of the chattering conditions on a domain box",
                       epilog=_KEYS_EPILOG)
    _common(p)
    p.add_argument("--m", type=float, default=None, help="use this lower bound m instead of the sampled one")
    p.add_argument("--M", type=float, default=None, help="use this bound M instead of the sampled one")
    p.add_argument("--grid-n", type=int, default=DEFAULT_GRID, help="grid points per axis")
    p.add_argument("--check-time", type=float, action="append", help="time slice (repeatable, default 0)")
    p.add_argument("--box-h", type=float, default=None)
    p.add_argument("--box-hbar", type=float, default=None)

    for name, help_ in (("sweep", "run one parameter over a list of values"),
                        ("control", "delay-feedback run with outcome classification")):
        p = sub.add_parser(name, help=help_, epilog=_KEYS_EPILOG)
        _common(p)
        p.add_argument("--t-skip", type=float, default=DEFAULT_SKIP, help="transient discarded before classifying")
        p.add_argument("--tol-T", dest="tol_T", type=float, default=DEFAULT_TOL_T,
                       help="period agreement tolerance")
        if name == "sweep":
            p.add_argument("--param", required=True, help="parameter to vary")
            p.add_argument("--values", nargs="*", default=None, help="values (space or comma separated)")
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--mode", choices=("auto", "simulate", "control"), default="auto")

    p = sub.add_parser("list-models", help="list built-in models and their parameters")
    p.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "list-models":
            return cmd_list_models(args)
        mapping = config_mapping(args)
        cfg = config_from_mapping(mapping)
        if args.command == "simulate":
            return cmd_simulate(cfg, args)
        if args.command == "check":
            return cmd_check(cfg, args)
        if args.command == "control":
            return cmd_control(cfg, args)
        return cmd_sweep(cfg, args, mapping)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ChatterError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

