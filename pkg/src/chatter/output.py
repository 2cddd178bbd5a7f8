"""Trace records and JSON reports written by the command line tool."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .engine import Trajectory, ZenoOptions, apex_times, detect_zeno, segment_index_at
from .integrator import StepControl

SCHEMA = 1
TRACE_POINTS = 2000
FLAGS = ("flight", "impact", "apex", "stick", "release")
_RANK = {"impact_pre": 0, "impact_post": 1}


@dataclass(frozen=True)
class TraceRecord:
    t: float
    y: tuple
    segment: int
    flag: str


def _fmt(x):
    return format(float(x), ".17g")


def trace_records(traj: Trajectory, ctrl: StepControl = StepControl(),
                  n_points=TRACE_POINTS) -> List[TraceRecord]:
    """Uniform samples of the dense output plus a record at every event.

    An impact contributes two records at the same time: pre-impact velocity
    first, post-impact velocity second.
    """
    if not traj.segments:
        return []
    t0, t1 = traj.t0, traj.t_final
    events = []  # (t, rank, record)
    impact_times = set()
    for ev in traj.impacts:
        i = segment_index_at(traj, ev.theta)
        before = traj.segments[max(i - 1, 0)]
        aux = tuple(before.y_end[2:])
        events.append((ev.theta, 0, TraceRecord(ev.theta, (ev.x, ev.v_pre) + aux, max(i - 1, 0), "impact")))
        events.append((ev.theta, 1, TraceRecord(ev.theta, (ev.x, ev.v_post) + aux, i, "impact")))
        impact_times.add(ev.theta)
    for t in apex_times(traj, ctrl):
        if t in impact_times:
            continue
        events.append((t, 2, TraceRecord(t, tuple(traj.state_at(t)), segment_index_at(traj, t), "apex")))
    for st in traj.sticks:
        if st.t_start not in impact_times:
            events.append((st.t_start, 2, TraceRecord(st.t_start, tuple(traj.state_at(st.t_start)),
                                                       segment_index_at(traj, st.t_start), "stick")))
        if st.released:
            i = segment_index_at(traj, st.t_end)
            events.append((st.t_end, 3, TraceRecord(st.t_end, tuple(traj.state_at(st.t_end)), i, "release")))
    taken = {t for t, _, _ in events}
    for t in np.linspace(t0, t1, n_points + 1):
        t = float(t)
        if t in taken:
            continue
        i = segment_index_at(traj, t)
        i = min(max(i, 0), len(traj.segments) - 1)
        flag = "stick" if traj.segments[i].kind == "stick" else "flight"
        events.append((t, 4, TraceRecord(t, tuple(traj.state_at(t)), i, flag)))
    events.sort(key=lambda e: (e[0], e[1]))
    return [rec for _, _, rec in events]


def trace_columns(dimension):
    return ["t"] + [f"x{k + 1}" for k in range(dimension)] + ["segment", "flag"]


def trace_csv(records: Sequence[TraceRecord], dimension) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_columns(dimension))
    for rec in records:
        writer.writerow([_fmt(rec.t)] + [_fmt(c) for c in rec.y] + [rec.segment, rec.flag])
    return buf.getvalue()


def trace_json(records: Sequence[TraceRecord], dimension) -> str:
    cols = trace_columns(dimension)
    rows = [dict(zip(cols, [rec.t, *map(float, rec.y), rec.segment, rec.flag])) for rec in records]
    return dumps({"schema": SCHEMA, "columns": cols, "records": rows})


def _clean(obj):
    """JSON-safe copy: numpy scalars to float, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def zeno_summary(traj: Trajectory, zopts: ZenoOptions = ZenoOptions()):
    """Accumulation analysis of a run, falling back to the full impact list."""
    if traj.zeno is not None:
        return traj.zeno.to_dict()
    if len(traj.impacts) >= 3:
        return detect_zeno(traj.impacts, zopts).to_dict()
    times = traj.impact_times
    return {"impact_times": times, "gaps": list(np.diff(times)) if times else [], "ratios": [],
            "theta_inf_estimate": None, "terminal_ratio": None, "verdict": "inconclusive"}


def simulation_report(traj: Trajectory, model: str, params: Optional[dict] = None,
                      zopts: ZenoOptions = ZenoOptions(), extra: Optional[dict] = None) -> dict:
    report = {"schema": SCHEMA, "model": model, "params": dict(params or {})}
    report.update(zeno_summary(traj, zopts))
    report.update({
        "termination": traj.termination,
        "n_impacts": len(traj.impacts),
        "t_start": traj.t0,
        "t_final": traj.t_final,
        "sticks": [{"t_start": s.t_start, "t_end": s.t_end, "reason": s.reason, "released": s.released}
                   for s in traj.sticks],
    })
    if extra:
        report.update(extra)
    return report


def rows_csv(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        out = []
        for c in columns:
            v = row.get(c)
            if v is None:
                out.append("")
            elif isinstance(v, (float, np.floating)):
                out.append(repr(float(v)))  # shortest round-trip form
            else:
                out.append(str(v))
        writer.writerow(out)
    return buf.getvalue()
