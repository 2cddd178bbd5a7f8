"""Flight/impact cycles, accumulation detection, sticking and the truncated model."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DisjointWindows,
    GrazingImpact,
    IntegrationError,
    PenetrationDetected,
    TooFewImpacts,
)
from .integrator import (
    DenseSegment,
    StepControl,
    integrate,
    integrate_flight,
    relative_state,
    step_cap,
)
from .model import HybridSystem, State, apply_impact

PENETRATION_FACTOR = 10.0
_MAX_STALLS = 8


@dataclass(frozen=True)
class ZenoOptions:
    zeno_dt: float = 1e-8
    v_stick: float = 1e-8
    max_impacts: int = 10**6
    ratio_window: int = 10
    margin: float = 0.05
    v_graze: float = 1e-9

    def __post_init__(self):
        for name in ("zeno_dt", "v_stick", "max_impacts", "ratio_window", "margin", "v_graze"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ImpactEvent:
    theta: float
    x: float
    v_pre: float
    v_post: float
    index: int
    surface_velocity: float = 0.0


@dataclass(frozen=True)
class StickInterval:
    t_start: float
    t_end: float
    reason: str  # initial | zeno | grazing | truncation
    released: bool


@dataclass(frozen=True)
class Arc:
    """Maximal run of flight segments between two non-smooth events."""

    t_start: float
    t_end: float
    first: int
    stop: int
    start_kind: str  # init | impact | release
    end_kind: str  # impact | stick | end


@dataclass
class ZenoReport:
    impact_times: List[float]
    gaps: List[float]
    ratios: List[float]
    theta_inf: Optional[float]
    terminal_ratio: float
    verdict: str  # chattering | no_accumulation | inconclusive

    def to_dict(self):
        return {
            "impact_times": list(self.impact_times),
            "gaps": list(self.gaps),
            "ratios": list(self.ratios),
            "theta_inf_estimate": self.theta_inf,
            "terminal_ratio": self.terminal_ratio,
            "verdict": self.verdict,
        }


@dataclass
class Trajectory:
    system: HybridSystem
    t0: float
    t_end: float
    segments: List[DenseSegment] = field(default_factory=list)
    impacts: List[ImpactEvent] = field(default_factory=list)
    sticks: List[StickInterval] = field(default_factory=list)
    arcs: List[Arc] = field(default_factory=list)
    zeno_reports: List[ZenoReport] = field(default_factory=list)
    termination: str = "reached_t_end"
    _starts: List[float] = field(default_factory=list, repr=False)

    @property
    def impact_times(self):
        return [ev.theta for ev in self.impacts]

    @property
    def zeno(self) -> Optional[ZenoReport]:
        return self.zeno_reports[-1] if self.zeno_reports else None

    @property
    def theta_inf(self):
        z = self.zeno
        return None if z is None else z.theta_inf

    @property
    def t_final(self):
        return self.segments[-1].t_end if self.segments else self.t0

    def add(self, segs: Sequence[DenseSegment]):
        for s in segs:
            self.segments.append(s)
            self._starts.append(s.t_start)

    def segment_at(self, t) -> DenseSegment:
        if not self.segments:
            raise ValueError("empty trajectory")
        i = bisect.bisect_right(self._starts, t) - 1
        return self.segments[min(max(i, 0), len(self.segments) - 1)]

    def state_at(self, t):
        """Absolute state; at an impact time the post-impact velocity is returned."""
        seg = self.segment_at(t)
        t = min(max(t, seg.t_start), seg.t_end)
        return seg(t)

    def relative_at(self, t):
        seg = self.segment_at(t)
        t = min(max(t, seg.t_start), seg.t_end)
        return seg.relative(t)

    def flight_segments(self):
        return [s for s in self.segments if s.kind == "flight"]


def _reaction(system: HybridSystem):
    """Normal force per unit mass the surface must supply to hold the bead on it."""
    f, guard = system.field, system.guard
    pos, vel, acc = guard.position, guard.velocity, guard.acceleration
    return lambda t, w: acc(t) - f(pos(t), vel(t), t)


def _stick_rhs(system: HybridSystem):
    aux, guard = system.aux, system.guard
    if aux is None:
        return lambda t, w: np.zeros(w.size)

    def rhs(t, w):
        y = w.copy()
        y[0], y[1] = guard.position(t), guard.velocity(t)
        out = np.zeros(w.size)
        out[2:] = aux(t, y)
        return out

    return rhs


def sticking_dynamics(system: HybridSystem, t_stick, t_end, ctrl: StepControl = StepControl(),
                      w_aux=None, sink=None):
    """Constrained motion on the surface from ``t_stick``.

    The bead follows the guard while the constraint reaction stays
    non-negative.  Returns ``(segments, release_time)``; the release time is
    None when the bead is still held at ``t_end``.
    """
    w0 = np.zeros(system.dimension)
    if w_aux is not None:
        w0[2:] = w_aux
    reaction = _reaction(system)
    if reaction(t_stick, w0) < 0:
        return [], t_stick
    segments, hit = integrate(_stick_rhs(system), t_stick, w0, t_end, ctrl, system.guard,
                              h_cap=step_cap(system, ctrl), event=reaction, sink=sink, kind="stick")
    if hit is None:
        return segments, None
    return segments, hit[0]


def detect_zeno(impacts, zopts: ZenoOptions = ZenoOptions()) -> ZenoReport:
    """Geometric-series analysis of an impact-time sequence."""
    times = [getattr(ev, "theta", ev) for ev in impacts]
    if len(times) < 3:
        raise TooFewImpacts(f"need at least 3 impacts, got {len(times)}")
    gaps = list(np.diff(times))
    ratios = [b / a if a > 0 else math.inf for a, b in zip(gaps[:-1], gaps[1:])]
    window = ratios[-zopts.ratio_window:]
    if any(not math.isfinite(q) or q <= 0 for q in window):
        rho = math.inf if any(not math.isfinite(q) for q in window) else 0.0
    else:
        rho = float(math.exp(np.mean(np.log(window))))
    tail = gaps[-(len(window) + 1):]
    monotone = all(b < a for a, b in zip(tail[:-1], tail[1:]))
    if rho < 1.0 - zopts.margin and monotone:
        verdict = "chattering"
    elif rho >= 1.0:
        verdict = "no_accumulation"
    else:
        verdict = "inconclusive"
    theta_inf = times[-1] + gaps[-1] * rho / (1.0 - rho) if rho < 1.0 else None
    return ZenoReport(times, gaps, ratios, theta_inf, rho, verdict)


def truncation_cap(r):
    return int(math.floor(1.0 / r + 1e-12))


def simulate(system: HybridSystem, init: State, t_end, ctrl: StepControl = StepControl(),
             zopts: ZenoOptions = ZenoOptions(), *, impact_cap: Optional[int] = None,
             sink=None, check_penetration=True) -> Trajectory:
    """Event-driven simulation through impacts, accumulation and sticking.

    With ``impact_cap = N`` the N-th guard contact is absorbing: the first
    N - 1 contacts bounce and the bead rests on the surface from the N-th on.
    ``sink`` receives every accepted segment as soon as it exists (delay
    feedback reads its history through it).
    """
    system.check_state(init)
    traj = Trajectory(system, init.t, t_end)
    law, guard = system.impact, system.guard
    w = relative_state(system, init)
    t = float(init.t)
    if w[0] < -ctrl.position_tol:
        raise PenetrationDetected(f"initial state is {-w[0]:.3g} below the guard")

    reaction = _reaction(system)
    sequence: List[ImpactEvent] = []  # impacts since the last rest phase
    arc_start, arc_first, arc_kind = t, 0, "init"
    stalls, last_t = 0, None

    def close_arc(t_stop, end_kind):
        if len(traj.segments) > arc_first:
            traj.arcs.append(Arc(arc_start, t_stop, arc_first, len(traj.segments), arc_kind, end_kind))

    def stick(t_now, w_now, reason):
        nonlocal t, w, mode, arc_start, arc_first, arc_kind
        segs, release = sticking_dynamics(system, t_now, t_end, ctrl, w_now[2:], sink)
        traj.add(segs)
        t_stop = t_end if release is None else release
        if release is None or release > t_now:
            traj.sticks.append(StickInterval(t_now, t_stop, reason, release is not None))
        if release is None:
            t = t_end
            mode = "done"
            return
        w = segs[-1].w_end.copy() if segs else w_now.copy()
        w[0] = w[1] = 0.0
        t = release
        mode = "flight"
        arc_start, arc_first, arc_kind = t, len(traj.segments), "release"

    on_guard = abs(w[0]) <= ctrl.position_tol
    mode = "flight"
    if on_guard:
        w[0] = 0.0
        if abs(w[1]) < zopts.v_graze:
            mode = "contact"
        elif w[1] < 0:
            mode = "contact"

    while t < t_end and mode != "done":
        if last_t is not None and t == last_t:
            stalls += 1
            if stalls > _MAX_STALLS:
                raise IntegrationError(f"no progress at t={t!r} (surface contact cycling)")
        else:
            stalls = 0
        last_t = t

        if mode == "flight":
            on_guard = w[0] == 0.0
            segs, hit = integrate_flight(system, t, w, t_end, ctrl, on_guard=on_guard, sink=sink)
            traj.add(segs)
            if check_penetration:
                _check_segments(segs, ctrl)
            if hit is None:
                close_arc(t_end, "end")
                t = t_end
                break
            t, w = hit
            mode = "contact"
            continue

        # contact at (t, w): bead on the surface, relative velocity w[1]
        s = guard.velocity(t)
        v_rel = float(w[1])
        if impact_cap is not None and len(traj.impacts) + 1 >= impact_cap:
            close_arc(t, "stick")
            stick(t, w, "truncation")
            sequence = []
            continue
        if abs(v_rel) < zopts.v_graze or v_rel >= 0:
            close_arc(t, "stick")
            if reaction(t, w) >= 0:
                stick(t, w, "grazing" if traj.segments else "initial")
                sequence = []
            else:
                w[1] = max(v_rel, 0.0)
                mode = "flight"
                arc_start, arc_first, arc_kind = t, len(traj.segments), "release"
            continue
        try:
            v_post = apply_impact(law, s + v_rel, s, zopts.v_graze)
        except GrazingImpact:  # pragma: no cover - guarded above
            continue
        close_arc(t, "impact")
        ev = ImpactEvent(t, guard.position(t), s + v_rel, v_post, len(traj.impacts) + 1, s)
        traj.impacts.append(ev)
        sequence.append(ev)
        w = w.copy()
        w[0] = 0.0
        w[1] = -law.r * v_rel
        if len(traj.impacts) > zopts.max_impacts:
            traj.termination = "impact_cap"
            return traj
        gap = ev.theta - sequence[-2].theta if len(sequence) > 1 else math.inf
        if gap < zopts.zeno_dt or abs(w[1]) < zopts.v_stick:
            if len(sequence) >= 3:
                traj.zeno_reports.append(detect_zeno(sequence, zopts))
            # the remaining bounces are shorter than zeno_dt in total; rest from here
            stick(t, w, "zeno")
            sequence = []
            continue
        mode = "flight"
        arc_start, arc_first, arc_kind = t, len(traj.segments), "impact"

    if traj.sticks and traj.sticks[-1].reason == "zeno" and not traj.sticks[-1].released:
        traj.termination = "zeno_detected"
    return traj


def simulate_truncated(system: HybridSystem, init: State, t_end, ctrl: StepControl = StepControl(),
                       zopts: ZenoOptions = ZenoOptions(), **kw) -> Trajectory:
    """Run with at most floor(1/r) surface contacts; the bead rests after the last."""
    return simulate(system, init, t_end, ctrl, zopts, impact_cap=truncation_cap(system.impact.r), **kw)


def _check_segments(segs, ctrl: StepControl, samples=16):
    floor = -PENETRATION_FACTOR * ctrl.position_tol
    for seg in segs:
        if seg.kind != "flight":
            continue
        for t in np.linspace(seg.t_start, seg.t_end, samples + 2)[1:-1]:
            if seg.relative(t)[0] < floor:
                raise PenetrationDetected(f"guard value {seg.relative(t)[0]:.3g} at t={t!r}")


def min_guard_clearance(traj: Trajectory, samples=100):
    """Smallest guard value over ``samples`` interior points of every flight segment."""
    lowest = math.inf
    for seg in traj.flight_segments():
        ts = np.linspace(seg.t_start, seg.t_end, samples + 2)[1:-1]
        lowest = min(lowest, min(seg.relative(t)[0] for t in ts))
    return lowest


def check_non_penetration(traj: Trajectory, ctrl: StepControl = StepControl(), samples=100):
    lowest = min_guard_clearance(traj, samples)
    if lowest < -PENETRATION_FACTOR * ctrl.position_tol:
        raise PenetrationDetected(f"guard value reaches {lowest:.3g}")
    return lowest


def apex_times(traj: Trajectory, ctrl: StepControl = StepControl()):
    """Times of vanishing velocity inside each flight arc (highest point of the flight)."""
    out = []
    for arc in traj.arcs:
        segs = traj.segments[arc.first:arc.stop]
        v_start = segs[0].y_start[1]
        if arc.start_kind == "init" and v_start == 0.0:
            out.append(arc.t_start)
            continue
        for seg in segs:
            va, vb = seg.y_start[1], seg.y_end[1]
            if va > 0 >= vb:
                if vb == 0:
                    out.append(seg.t_end)
                else:
                    out.append(brentq(lambda s: seg(s)[1], seg.t_start, seg.t_end,
                                      xtol=min(ctrl.event_tol, 1e-15), maxiter=200))
                break
    return out


@dataclass(frozen=True)
class TrajectoryDifference:
    position: float
    velocity: float
    window: tuple


def compare_trajectories(a: Trajectory, b: Trajectory, grid_n=2001, window=None) -> TrajectoryDifference:
    """Sup-norm difference of position (and separately velocity) on a uniform grid."""
    lo = max(a.t0, b.t0)
    hi = min(a.t_final, b.t_final)
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    if not hi > lo:
        raise DisjointWindows(f"no common window: [{lo}, {hi}]")
    dx = dv = 0.0
    for t in np.linspace(lo, hi, grid_n):
        ya, yb = a.state_at(t), b.state_at(t)
        dx = max(dx, abs(ya[0] - yb[0]))
        dv = max(dv, abs(ya[1] - yb[1]))
    return TrajectoryDifference(dx, dv, (lo, hi))


def segment_index_at(traj: Trajectory, t):
    return bisect.bisect_right(traj._starts, t) - 1
