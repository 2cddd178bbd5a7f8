"""Pyragas delay feedback ``C [x(t - tau) - x(t)]`` on an impacting system."""

from __future__ import annotations

import bisect
import dataclasses
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq

from .engine import Trajectory, ZenoOptions, detect_zeno, simulate
from .errors import HistoryGap, TooFewImpacts
from .integrator import StepControl
from .model import HybridSystem, State

DEFAULT_SKIP = 50.0
DEFAULT_TOL_T = 0.02
MIN_CYCLES = 5


class History:
    """Append-only record of the solution, readable at any past time.

    Before the initial time the state is held constant at the initial value.
    Only the position is continuous across impacts; at an impact time the
    post-impact velocity is returned once the post-impact segment exists.
    """

    def __init__(self, init: State, delay):
        if not delay > 0:
            raise ValueError("delay must be positive")
        self.t0 = float(init.t)
        self.init = np.array(init.y, dtype=float)
        self.delay = float(delay)
        self.segments = []
        self._starts: List[float] = []

    def append(self, seg):
        self.segments.append(seg)
        self._starts.append(seg.t_start)

    @property
    def covered_until(self):
        return self.segments[-1].t_end if self.segments else self.t0

    def _segment(self, t):
        if t < self.t0 - self.delay * (1 + 1e-12):
            raise HistoryGap(f"t={t!r} precedes the lookback window starting at {self.t0 - self.delay!r}")
        if t < self.t0:
            return None
        end = self.covered_until
        if t > end + 1e-12 * max(1.0, abs(end)):
            raise HistoryGap(f"t={t!r} beyond recorded history (up to {end!r})")
        if not self.segments:
            return None
        i = bisect.bisect_right(self._starts, t) - 1
        return self.segments[max(i, 0)]

    def __call__(self, t) -> State:
        seg = self._segment(t)
        if seg is None:
            return State(t, self.init)
        tc = min(max(t, seg.t_start), seg.t_end)
        return State(t, seg(tc))

    def position(self, t):
        seg = self._segment(t)
        if seg is None:
            return self.init[0]
        tc = min(max(t, seg.t_start), seg.t_end)
        return seg.relative(tc)[0] + seg.guard.position(tc)


def history_eval(history: History, t) -> State:
    return history(t)


@dataclass(frozen=True)
class DelayFeedback:
    gain: float
    delay: float
    history: Optional[History] = None

    def __post_init__(self):
        if not self.delay > 0:
            raise ValueError("delay must be positive")


class DelayedField:
    """Base acceleration plus the feedback term; exposes ``delay`` to the stepper."""

    def __init__(self, base, gain, delay, history):
        self.base = base
        self.gain = gain
        self.delay = delay
        self.history = history

    def __call__(self, x, v, t):
        return self.base(x, v, t) + self.gain * (self.history.position(t - self.delay) - x)


def controlled_field(base, fb: DelayFeedback):
    if fb.gain == 0:
        return base
    if fb.history is None:
        raise ValueError("delay feedback needs a history to read from")
    return DelayedField(base, fb.gain, fb.delay, fb.history)


def simulate_controlled(system: HybridSystem, gain, delay, init: State, t_end,
                        ctrl: StepControl = StepControl(), zopts: ZenoOptions = ZenoOptions(),
                        **kw) -> Trajectory:
    history = History(init, delay)
    fb = DelayFeedback(gain, delay, history)
    field_ = controlled_field(system.field, fb)
    if field_ is system.field:
        return simulate(system, init, t_end, ctrl, zopts, **kw)
    controlled = dataclasses.replace(system, field=field_)
    return simulate(controlled, init, t_end, ctrl, zopts, sink=history.append, **kw)


@dataclass
class ControlOutcome:
    classification: str  # periodic | chattering | unresolved
    period: Optional[float]
    amplitude_half_pp: Optional[float]
    amplitude_peak: Optional[float]
    transient_skipped: float
    peak_times: List[float] = field(default_factory=list)
    peak_values: List[float] = field(default_factory=list)
    trough_values: List[float] = field(default_factory=list)

    def to_dict(self):
        return {
            "classification": self.classification,
            "period": self.period,
            "amplitude_half_pp": self.amplitude_half_pp,
            "amplitude_peak": self.amplitude_peak,
            "transient_skipped": self.transient_skipped,
            "n_peaks": len(self.peak_times),
            "peak_times": list(self.peak_times),
            "peak_values": list(self.peak_values),
        }


def _extrema(traj: Trajectory, t_skip):
    """Smooth maxima and minima of x1 after ``t_skip`` plus impact minima, in time order."""
    maxima, minima = [], []
    for seg in traj.flight_segments():
        if seg.t_end <= t_skip:
            continue
        ts = np.linspace(seg.t_start, seg.t_end, 6)
        vs = [seg(t)[1] for t in ts]
        for (a, b), (va, vb) in zip(zip(ts[:-1], ts[1:]), zip(vs[:-1], vs[1:])):
            if va > 0 >= vb or va < 0 <= vb:
                tr = b if vb == 0 else brentq(lambda s: seg(s)[1], a, b, xtol=1e-14)
                if tr > t_skip:
                    (maxima if va > 0 else minima).append((tr, float(seg(tr)[0])))
    for ev in traj.impacts:
        if ev.theta > t_skip:
            minima.append((ev.theta, ev.x))
    maxima.sort()
    minima.sort()
    return maxima, minima


def classify_outcome(traj: Trajectory, t_skip=DEFAULT_SKIP, tol_T=DEFAULT_TOL_T,
                     min_cycles=MIN_CYCLES) -> ControlOutcome:
    """Periodic (with period and amplitudes), chattering, or unresolved."""
    maxima, minima = _extrema(traj, t_skip)
    times = [t for t, _ in maxima]
    values = [x for _, x in maxima]
    if len(maxima) >= min_cycles + 1:
        gaps = np.diff(times)[-min_cycles:]
        # gaps shorter than the tolerance itself (an accumulation) carry no period
        if float(gaps.max() - gaps.min()) <= tol_T and float(gaps.min()) > tol_T:
            last_t = times[-(min_cycles + 1):]
            troughs = []
            for a, b in zip(last_t[:-1], last_t[1:]):
                inside = [x for t, x in minima if a < t < b]
                if inside:
                    troughs.append(min(inside))
            peaks = values[-(min_cycles + 1):]
            peak_mean = float(np.mean(peaks))
            half_pp = 0.5 * (peak_mean - float(np.mean(troughs))) if troughs else None
            return ControlOutcome("periodic", float(gaps.mean()), half_pp, peak_mean, t_skip,
                                  times, values, troughs)
    late = [ev for ev in traj.impacts if ev.theta > t_skip]
    if len(late) >= 3:
        try:
            report = detect_zeno(late)
        except TooFewImpacts:  # pragma: no cover
            report = None
        if report is not None and report.verdict == "chattering":
            return ControlOutcome("chattering", None, None, None, t_skip, times, values)
    return ControlOutcome("unresolved", None, None, None, t_skip, times, values)

