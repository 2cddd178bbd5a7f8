"""Adaptive Dormand-Prince 5(4) integration with dense output and event location.

States are integrated in coordinates relative to the guard,
``w = (x - X(t), v - X'(t), x3, x4, ...)``.  Near an accumulation point the
bead hovers within 1e-15 of the surface, and measuring the height directly
keeps full relative precision where ``x - phi`` would cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import NoSignChange, NonFiniteState, OutOfRange, PenetrationDetected, StepSizeUnderflow
from .model import FixedGuard, HybridSystem, State

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th and embedded 4th order weights (FSAL stage last)
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# continuous extension: y(t0 + s h) = y0 + h * K^T P [s, s^2, s^3, s^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SCAN_SAMPLES = 8
_ROOT_XTOL = 1e-30


@dataclass(frozen=True)
class StepControl:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    dt_min: float = 1e-14
    dt_max: float = 0.05
    event_tol: float = 1e-12
    position_tol: float = 1e-9

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "dt_min", "dt_max", "event_tol", "position_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.dt_min < self.dt_max:
            raise ValueError("dt_min must be smaller than dt_max")


class DenseSegment:
    """One accepted step (or a piece of one) with its interpolant.

    ``relative(t)`` returns guard-relative coordinates, calling the segment
    returns the absolute state vector.
    """

    __slots__ = ("t_start", "t_end", "w_start", "w_end", "_q", "_h", "guard", "kind")

    def __init__(self, t_start, t_end, w_start, w_end, q, h, guard, kind="flight"):
        self.t_start = t_start
        self.t_end = t_end
        self.w_start = w_start
        self.w_end = w_end
        self._q = q
        self._h = h
        self.guard = guard
        self.kind = kind

    def relative(self, t):
        if t == self.t_start:
            return self.w_start.copy()
        if t == self.t_end:
            return self.w_end.copy()
        s = (t - self.t_start) / self._h
        return self.w_start + self._h * (self._q @ np.array([s, s * s, s**3, s**4]))

    def to_absolute(self, t, w):
        y = np.array(w, dtype=float)
        y[0] += self.guard.position(t)
        y[1] += self.guard.velocity(t)
        return y

    def __call__(self, t):
        return self.to_absolute(t, self.relative(t))

    @property
    def y_start(self):
        return self.to_absolute(self.t_start, self.w_start)

    @property
    def y_end(self):
        return self.to_absolute(self.t_end, self.w_end)

    def truncated(self, t_end):
        return DenseSegment(self.t_start, t_end, self.w_start, self.relative(t_end),
                            self._q, self._h, self.guard, self.kind)

    def __repr__(self):
        return f"DenseSegment({self.kind}, [{self.t_start!r}, {self.t_end!r}])"


@dataclass(frozen=True)
class EventHit:
    t: float
    state: State
    w: np.ndarray
    segment_index: int

    @property
    def relative_velocity(self):
        return float(self.w[1])


def _rms(a):
    return math.sqrt(float(np.dot(a, a)) / a.size)


def _rk_step(rhs, t, w, f0, h):
    k = np.empty((7, w.size))
    k[0] = f0
    for s in range(1, 6):
        k[s] = rhs(t + _C[s] * h, w + h * (_A[s] @ k[:s]))
    w_new = w + h * (_B @ k[:6])
    k[6] = rhs(t + h, w_new)
    return w_new, k, h * (_E @ k)


def _initial_step(rhs, t0, w0, f0, ctrl, h_cap):
    scale = ctrl.abs_tol + np.abs(w0) * ctrl.rel_tol
    d0, d1 = _rms(w0 / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_cap)
    f1 = rhs(t0 + h0, w0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, h_cap)


def step_cap(system: HybridSystem, ctrl: StepControl):
    cap = min(ctrl.dt_max, system.guard.max_step())
    if system.delay:
        cap = min(cap, system.delay / 4.0)
    return cap


def _finite(a):
    return bool(np.all(np.isfinite(a)))


def integrate(rhs, t0, w0, t_max, ctrl: StepControl, guard, *, h_cap=None, event=None,
              start_positive=False, sink=None, kind="flight"):
    """Integrate ``w' = rhs(t, w)`` from ``t0`` until ``event`` turns non-positive or ``t_max``.

    ``event(t, w)`` is positive away from the event.  With ``start_positive``
    its value at ``t0`` is taken as positive regardless (start on the
    surface).  Returns ``(segments, hit)`` with ``hit = (t, w)`` or None.
    """
    h_cap = ctrl.dt_max if h_cap is None else h_cap
    t = float(t0)
    w = np.array(w0, dtype=float)
    segments: List[DenseSegment] = []
    if t >= t_max:
        return segments, None
    f0 = rhs(t, w)
    if not _finite(f0):
        raise NonFiniteState(f"field is not finite at t={t}, w={w}")
    h = _initial_step(rhs, t, w, f0, ctrl, min(h_cap, t_max - t))
    first = True
    while t < t_max:
        remaining = t_max - t
        last = h >= remaining
        if last:
            h = remaining
        elif h < ctrl.dt_min:
            raise StepSizeUnderflow(f"step {h:.3g} below dt_min at t={t!r}")
        w_new, k, err = _rk_step(rhs, t, w, f0, h)
        if not (_finite(w_new) and _finite(k)):
            if h <= ctrl.dt_min:
                raise NonFiniteState(f"non-finite state near t={t!r}")
            h *= 0.2
            continue
        scale = ctrl.abs_tol + ctrl.rel_tol * np.maximum(np.abs(w), np.abs(w_new))
        err_norm = _rms(err / scale)
        if err_norm > 1.0:
            h *= max(0.2, 0.9 * err_norm ** -0.2)
            if h < ctrl.dt_min:
                raise StepSizeUnderflow(f"step {h:.3g} below dt_min at t={t!r}")
            continue
        t_new = t_max if last else t + h
        seg = DenseSegment(t, t_new, w, w_new, k.T @ _P, h, guard, kind)
        if event is not None:
            hit = _scan(seg, event, start_positive and first, t0)
            if hit is not None:
                seg = seg.truncated(hit)
                segments.append(seg)
                if sink is not None:
                    sink(seg)
                return segments, (hit, seg.w_end.copy())
        segments.append(seg)
        if sink is not None:
            sink(seg)
        first = False
        t, w, f0 = t_new, w_new, k[6]
        factor = 10.0 if err_norm == 0 else min(10.0, 0.9 * err_norm ** -0.2)
        h = min(h * factor, h_cap)
    return segments, None


def _scan(seg: DenseSegment, event, skip_first, t0):
    ts = np.linspace(seg.t_start, seg.t_end, SCAN_SAMPLES + 2)
    ts[-1] = seg.t_end
    prev_t = ts[0]
    if not skip_first:
        e0 = event(prev_t, seg.w_start)
        if e0 <= 0:
            return prev_t
    for tk in ts[1:]:
        ek = event(tk, seg.relative(tk))
        if ek <= 0:
            if ek == 0:
                return float(tk)
            return _refine(seg, event, prev_t, float(tk))
        prev_t = tk
    return None


def _refine(seg, event, a, b):
    fn = lambda s: event(s, seg.relative(s))  # noqa: E731
    fa = fn(a)
    if fa <= 0:
        # start-on-surface bracket whose left value is only known by continuity
        return b if fn(b) == 0 else _bisect_positive(fn, a, b)
    return brentq(fn, a, b, xtol=_ROOT_XTOL, maxiter=200)


def _bisect_positive(fn, a, b):
    for _ in range(200):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if fn(m) > 0:
            a = m
        else:
            b = m
    return b


def relative_state(system: HybridSystem, state: State):
    w = np.array(state.y, dtype=float)
    w[0] -= system.guard.position(state.t)
    w[1] -= system.guard.velocity(state.t)
    return w


def flight_rhs(system: HybridSystem):
    """Right-hand side of the flight dynamics in guard-relative coordinates."""
    f, guard, aux = system.field, system.guard, system.aux
    if isinstance(guard, FixedGuard) and aux is None:
        phi = guard.phi

        def rhs(t, w):
            return np.array([w[1], f(phi + w[0], w[1], t)], dtype=float)

        return rhs

    pos, vel, acc = guard.position, guard.velocity, guard.acceleration

    def rhs(t, w):
        x = pos(t) + w[0]
        v = vel(t) + w[1]
        out = np.empty(w.size)
        out[0] = w[1]
        out[1] = f(x, v, t) - acc(t)
        if aux is not None:
            y = w.copy()
            y[0], y[1] = x, v
            out[2:] = aux(t, y)
        return out

    return rhs


def flight_event(t0, w0_velocity, on_guard):
    """Guard crossing indicator; on a surface start the trivial root at t0 is divided out."""
    if not on_guard:
        return lambda t, w: w[0]

    start_value = w0_velocity if w0_velocity > 0 else 1e-300

    def event(t, w):
        dt = t - t0
        if dt <= 0:
            return start_value
        return w[0] / dt

    return event


def integrate_flight(system: HybridSystem, t0, w0, t_max, ctrl: StepControl, *,
                     on_guard=False, sink=None):
    rhs = flight_rhs(system)
    event = flight_event(t0, w0[1], on_guard)
    segments, hit = integrate(rhs, t0, w0, t_max, ctrl, system.guard, h_cap=step_cap(system, ctrl),
                              event=event, start_positive=on_guard, sink=sink)
    if hit is not None:
        t_hit, w_hit = hit
        w_hit[0] = 0.0
        segments[-1].w_end = w_hit.copy()
        hit = (t_hit, w_hit)
    return segments, hit


def integrate_until_event(system: HybridSystem, start: State, t_max, ctrl: StepControl = StepControl(),
                          sink: Optional[Callable[[DenseSegment], None]] = None
                          ) -> Tuple[List[DenseSegment], Optional[EventHit]]:
    """Fly from ``start`` until the first guard crossing or ``t_max``."""
    system.check_state(start)
    w0 = relative_state(system, start)
    if w0[0] < -ctrl.position_tol:
        raise PenetrationDetected(f"start state is {-w0[0]:.3g} below the guard")
    on_guard = abs(w0[0]) <= ctrl.position_tol
    if on_guard:
        if w0[1] < 0:
            return [], EventHit(start.t, start, w0, -1)
        w0[0] = 0.0
    segments, hit = integrate_flight(system, start.t, w0, t_max, ctrl, on_guard=on_guard, sink=sink)
    if hit is None:
        return segments, None
    t_hit, w_hit = hit
    return segments, EventHit(t_hit, State(t_hit, segments[-1].to_absolute(t_hit, w_hit)), w_hit,
                              len(segments) - 1)


def _check_range(segment, t):
    slack = 8 * np.finfo(float).eps * max(1.0, abs(t))
    if not segment.t_start - slack <= t <= segment.t_end + slack:
        raise OutOfRange(f"t={t!r} outside [{segment.t_start!r}, {segment.t_end!r}]")


def dense_eval(segment: DenseSegment, t) -> State:
    _check_range(segment, t)
    t = min(max(t, segment.t_start), segment.t_end)
    return State(t, segment(t))


def locate_event(segment: DenseSegment, guard, ctrl: StepControl = StepControl()):
    """Bracketed root of the guard value along a segment (Brent's method)."""
    if guard == segment.guard:
        fn = lambda t: segment.relative(t)[0]  # noqa: E731
    else:
        fn = lambda t: guard.value(segment(t)[0], t)  # noqa: E731
    a, b = segment.t_start, segment.t_end
    fa, fb = fn(a), fn(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise NoSignChange(f"guard value keeps sign on [{a!r}, {b!r}]")
    return brentq(fn, a, b, xtol=min(ctrl.event_tol, 1e-15), maxiter=200)
