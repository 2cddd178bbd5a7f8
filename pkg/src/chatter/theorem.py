"""Sampled certification of the sufficient conditions for chattering.

Conditions checked on a domain box ``phi <= u <= h, |v| <= hbar``:

* C1: ``f(u, v) < -m < 0`` everywhere (the bead is always pushed down),
* C2: ``f(u, v) == f(u, -v)`` (velocity-even field),
* ``M * sqrt(2 (h - phi) / m) < hbar`` where ``M = max |f|``.

The bounds come from grid sampling, so ``m`` is over-estimated and ``M``
under-estimated; certificates are labelled non-rigorous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import NonFiniteSample
from .model import DomainBox

DEFAULT_GRID = 401
C2_TOL = 1e-12
LABEL = "sampled, non-rigorous"


@dataclass(frozen=True)
class BoundsEstimate:
    m_est: float
    M_est: float
    argmin: Tuple[float, float, float]  # (u, v, t) where |f| is smallest among f < 0
    argmax: Tuple[float, float, float]  # (u, v, t) where |f| is largest
    grid_n: int
    times: Tuple[float, ...]
    c1_holds: bool
    c1_witness: Optional[Tuple[float, float, float]] = None  # point with f >= 0
    time_dependent: bool = False


@dataclass(frozen=True)
class C2Verdict:
    holds: bool
    asymmetry: float
    witness: Tuple[float, float, float]


@dataclass
class ChatteringCertificate:
    box: DomainBox
    bounds: BoundsEstimate
    c2: C2Verdict
    m: float
    M: float
    lhs: float
    inequality_holds: bool
    overrides: dict = field(default_factory=dict)

    @property
    def c1_holds(self):
        return self.bounds.c1_holds and self.m > 0

    @property
    def margin(self):
        return self.box.hbar - self.lhs

    @property
    def holds(self):
        return self.c1_holds and self.c2.holds and self.inequality_holds

    @property
    def initial_set(self):
        return f"(x0, 0) with {self.box.phi!r} < x0 < {self.box.h!r}"

    def to_dict(self):
        b = self.bounds
        return {
            "label": LABEL,
            "box": {"phi": self.box.phi, "h": self.box.h, "hbar": self.box.hbar},
            "grid_n": b.grid_n,
            "check_times": list(b.times),
            "time_dependent": b.time_dependent,
            "c1": {"holds": self.c1_holds, "m_est": b.m_est, "witness": _pt(b.c1_witness),
                   "argmin": _pt(b.argmin)},
            "c2": {"holds": self.c2.holds, "asymmetry": self.c2.asymmetry,
                   "witness": _pt(self.c2.witness)},
            "M_est": b.M_est,
            "argmax": _pt(b.argmax),
            "m": self.m,
            "M": self.M,
            "overrides": dict(self.overrides),
            "lhs": self.lhs,
            "inequality": {"holds": self.inequality_holds, "margin": self.margin},
            "verdict": "holds" if self.holds else "fails",
            "initial_set": self.initial_set if self.holds else None,
        }

    def summary(self):
        lines = [
            f"certificate ({LABEL}), grid {self.bounds.grid_n}x{self.bounds.grid_n}",
            f"  C1: {'holds' if self.c1_holds else 'fails'}  m = {self.m:.6g}"
            + (f" (sampled {self.bounds.m_est:.6g})" if "m" in self.overrides else ""),
            f"  C2: {'holds' if self.c2.holds else 'fails'}  max asymmetry = {self.c2.asymmetry:.3g}",
            f"  M = {self.M:.6g}" + (f" (sampled {self.bounds.M_est:.6g})" if "M" in self.overrides else ""),
            f"  M*sqrt(2(h-phi)/m) = {self.lhs:.6g} {'<' if self.inequality_holds else '>='} hbar = {self.box.hbar:.6g}",
            f"  verdict: {'holds' if self.holds else 'fails'}",
        ]
        if self.holds:
            lines.append(f"  every initial value {self.initial_set} chatters")
        return "\n".join(lines)


def _pt(p):
    return None if p is None else [float(c) for c in p]


def _evaluate(field_fn, u, v, t):
    vals = None
    try:
        vals = np.asarray(field_fn(u, v, t), dtype=float)
    except (TypeError, ValueError):
        vals = None
    if vals is None or vals.shape != u.shape:
        vals = np.vectorize(lambda a, b: float(field_fn(a, b, t)))(u, v)
    return np.broadcast_to(vals, u.shape)


def _grid(box: DomainBox, grid_n):
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    us = np.linspace(box.phi, box.h, grid_n)
    vs = np.linspace(-box.hbar, box.hbar, grid_n)
    vs = 0.5 * (vs - vs[::-1])  # exactly symmetric, with v = 0 on odd grids
    return np.meshgrid(us, vs, indexing="ij")


def _is_time_dependent(field_fn, box):
    probe = [(box.phi, 0.0), (box.h, box.hbar), (0.5 * (box.phi + box.h), -0.3 * box.hbar)]
    for u, v in probe:
        base = float(field_fn(u, v, 0.0))
        for t in (0.37, 1.9, 11.3):
            if float(field_fn(u, v, t)) != base:
                return True
    return False


def estimate_bounds(field_fn, box: DomainBox, grid_n=DEFAULT_GRID, times: Sequence[float] = (0.0,)
                    ) -> BoundsEstimate:
    U, V = _grid(box, grid_n)
    best_m = best_M = None
    worst = None
    for t in times:
        f = _evaluate(field_fn, U, V, t)
        if not np.all(np.isfinite(f)):
            i = np.unravel_index(np.argmin(np.isfinite(f)), f.shape)
            raise NonFiniteSample(f"field not finite at u={U[i]}, v={V[i]}, t={t}")
        imax = np.unravel_index(np.argmax(f), f.shape)  # least negative: defines m
        imin = np.unravel_index(np.argmax(np.abs(f)), f.shape)
        m_here, M_here = -f[imax], abs(f[imin])
        if best_m is None or m_here < best_m[0]:
            best_m = (m_here, (U[imax], V[imax], t))
        if best_M is None or M_here > best_M[0]:
            best_M = (M_here, (U[imin], V[imin], t))
        if f[imax] >= 0 and worst is None:
            worst = (U[imax], V[imax], t)
    return BoundsEstimate(
        m_est=float(best_m[0]),
        M_est=float(best_M[0]),
        argmin=best_m[1],
        argmax=best_M[1],
        grid_n=grid_n,
        times=tuple(float(t) for t in times),
        c1_holds=worst is None,
        c1_witness=worst,
        time_dependent=_is_time_dependent(field_fn, box),
    )


def check_c2(field_fn, box: DomainBox, grid_n=DEFAULT_GRID, tol=C2_TOL, times: Sequence[float] = (0.0,)
             ) -> C2Verdict:
    U, V = _grid(box, grid_n)
    worst, where = -1.0, None
    for t in times:
        diff = np.abs(_evaluate(field_fn, U, V, t) - _evaluate(field_fn, U, -V, t))
        i = np.unravel_index(np.argmax(diff), diff.shape)
        if diff[i] > worst:
            worst, where = float(diff[i]), (U[i], V[i], t)
    return C2Verdict(worst <= tol, worst, where)


def check_inequality(box: DomainBox, m, M):
    """Left side ``M sqrt(2 (h - phi) / m)`` and whether it stays below ``hbar``."""
    if not (m > 0 and M > 0):
        raise ValueError("m and M must be positive")
    lhs = M * math.sqrt(2.0 * (box.h - box.phi) / m)
    return lhs, lhs < box.hbar


def theorem_verdict(field_fn, box: DomainBox, grid_n=DEFAULT_GRID, *, times: Sequence[float] = (0.0,),
                    c2_tol=C2_TOL, m=None, M=None) -> ChatteringCertificate:
    """Compose C1, C2 and the inequality; ``m``/``M`` replace the sampled bounds if given."""
    bounds = estimate_bounds(field_fn, box, grid_n, times)
    c2 = check_c2(field_fn, box, grid_n, c2_tol, times)
    overrides = {}
    if m is not None:
        overrides["m"] = float(m)
    if M is not None:
        overrides["M"] = float(M)
    m_used = overrides.get("m", bounds.m_est)
    M_used = overrides.get("M", bounds.M_est)
    if m_used > 0 and M_used > 0:
        lhs, ok = check_inequality(box, m_used, M_used)
    else:
        lhs, ok = math.inf, False
    return ChatteringCertificate(box, bounds, c2, m_used, M_used, lhs, ok, overrides)
