"""Impulsive mechanical systems: vector field, guard surface, impact law, domain box.

The flight dynamics are ``x'' = f(x, x', t)``.  A guard is either the fixed
plane ``x = phi`` or a sinusoidally vibrating table ``x = X0 sin(omega t)``
that does not react to collisions.  At contact the relative velocity is
reversed and scaled by the restitution coefficient ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import GrazingImpact, InvalidApproach, ModelError

# f(x, v, t) -> acceleration.  Catalog fields are numpy-aware so the same
# callable serves the integrator (floats) and the grid checker (arrays).
VectorField = Callable[[float, float, float], float]
# aux(t, y) -> derivatives of the extra coordinates (x3, x4, ...).
AuxField = Callable[[float, np.ndarray], Sequence[float]]

DEFAULT_GRAZE = 1e-9


@dataclass(frozen=True)
class FixedGuard:
    phi: float

    kind = "fixed"

    def value(self, x, t):
        return x - self.phi

    def position(self, t):
        return self.phi

    def velocity(self, t):
        return 0.0

    def acceleration(self, t):
        return 0.0

    def max_step(self):
        return math.inf


@dataclass(frozen=True)
class SinusoidalGuard:
    amplitude: float
    omega: float

    kind = "sinusoidal"

    def __post_init__(self):
        if not self.omega > 0:
            raise ModelError("sinusoidal guard needs omega > 0")

    def value(self, x, t):
        return x - self.amplitude * np.sin(self.omega * t)

    def position(self, t):
        return self.amplitude * math.sin(self.omega * t)

    def velocity(self, t):
        return self.amplitude * self.omega * math.cos(self.omega * t)

    def acceleration(self, t):
        return -self.amplitude * self.omega**2 * math.sin(self.omega * t)

    def max_step(self):
        # a quarter of the table period, so no crest is stepped over
        return math.pi / (2.0 * self.omega)


Guard = Union[FixedGuard, SinusoidalGuard]


@dataclass(frozen=True)
class ImpactLaw:
    r: float

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ModelError(f"restitution must satisfy 0 < r < 1, got {self.r}")


@dataclass(frozen=True)
class DomainBox:
    """Box ``phi <= u <= h``, ``|v| <= hbar`` on which the field is examined."""

    phi: float
    h: float
    hbar: float

    def __post_init__(self):
        if not 0.0 < self.phi < self.h:
            raise ModelError(f"domain box needs 0 < phi < h, got phi={self.phi}, h={self.h}")
        if not self.hbar > 0.0:
            raise ModelError(f"domain box needs hbar > 0, got {self.hbar}")


@dataclass(frozen=True)
class State:
    t: float
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.array(self.y, dtype=float))

    @property
    def x(self):
        return float(self.y[0])

    @property
    def v(self):
        return float(self.y[1])


@dataclass(frozen=True)
class HybridSystem:
    """Complete model definition.

    For four-state systems ``aux`` returns the derivatives of ``(x3, x4)``;
    the guard and impact law act on the ``(x1, x2)`` pair only and the
    coupling is one-way.
    """

    field: VectorField
    guard: Guard
    impact: ImpactLaw
    domain: Optional[DomainBox] = None
    aux: Optional[AuxField] = None
    aux_dim: int = 0
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if (self.aux is None) != (self.aux_dim == 0):
            raise ModelError("aux and aux_dim must be given together")

    @property
    def dimension(self):
        return 2 + self.aux_dim

    @property
    def delay(self):
        return getattr(self.field, "delay", None)

    def acceleration(self, x, v, t):
        return self.field(x, v, t)

    def check_state(self, state: State):
        if state.y.shape != (self.dimension,):
            raise ModelError(
                f"state has {state.y.size} components, system dimension is {self.dimension}"
            )


def guard_value(guard: Guard, x, t):
    """Signed distance to the guard; negative means penetration."""
    return guard.value(x, t)


def apply_impact(law: ImpactLaw, v_pre, surface_velocity=0.0, v_graze=DEFAULT_GRAZE):
    """Newtonian restitution relative to a (possibly moving) surface."""
    rel = v_pre - surface_velocity
    if abs(rel) < v_graze:
        raise GrazingImpact(f"relative approach speed {abs(rel):.3g} below {v_graze:.3g}")
    if rel > 0:
        raise InvalidApproach(f"relative velocity {rel:.6g} points away from the surface")
    return surface_velocity - law.r * rel


def kinetic_energy_ratio(law: ImpactLaw):
    return law.r**2
