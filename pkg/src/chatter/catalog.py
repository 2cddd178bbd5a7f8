"""Built-in models with their published parameters as defaults."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import UnknownModel, UnknownParameter
from .model import DomainBox, FixedGuard, HybridSystem, ImpactLaw, SinusoidalGuard, State


@dataclass(frozen=True)
class Param:
    name: str
    default: float
    units: str = ""
    doc: str = ""


@dataclass(frozen=True)
class Control:
    gain: float
    delay: float


@dataclass
class ModelInstance:
    name: str
    system: HybridSystem
    box: Optional[DomainBox]
    init: State
    t_end: float
    params: Dict[str, float]
    expression: str
    control: Optional[Control] = None


@dataclass(frozen=True)
class ModelSpec:
    name: str
    description: str
    params: Tuple[Param, ...]
    builder: Callable[[Dict[str, float]], ModelInstance] = field(repr=False)
    # config keys x0 / v0 map onto these parameter names
    init_keys: Tuple[str, str] = ("x0", "v0")

    def defaults(self):
        return {p.name: p.default for p in self.params}

    def param_names(self):
        return [p.name for p in self.params]


def _expr_num(value):
    text = repr(float(value))
    return f"({text})" if text.startswith("-") else text


def _example1(p):
    phi = p["phi"]

    def f(x, v, t):
        return -np.cos(v) - x**3

    system = HybridSystem(f, FixedGuard(phi), ImpactLaw(p["r"]), name="example1")
    box = DomainBox(phi, p["h"], p["hbar"])
    return ModelInstance("example1", system, box, State(p["t0"], [p["x0"], p["v0"]]), p["t_end"], p,
                         "-cos(v) - x^3")


def _bouncing_ball(p):
    g = p["g"]

    def f(x, v, t):
        return -g + 0.0 * x

    system = HybridSystem(f, FixedGuard(p["phi"]), ImpactLaw(p["r"]), name="bouncing_ball")
    box = DomainBox(p["phi"], p["h"], p["hbar"]) if 0 < p["phi"] < p["h"] else None
    return ModelInstance("bouncing_ball", system, box, State(p["t0"], [p["x0"], p["v0"]]), p["t_end"], p,
                         f"-{_expr_num(g)}")


def _vibrating_table(p):
    g = p["g"]

    def f(x, v, t):
        return -g + 0.0 * x

    guard = SinusoidalGuard(p["X0"], p["omega"])
    system = HybridSystem(f, guard, ImpactLaw(p["r"]), name="vibrating_table")
    box = DomainBox(p["X0"] / 10.0, p["h"], p["hbar"])
    t0 = p["t0"] if not math.isnan(p["t0"]) else 2.0 * math.pi / p["omega"]
    params = dict(p, t0=t0)
    t_end = t0 + p["duration"]
    return ModelInstance("vibrating_table", system, box, State(t0, [p["x0"], p["v0"]]), t_end, params,
                         f"-{_expr_num(g)}")


def _moon_holmes(p):
    delta, gamma, w = p["delta"], p["gamma"], p["w"]

    def f(x, v, t):
        return -delta * v + x - x**3 + gamma * np.cos(w * t)

    system = HybridSystem(f, FixedGuard(p["phi"]), ImpactLaw(p["r"]), name="moon_holmes")
    box = DomainBox(p["phi"], p["h"], p["hbar"])
    expr = (f"-{_expr_num(delta)}*v + x - x^3 + {_expr_num(gamma)}*cos({_expr_num(w)}*t)")
    return ModelInstance("moon_holmes", system, box, State(p["t0"], [p["x0"], p["v0"]]), p["t_end"], p, expr)


def _moon_holmes_autonomous(p):
    def f(x, v, t):
        return x - x**3 + 0.0 * v

    system = HybridSystem(f, FixedGuard(p["phi"]), ImpactLaw(p["r"]), name="moon_holmes_autonomous")
    box = DomainBox(p["phi"], p["h"], p["hbar"])
    return ModelInstance("moon_holmes_autonomous", system, box, State(p["t0"], [p["x0"], p["v0"]]),
                         p["t_end"], p, "x - x^3")


def _coupled_chatter(p):
    g, mass, c, k, a = p["g"], p["mass"], p["c"], p["k"], p["forcing"]

    def f(x, v, t):
        return -g + 0.0 * x

    def aux(t, y):
        return (y[3], (-k * y[2] - c * y[3] + a * y[1] ** 2) / mass)

    system = HybridSystem(f, FixedGuard(p["phi"]), ImpactLaw(p["r"]), aux=aux, aux_dim=2,
                          name="coupled_chatter")
    box = DomainBox(p["phi"], p["h"], p["hbar"])
    init = State(p["t0"], [p["x1_0"], p["x2_0"], p["x3_0"], p["x4_0"]])
    return ModelInstance("coupled_chatter", system, box, init, p["t_end"], p, f"-{_expr_num(g)}")


def _pyragas_example1(p):
    phi = p["phi"]

    def f(x, v, t):
        return -x**3 - np.cos(v)

    system = HybridSystem(f, FixedGuard(phi), ImpactLaw(p["r"]), name="pyragas_example1")
    box = DomainBox(phi, p["h"], p["hbar"])
    return ModelInstance("pyragas_example1", system, box, State(p["t0"], [p["x1_0"], p["x2_0"]]), p["t_end"],
                         p, "-x^3 - cos(v)", control=Control(p["C"], p["tau"]))


_COMMON = (Param("t0", 0.0, "s", "initial time"),)

_SPECS = [
    ModelSpec("example1", "x'' = -cos(x') - x^3, impacts at x = 2", (
        Param("phi", 2.0, "m", "guard position"),
        Param("r", 0.8, "", "restitution"),
        Param("x0", 2.1, "m"), Param("v0", 0.0, "m/s"),
        Param("h", 2.5, "m", "box upper position"), Param("hbar", 7.0, "m/s", "box velocity bound"),
        Param("t_end", 3.0, "s"),
    ) + _COMMON, _example1),
    ModelSpec("bouncing_ball", "free fall x'' = -g onto a fixed floor", (
        Param("g", 9.8, "m/s^2"), Param("phi", 0.0, "m"), Param("r", 0.5, ""),
        Param("x0", 2.0, "m"), Param("v0", 0.0, "m/s"),
        Param("h", 2.5, "m"), Param("hbar", 7.0, "m/s"),
        Param("t_end", 3.0, "s"),
    ) + _COMMON, _bouncing_ball),
    ModelSpec("vibrating_table", "bead on a table moving as X0 sin(omega t)", (
        Param("g", 9.8, "m/s^2"), Param("X0", 1.0, "m", "table amplitude"),
        Param("omega", 0.29, "1/s", "table frequency"), Param("r", 0.9, ""),
        Param("x0", 1.9, "m"), Param("v0", 0.0, "m/s"),
        Param("t0", math.nan, "s", "initial time; NaN selects 2 pi / omega"),
        Param("h", 2.0, "m"), Param("hbar", 7.0, "m/s"),
        Param("duration", 25.0, "s", "simulated span after t0"),
    ), _vibrating_table),
    ModelSpec("moon_holmes", "x'' = -delta x' + x - x^3 + gamma cos(w t) with an obstacle", (
        Param("phi", 1.1, "m"), Param("delta", 0.02, "1/s"), Param("gamma", 0.02, "m/s^2"),
        Param("w", 0.1, "1/s"), Param("r", 0.9, ""),
        Param("x0", 1.3, "m"), Param("v0", 0.0, "m/s"),
        Param("h", 1.5, "m"), Param("hbar", 3.0, "m/s"), Param("t_end", 40.0, "s"),
    ) + _COMMON, _moon_holmes),
    ModelSpec("moon_holmes_autonomous", "x'' = x - x^3 with an obstacle at phi", (
        Param("phi", 1.1, "m"), Param("r", 0.9, ""),
        Param("x0", 1.3, "m"), Param("v0", 0.0, "m/s"),
        Param("h", 1.5, "m"), Param("hbar", 3.0, "m/s"), Param("t_end", 40.0, "s"),
    ) + _COMMON, _moon_holmes_autonomous),
    ModelSpec("coupled_chatter", "bouncing ball driving a mass-spring-damper through 20 x2^2", (
        Param("g", 9.8, "m/s^2"), Param("phi", 1.0, "m"), Param("r", 0.9, ""),
        Param("mass", 1.0, "kg"), Param("c", 3.0, "N s/m"), Param("k", 2.0, "N/m"),
        Param("forcing", 20.0, "", "coefficient of x2^2 in x4'"),
        Param("x1_0", 6.0), Param("x2_0", 0.0), Param("x3_0", 10.0), Param("x4_0", -1000.0),
        Param("h", 6.5, "m"), Param("hbar", 12.0, "m/s"), Param("t_end", 30.0, "s"),
    ) + _COMMON, _coupled_chatter, init_keys=("x1_0", "x2_0")),
    ModelSpec("pyragas_example1", "example1 field with delay feedback C [x(t - tau) - x(t)]", (
        Param("phi", 2.0, "m"), Param("r", 0.6, ""),
        Param("C", -30.0, "1/s^2", "feedback gain"), Param("tau", 1.0, "s", "delay"),
        Param("x1_0", 3.0, "m"), Param("x2_0", 0.0, "m/s"),
        Param("h", 2.5, "m"), Param("hbar", 7.0, "m/s"), Param("t_end", 70.0, "s"),
    ) + _COMMON, _pyragas_example1, init_keys=("x1_0", "x2_0")),
]

_BY_NAME = {s.name: s for s in _SPECS}


def catalog() -> List[ModelSpec]:
    return list(_SPECS)


def get_spec(name) -> ModelSpec:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise UnknownModel(name) from None


def instantiate(name, overrides: Optional[Mapping[str, float]] = None) -> ModelInstance:
    spec = get_spec(name)
    params = spec.defaults()
    for key, value in (overrides or {}).items():
        if key in params:
            params[key] = float(value)
        elif key in ("x0", "v0") and spec.init_keys != ("x0", "v0"):
            params[spec.init_keys[("x0", "v0").index(key)]] = float(value)
        else:
            raise UnknownParameter(key, f"model {name!r} has no parameter {key!r}")
    return spec.builder(params)
