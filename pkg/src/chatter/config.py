"""Run configuration: a flat key/value document (YAML or JSON syntax)."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from dataclasses import field as dc_field
from typing import Dict, Optional, Union

import yaml

from . import catalog
from .catalog import Control, ModelInstance
from .engine import ZenoOptions, truncation_cap
from .errors import ExpressionError, ModelError, SchemaError
from .expr import ExpressionField
from .integrator import StepControl
from .model import FixedGuard, HybridSystem, ImpactLaw, SinusoidalGuard, State

KEYS = (
    "model", "field", "guard", "phi", "X0", "omega", "r", "x0", "v0", "t0", "t_end",
    "rel_tol", "abs_tol", "event_tol", "zeno_dt", "v_stick", "impact_cap",
    "control_C", "control_tau", "out_trace", "out_report", "format",
)
_FLOAT_KEYS = ("phi", "X0", "omega", "r", "x0", "v0", "t0", "t_end", "rel_tol", "abs_tol",
               "event_tol", "zeno_dt", "v_stick", "control_C", "control_tau")
# keys that are model parameters when a catalog model is used
_MODEL_KEYS = ("phi", "X0", "omega", "r", "x0", "v0", "t0", "t_end")

INLINE_T_END = 10.0


@dataclass
class RunConfig:
    model: Optional[str] = None
    field: Optional[str] = None
    guard: str = "fixed"
    phi: Optional[float] = None
    X0: Optional[float] = None
    omega: Optional[float] = None
    r: Optional[float] = None
    x0: Optional[float] = None
    v0: Optional[float] = None
    t0: Optional[float] = None
    t_end: Optional[float] = None
    rel_tol: float = StepControl.rel_tol
    abs_tol: float = StepControl.abs_tol
    event_tol: float = StepControl.event_tol
    zeno_dt: float = ZenoOptions.zeno_dt
    v_stick: float = ZenoOptions.v_stick
    impact_cap: Union[str, int, None] = None
    control_C: Optional[float] = None
    control_tau: Optional[float] = None
    out_trace: Optional[str] = None
    out_report: Optional[str] = None
    format: str = "csv"
    params: Dict[str, float] = dc_field(default_factory=dict)  # extra model parameters

    def to_dict(self):
        d = asdict(self)
        d.pop("params")
        d = {k: v for k, v in d.items() if v is not None}
        d.update(self.params)
        return d

    @property
    def step_control(self):
        return StepControl(rel_tol=self.rel_tol, abs_tol=self.abs_tol, event_tol=self.event_tol)

    @property
    def zeno_options(self):
        return ZenoOptions(zeno_dt=self.zeno_dt, v_stick=self.v_stick)

    def model_overrides(self):
        out = {k: getattr(self, k) for k in _MODEL_KEYS if getattr(self, k) is not None}
        out.update(self.params)
        return out

    def build(self) -> ModelInstance:
        """Instantiate the model (catalog entry or inline expression)."""
        if self.model is not None:
            inst = catalog.instantiate(self.model, self.model_overrides())
        else:
            inst = self._inline()
        if self.control_C is not None:
            tau = self.control_tau if self.control_tau is not None else (
                inst.control.delay if inst.control else None)
            if tau is None:
                raise SchemaError("control_tau", "required when control_C is set")
            inst.control = Control(self.control_C, tau)
        elif self.control_tau is not None and inst.control is not None:
            inst.control = Control(inst.control.gain, self.control_tau)
        return inst

    def _inline(self) -> ModelInstance:
        try:
            fld = ExpressionField(self.field)
        except ExpressionError as exc:
            raise SchemaError("field", str(exc)) from exc
        if self.guard == "fixed":
            guard = FixedGuard(0.0 if self.phi is None else self.phi)
        else:
            if self.X0 is None or self.omega is None:
                raise SchemaError("guard", "sinusoidal guard needs X0 and omega")
            guard = SinusoidalGuard(self.X0, self.omega)
        if self.r is None:
            raise SchemaError("r", "required for an inline field")
        system = HybridSystem(fld, guard, ImpactLaw(self.r), name="inline")
        t0 = 0.0 if self.t0 is None else self.t0
        x0 = guard.position(t0) if self.x0 is None else self.x0
        init = State(t0, [x0, 0.0 if self.v0 is None else self.v0])
        t_end = INLINE_T_END if self.t_end is None else self.t_end
        params = {k: v for k, v in self.to_dict().items() if isinstance(v, float)}
        return ModelInstance("inline", system, None, init, t_end, params, self.field)

    def resolved_cap(self, r):
        if self.impact_cap is None:
            return None
        if self.impact_cap == "auto":
            return truncation_cap(r)
        return int(self.impact_cap)


def _as_float(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
        raise SchemaError(key, f"expected a number, got {value!r}")
    return float(value)


def _impact_cap(value):
    if value is None or (isinstance(value, str) and value.lower() == "none"):
        return None
    if isinstance(value, str) and value.lower() == "auto":
        return "auto"
    if isinstance(value, bool):
        raise SchemaError("impact_cap", "expected auto, none or a positive integer")
    try:
        cap = int(value)
    except (TypeError, ValueError):
        raise SchemaError("impact_cap", f"expected auto, none or a positive integer, got {value!r}") from None
    if cap != value and not isinstance(value, str) or cap < 1:
        raise SchemaError("impact_cap", f"expected a positive integer, got {value!r}")
    return cap


def config_from_mapping(data) -> RunConfig:
    if not isinstance(data, dict):
        raise SchemaError("<root>", "configuration must be a key/value table")
    cfg = RunConfig()
    model_spec = None
    if data.get("model") is not None:
        model_spec = catalog.get_spec(str(data["model"]))
    for key, value in data.items():
        key = str(key)
        if key in _FLOAT_KEYS:
            if value is None:
                continue
            setattr(cfg, key, _as_float(key, value))
        elif key == "impact_cap":
            cfg.impact_cap = _impact_cap(value)
        elif key in ("model", "field", "out_trace", "out_report"):
            setattr(cfg, key, None if value is None else str(value))
        elif key == "guard":
            if value not in ("fixed", "sinusoidal"):
                raise SchemaError("guard", f"expected fixed or sinusoidal, got {value!r}")
            cfg.guard = value
        elif key == "format":
            if value not in ("csv", "json"):
                raise SchemaError("format", f"expected csv or json, got {value!r}")
            cfg.format = value
        elif model_spec is not None and key in model_spec.param_names():
            cfg.params[key] = _as_float(key, value)
        else:
            raise SchemaError(key, "unknown key")
    _validate(cfg, model_spec)
    return cfg


def _validate(cfg: RunConfig, model_spec):
    if (cfg.model is None) == (cfg.field is None):
        raise SchemaError("model", "exactly one of 'model' and 'field' must be given")
    if cfg.r is not None and not 0.0 < cfg.r < 1.0:
        raise SchemaError("r", f"restitution must satisfy 0 < r < 1, got {cfg.r}")
    if "r" in cfg.params and not 0.0 < cfg.params["r"] < 1.0:
        raise SchemaError("r", f"restitution must satisfy 0 < r < 1, got {cfg.params['r']}")
    for key in ("rel_tol", "abs_tol", "event_tol", "zeno_dt", "v_stick", "control_tau"):
        value = getattr(cfg, key)
        if value is not None and not value > 0:
            raise SchemaError(key, "must be positive")
    if cfg.t_end is not None and cfg.t0 is not None and not cfg.t_end > cfg.t0:
        raise SchemaError("t_end", "must exceed t0")
    if model_spec is not None:
        allowed = set(model_spec.param_names()) | {"x0", "v0"}
        for key in _MODEL_KEYS:
            if getattr(cfg, key) is not None and key not in allowed:
                raise SchemaError(key, f"model {model_spec.name!r} has no parameter {key!r}")
    if cfg.field is not None:
        try:
            ExpressionField(cfg.field)
        except ExpressionError as exc:
            raise SchemaError("field", str(exc)) from exc
    try:
        cfg.build()
    except SchemaError:
        raise
    except (ModelError, ValueError) as exc:
        raise SchemaError("model", str(exc)) from exc


def parse_config(text) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("<root>", f"not a valid document: {exc}") from exc
    if data is None:
        data = {}
    return config_from_mapping(data)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())

