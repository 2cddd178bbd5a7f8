"""Impact oscillator chattering toolkit.

Event-driven simulation of a bead bouncing on a (possibly moving) surface,
detection of accumulating impacts, sampled checks of sufficient conditions
for chattering, and delayed-feedback control.
"""

from .catalog import get_spec, instantiate
from .config import RunConfig, load_config, parse_config
from .control import classify_outcome, simulate_controlled
from .engine import (
    ImpactEvent,
    Trajectory,
    ZenoOptions,
    ZenoReport,
    detect_zeno,
    simulate,
    simulate_truncated,
)
from .expr import ExpressionField, parse_expression
from .integrator import StepControl
from .model import DomainBox, FixedGuard, HybridSystem, ImpactLaw, SinusoidalGuard, State
from .theorem import theorem_verdict

__version__ = "0.1.0"

__all__ = [
    "DomainBox", "ExpressionField", "FixedGuard", "HybridSystem", "ImpactEvent", "ImpactLaw", "RunConfig",
    "SinusoidalGuard", "State", "StepControl", "Trajectory", "ZenoOptions", "ZenoReport", "get_spec",
    "classify_outcome", "detect_zeno", "instantiate", "load_config", "parse_config", "parse_expression",
    "simulate", "simulate_controlled", "simulate_truncated", "theorem_verdict",
]
