"""Full-mode linear-optics simulation of heralded DIQKD schemes.

Two heralding schemes are modelled, the teleportation-based qubit amplifier and
the entanglement-swapping relay, from photon sources through key rates.
"""

from .chsh import MeasurementSettings, RateReport, analyze
from .evaluation import RateModel, evaluate_point
from .fock import MixedState, ModeRegistry, PureState
from .optimizer import OptimizationSpec, Variable, grid_oracle, maximize
from .schemes import SchemeConfig, run_amplifier, run_relay, run_scheme

__version__ = "0.1.0"

__all__ = [
    "MeasurementSettings",
    "MixedState",
    "ModeRegistry",
    "OptimizationSpec",
    "PureState",
    "RateModel",
    "RateReport",
    "SchemeConfig",
    "Variable",
    "analyze",
    "evaluate_point",
    "grid_oracle",
    "maximize",
    "run_amplifier",
    "run_relay",
    "run_scheme",
]
