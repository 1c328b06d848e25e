"""Per-distance maximization of the key rate over pump intensities and t.

The search runs Nelder-Mead in an unbounded coordinate ``z`` with
``x = lo + (hi - lo) * sigmoid(z)`` (linear variables) or the same map applied
to ``log x`` (log variables), so every evaluated point is inside the bounds.
Rates are positive but tiny and often clamped to zero, so the simplex works on
``-log10(rate)``; in the zero-rate region it follows the unclamped
conditional rate back toward positive territory.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .chsh import MeasurementSettings
from .evaluation import RateModel
from .schemes import SchemeConfig

log = logging.getLogger(__name__)

ANGLE_NAMES = ("a1", "a2", "b1", "b2", "b_key")
T_BOUNDS = (0.01, 0.999)
LAMBDA_BOUNDS = (1e-6, 0.5)
ZERO_RATE_PENALTY = 1e3


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float
    upper: float
    scale: str = "linear"  # or "log"

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)) or not self.lower < self.upper:
            raise ValueError(f"bad bounds for {self.name}: [{self.lower}, {self.upper}]")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"unknown scale {self.scale!r}")
        if self.scale == "log" and self.lower <= 0:
            raise ValueError(f"log-scaled {self.name} needs a positive lower bound")

    def _span(self):
        if self.scale == "log":
            return math.log(self.lower), math.log(self.upper)
        return self.lower, self.upper

    def from_unit(self, u: float) -> float:
        lo, hi = self._span()
        v = lo + (hi - lo) * u
        x = math.exp(v) if self.scale == "log" else v
        return min(max(x, self.lower), self.upper)

    def to_unit(self, x: float) -> float:
        lo, hi = self._span()
        v = math.log(x) if self.scale == "log" else x
        return (v - lo) / (hi - lo)

    def from_z(self, z: float) -> float:
        return self.from_unit(_sigmoid(z))

    def to_z(self, x: float) -> float:
        u = min(max(self.to_unit(x), 1e-12), 1 - 1e-12)
        return math.log(u / (1 - u))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1 / (1 + math.exp(-z))
    e = math.exp(z)
    return e / (1 + e)


@dataclass(frozen=True)
class OptimizationSpec:
    variables: tuple | None = None  # None: default_variables for the scheme
    objective: str = "A"  # analysis A or B
    multistart: int = 8
    fatol: float = 1e-12
    xatol: float = 1e-6
    max_evaluations: int = 600  # per start
    seed: int = 0

    def __post_init__(self):
        if self.objective not in ("A", "B"):
            raise ValueError(f"objective must be 'A' or 'B', got {self.objective!r}")
        if self.multistart < 1:
            raise ValueError("need at least one start")
        names = [v.name for v in self.variables or ()]
        if len(set(names)) != len(names):
            raise ValueError(f"repeated variable in {names}")


def default_variables(cfg: SchemeConfig, angles: bool = False) -> tuple:
    if cfg.scheme == "relay":
        names = ["lambda_ab", "lambda_bb"]
    elif cfg.source_model == "spdc":
        names = ["t", "lambda_ab", "lambda_single"]
    elif cfg.source_model == "oracle":
        names = ["t"]
    else:
        names = ["t", "lambda_ab"]
    out = [
        Variable(n, *T_BOUNDS) if n == "t" else Variable(n, *LAMBDA_BOUNDS, scale="log") for n in names
    ]
    if angles:
        out += [Variable(n, -math.pi / 2, math.pi / 2) for n in ANGLE_NAMES]
    return tuple(out)


@dataclass
class OptimizationResult:
    params: dict
    rate: float
    evaluations: int
    starts: list = field(default_factory=list)  # (start params, start rate, final rate)


# ---------------------------------------------------------------------------
# generic multistart simplex


def _start_points(n_vars: int, count: int, seed: int) -> np.ndarray:
    if n_vars == 0:
        return np.zeros((1, 0))
    halton = qmc.Halton(d=n_vars, scramble=True, seed=seed)
    # keep starts off the box edges, where the logit map is flat
    return 0.05 + 0.9 * halton.random(count)


def _better(rate, params, best_rate, best_params) -> bool:
    if rate > best_rate:
        return True
    if rate == best_rate == 0:
        return True  # zero plateau: keep the last start's point
    if rate == best_rate:
        return tuple(params.values()) < tuple(best_params.values())
    return False


def maximize_function(
    f: Callable[[dict], tuple],
    variables: Sequence[Variable],
    multistart: int = 8,
    seed: int = 0,
    fatol: float = 1e-12,
    xatol: float = 1e-6,
    max_evaluations: int = 600,
) -> OptimizationResult:
    """Maximize ``f(params) -> (value, score)`` where ``score`` is minimized by the simplex.

    ``value`` is what gets reported and compared across starts; ``score`` is
    the (possibly transformed) quantity the simplex descends on.
    """
    variables = tuple(variables)
    evaluations = 0

    def params_of(z):
        return {v.name: v.from_z(zi) for v, zi in zip(variables, z)}

    def score(z):
        nonlocal evaluations
        evaluations += 1
        return f(params_of(z))[1]

    if not variables:
        value, _ = f({})
        return OptimizationResult({}, value, 1, [({}, value, value)])

    best_params, best_value = None, -math.inf
    starts = []
    for u in _start_points(len(variables), multistart, seed):
        z0 = np.array([v.to_z(v.from_unit(ui)) for v, ui in zip(variables, u)])
        start_params = params_of(z0)
        start_value, _ = f(start_params)
        evaluations += 1
        res = minimize(
            score, z0, method="Nelder-Mead",
            options={"xatol": xatol, "fatol": fatol, "maxfev": max_evaluations},
        )
        params = params_of(res.x)
        value, _ = f(params)
        evaluations += 1
        if start_value > value:
            params, value = start_params, start_value
        starts.append((start_params, start_value, value))
        if best_params is None or _better(value, params, best_value, best_params):
            best_params, best_value = params, value
    return OptimizationResult(best_params, best_value, evaluations, starts)


# ---------------------------------------------------------------------------
# key-rate objective


def _apply_params(model: RateModel, params: dict):
    angles = {k: v for k, v in params.items() if k in ANGLE_NAMES}
    physical = {k: v for k, v in params.items() if k not in ANGLE_NAMES}
    cfg = model.config(**physical)
    settings = None
    if angles:
        s = model.settings
        a1, a2 = s.a
        b1, b2 = s.b
        settings = MeasurementSettings(
            a=(angles.get("a1", a1), angles.get("a2", a2)),
            b=(angles.get("b1", b1), angles.get("b2", b2)),
            b_key=angles.get("b_key", s.b_key),
            eta_det=s.eta_det,
        )
    return cfg, settings


def rate_objective(model: RateModel, analysis: str) -> Callable[[dict], tuple]:
    """(rate, simplex score) for one parameter point."""

    def f(params):
        cfg, settings = _apply_params(model, params)
        report = model.report(cfg, settings=settings)
        rate = report.rate(analysis)
        if rate > 0:
            return rate, -math.log10(rate)
        cond = report.rate_a_conditional if analysis == "A" else report.rate_b_conditional
        if not math.isfinite(cond):
            return 0.0, 2 * ZERO_RATE_PENALTY
        return 0.0, ZERO_RATE_PENALTY - cond

    return f


def maximize(spec: OptimizationSpec, cfg_template: SchemeConfig, model: RateModel | None = None) -> OptimizationResult:
    """Best key rate over ``spec.variables`` for the fixed remaining parameters of ``cfg_template``."""
    model = model or RateModel(cfg_template)
    variables = default_variables(cfg_template) if spec.variables is None else spec.variables
    result = maximize_function(
        rate_objective(model, spec.objective), variables,
        multistart=spec.multistart, seed=spec.seed, fatol=spec.fatol,
        xatol=spec.xatol, max_evaluations=spec.max_evaluations,
    )
    log.debug("maximize %s: rate %.3e after %d evaluations", cfg_template.scheme, result.rate, result.evaluations)
    return result


def grid_oracle(
    spec: OptimizationSpec, cfg_template: SchemeConfig, resolution: int = 25, model: RateModel | None = None
) -> OptimizationResult:
    """Exhaustive grid over the (log/linear) box; the independent check on :func:`maximize`."""
    variables = default_variables(cfg_template) if spec.variables is None else spec.variables
    if len(variables) > 3:
        raise ValueError("grid oracle is limited to three variables")
    model = model or RateModel(cfg_template)
    f = rate_objective(model, spec.objective)
    axes = [[v.from_unit(u) for u in np.linspace(0, 1, resolution)] for v in variables]
    best_params, best_value, count = {}, -math.inf, 0
    for point in (np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(variables), -1).T if variables else [()]):
        params = {v.name: float(x) for v, x in zip(variables, point)}
        value, _ = f(params)
        count += 1
        if value > best_value:
            best_params, best_value = params, value
    return OptimizationResult(best_params, best_value, count)
