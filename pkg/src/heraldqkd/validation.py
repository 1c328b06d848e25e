"""Built-in oracle checks: full-mode simulation against the closed forms."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Mapping

from scipy.optimize import brentq

from . import chsh, fock
from .chsh import MeasurementSettings
from .fock import total_weight
from .schemes import (
    OUTPUT_MODES,
    SchemeConfig,
    maximally_entangled_ket,
    amplifier_closed_form,
    relay_closed_form,
    amplifier_closed_form_herald,
    run_amplifier,
    run_relay,
)
from .sources import lossy_pair_source

AMPLIFIER_GRID = list(itertools.product((0.1, 0.5, 1.0), (0.5, 0.9, 0.99), (0.01, 0.1, 1.0)))
SIMPLEX_GRID = [(i / 3, j / 3, (3 - i - j) / 3) for i in range(4) for j in range(4 - i)]
DETECTION_THRESHOLD = 2 * (math.sqrt(2) - 1)


@dataclass
class CheckResult:
    name: str
    max_delta: float
    tolerance: float
    seconds: float = 0.0
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.max_delta <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{status}  {self.name:<28} max|delta|={self.max_delta:.3e}  tol={self.tolerance:.1e}  ({self.seconds:.2f}s){extra}"


def _timed(name, tolerance, fn) -> CheckResult:
    t0 = time.perf_counter()
    delta, detail = fn()
    return CheckResult(name, delta, tolerance, time.perf_counter() - t0, detail)


def amplifier_oracle_config(p: float, t: float, eta_t: float) -> SchemeConfig:
    return SchemeConfig("amplifier", t=t, source_model="oracle", p=p, eta_t=eta_t)


def relay_oracle_config(p0: float, p1: float, p2: float) -> SchemeConfig:
    probs = (p0, p1, p2)
    return SchemeConfig("relay", source_model="oracle", pair_probs_ab=probs, pair_probs_bb=probs, eta_t=1.0)


def check_amplifier_state(corrections: Mapping | None = None) -> CheckResult:
    """Every heralded pattern of the ideal amplifier against the per-pattern closed form."""

    def run():
        worst = 0.0
        for p, t, eta_t in AMPLIFIER_GRID:
            out = run_amplifier(amplifier_oracle_config(p, t, eta_t), corrections=corrections)
            target = amplifier_closed_form(p, t, eta_t)
            for state in out.pattern_states.values():
                worst = max(worst, fock.max_abs_difference(state, target))
        return worst, f"{len(AMPLIFIER_GRID)} grid points x 4 patterns"

    return _timed("amplifier conditional state", 1e-10, run)


def check_amplifier_herald() -> CheckResult:
    def run():
        worst = 0.0
        for p, t, eta_t in AMPLIFIER_GRID:
            out = run_amplifier(amplifier_oracle_config(p, t, eta_t))
            worst = max(worst, abs(out.herald_probability - amplifier_closed_form_herald(p, t, eta_t)))
        return worst, ""

    return _timed("amplifier success probability", 1e-10, run)


def check_relay_state(corrections: Mapping | None = None) -> CheckResult:
    def run():
        worst = 0.0
        for probs in SIMPLEX_GRID:
            out = run_relay(relay_oracle_config(*probs), corrections=corrections)
            worst = max(worst, fock.max_abs_difference(out.sigma, relay_closed_form(*probs)))
            worst = max(worst, abs(out.herald_probability - total_weight(relay_closed_form(*probs))))
        return worst, f"{len(SIMPLEX_GRID)} simplex points"

    return _timed("relay conditional state", 1e-10, run)


def small_lambda_relay(lam: float = 1e-3):
    """(mu_cc, fidelity, S_det) of the SPDC relay with ideal devices."""
    cfg = SchemeConfig("relay", lambda_ab=lam, lambda_bb=lam)
    sigma = run_relay(cfg).sigma
    report = chsh.analyze(sigma, MeasurementSettings(eta_det=1.0))
    fid = fock.fidelity(sigma, maximally_entangled_ket(sigma.registry))
    return report.mu_cc, fid, report.s_det


def check_small_lambda() -> list:
    t0 = time.perf_counter()
    mu, fid, s_det = small_lambda_relay()
    dt = time.perf_counter() - t0
    return [
        CheckResult("small-lambda mu_cc", abs(mu - 0.5), 0.01, dt, f"mu_cc={mu:.6f}"),
        CheckResult("small-lambda fidelity", abs(fid - 0.5), 0.01, 0.0, f"F={fid:.6f}"),
        CheckResult("small-lambda S_det", abs(s_det - (1 + math.sqrt(2))), 0.01, 0.0, f"S={s_det:.6f}"),
    ]


def direct_pair_state() -> fock.MixedState:
    """A maximally entangled pair handed straight to both measurement devices."""
    return lossy_pair_source(1.0, OUTPUT_MODES)


def s_det_direct(eta: float) -> float:
    return chsh.chsh_deterministic(direct_pair_state(), MeasurementSettings(eta_det=eta))


def detection_threshold() -> float:
    """Efficiency at which the deterministic-assignment CHSH value of a direct pair crosses 2."""
    return brentq(lambda eta: s_det_direct(eta) - 2.0, 0.5, 0.99, xtol=1e-12)


def check_threshold() -> CheckResult:
    def run():
        eta = detection_threshold()
        return abs(eta - DETECTION_THRESHOLD), f"eta*={eta:.6f}"

    return _timed("detection threshold", 1e-3, run)


def check_chsh_identity() -> CheckResult:
    """S_det = mu_cc S_cc + 2 (1 - mu_cc) whenever cross terms vanish."""

    def run():
        worst = 0.0
        settings = MeasurementSettings(eta_det=1.0)
        for probs in SIMPLEX_GRID:
            if probs[1] == 0:
                continue
            sigma = run_relay(relay_oracle_config(*probs)).sigma
            mu, s_cc = chsh.chsh_conclusive(sigma, settings)
            s_det = chsh.chsh_deterministic(sigma, settings)
            worst = max(worst, abs(s_det - (mu * s_cc + 2 * (1 - mu))))
        return worst, ""

    return _timed("deterministic CHSH identity", 1e-10, run)


def run_all(amplifier_corrections: Mapping | None = None, relay_corrections: Mapping | None = None) -> list:
    results = [
        check_amplifier_state(amplifier_corrections),
        check_amplifier_herald(),
        check_relay_state(relay_corrections),
    ]
    results += check_small_lambda()
    results += [check_threshold(), check_chsh_identity()]
    return results


def report(results, echo: Callable[[str], None] = print) -> bool:
    for r in results:
        echo(r.line())
    ok = all(r.passed for r in results)
    echo(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return ok
