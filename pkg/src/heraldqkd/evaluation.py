"""Fast rate evaluation by reweighting precomputed scheme components.

A :class:`RateModel` runs the full-mode optics once for a fixed distance and
set of efficiencies, stores every component's photon-number blocks and
outcome tables, and then evaluates any pump intensities and beamsplitter
transmittance as a weighted sum.  ``evaluate_point`` is the direct route,
which rebuilds the state from scratch.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import chsh
from .chsh import MeasurementSettings, RateReport
from .schemes import SchemeConfig, expand_scheme, run_scheme, spdc_pair_distribution

# parameters a RateModel can vary without rebuilding
FREE_PARAMETERS = ("lambda_ab", "lambda_bb", "lambda_single", "t", "p", "pair_probs_ab", "pair_probs_bb")


def evaluate_point(cfg: SchemeConfig, settings: MeasurementSettings | None = None) -> RateReport:
    """Direct full-mode evaluation of one configuration."""
    settings = settings or MeasurementSettings(eta_det=cfg.eta_det)
    outcome = run_scheme(cfg)
    return chsh.report_from_tables(chsh.setting_tables(outcome.sigma, settings), outcome.herald_probability)


class RateModel:
    """Reweighting evaluator for one scheme at fixed distance and efficiencies."""

    def __init__(self, cfg: SchemeConfig, settings: MeasurementSettings | None = None):
        self.template = cfg
        self.settings = settings or MeasurementSettings(eta_det=cfg.eta_det)
        comps = expand_scheme(cfg)
        self.components = comps
        self._ab = np.array([c.ab for c in comps], dtype=int)
        self._bb = np.array([c.bb for c in comps], dtype=int)
        self._singles = np.array([c.singles for c in comps], dtype=float)
        self._j = np.array([c.transmitted for c in comps], dtype=float)
        self._k = np.array([c.reflected for c in comps], dtype=float)
        self._pre_loss = comps[0].output_loss if comps else (1.0, 1.0)
        self._blocks = [chsh.number_blocks(c.state) for c in comps]
        self._tables = self._component_tables(self.settings)
        self._block_stacks = None

    def _component_tables(self, settings: MeasurementSettings) -> np.ndarray:
        out = np.zeros((len(self.components), 5, 3, 3))
        for i, blocks in enumerate(self._blocks):
            out[i] = chsh.setting_tables(blocks, settings, self._pre_loss)
        return out

    def _check(self, cfg: SchemeConfig):
        for name in ("scheme", "distance_km", "alpha_db_per_km", "eta_c", "eta_det", "n_max_pairs",
                     "source_model", "eta_t"):
            if getattr(cfg, name) != getattr(self.template, name):
                raise ValueError(f"{name} differs from the model's template; build a new RateModel")

    def config(self, **params) -> SchemeConfig:
        unknown = set(params) - set(FREE_PARAMETERS)
        if unknown:
            raise ValueError(f"cannot vary {sorted(unknown)} without rebuilding the model")
        return replace(self.template, **params)

    def weights(self, cfg: SchemeConfig) -> np.ndarray:
        self._check(cfg)
        n_src = cfg.n_max_pairs + 1

        def pair_table(lam, probs, size):
            if cfg.source_model == "oracle" and probs is not None:
                table = np.zeros(max(size, len(probs)))
                table[: len(probs)] = probs
                return table
            table = np.zeros(max(size, n_src))
            table[:n_src] = spdc_pair_distribution(lam, cfg.n_max_pairs).probs
            return table

        if not self.components:
            return np.zeros(0)
        size = int(max(self._ab.max(), self._bb.max())) + 1
        if cfg.scheme == "relay":
            pab = pair_table(cfg.lambda_ab, cfg.pair_probs_ab, size)
            pbb = pair_table(cfg.lambda_bb, cfg.pair_probs_bb, size)
            return pab[self._ab] * pbb[self._bb]
        if cfg.source_model == "oracle":
            pab = np.array([1 - cfg.p, cfg.p])
        else:
            pab = pair_table(cfg.lambda_ab, None, size)
        w = pab[self._ab]
        if cfg.source_model == "spdc":
            lam = cfg.lambda_single
            w = w * lam**self._singles / (1 + lam) ** (self._singles + 2)
        return w * (2 * cfg.t) ** self._j * (2 * (1 - cfg.t)) ** self._k

    def report(self, cfg: SchemeConfig | None = None, settings: MeasurementSettings | None = None,
               **params) -> RateReport:
        cfg = cfg if cfg is not None else self.config(**params)
        w = self.weights(cfg)
        if settings is None or settings == self.settings:
            tables = np.tensordot(w, self._tables, axes=1) if len(w) else np.zeros((5, 3, 3))
        else:
            tables = chsh.setting_tables(self._combined_blocks(w), settings, self._pre_loss)
        herald = float(np.sum(tables[0]))
        return chsh.report_from_tables(tables, herald)

    def rate(self, analysis: str, **params) -> float:
        return self.report(**params).rate(analysis)

    def _combined_blocks(self, w: np.ndarray) -> dict:
        if self._block_stacks is None:
            stacks: dict = {}
            for i, blocks in enumerate(self._blocks):
                for key, rho in blocks.items():
                    stacks.setdefault(key, ([], []))
                    stacks[key][0].append(i)
                    stacks[key][1].append(rho)
            self._block_stacks = {k: (np.array(ix), np.array(rhos)) for k, (ix, rhos) in stacks.items()}
        return {k: np.tensordot(w[ix], rhos, axes=1) for k, (ix, rhos) in self._block_stacks.items()}
