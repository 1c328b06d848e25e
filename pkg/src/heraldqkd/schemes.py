"""Full-mode models of the teleportation amplifier and the entanglement-swapping relay.

Both setups end in the same linear-optics Bell measurement: the two input
modes meet on a 50:50 beamsplitter, each output port is split by a PBS, and
four number-resolving detectors read ``(port1 h, port1 v, port2 h, port2 v)``.
A herald is one photon in an h detector and one in a v detector, nothing else.
Each of the four such patterns gets its own polarization correction on Bob's
output photon.

Detector inefficiency inside the Bell measurement is uniform over its four
detectors, so it commutes with the passive optics in front of them and is
applied on the two input modes instead.  Photon number in those inputs is
conserved by the beamsplitter, so only source sectors that deliver exactly two
photons are ever combined.

Output modes of every conditional state are ``A_h, A_v, out_h, out_v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import fock
from .fock import MixedState, ModeRegistry, PureState
from .heralding import DetectionPattern, measure_pattern
from .sources import (
    lossy_pair_source,
    heralded_single_source,
    ideal_single_source,
    pair_ket,
    pair_mixture_source,
    spdc_pair_distribution,
)

OUTPUT_MODES = ("A_h", "A_v", "out_h", "out_v")
BSM_PORT1 = ("B_h", "B_v")

# (port1 h, port1 v, port2 h, port2 v) for the two Bell-measurement inputs
HERALD_PATTERNS = {
    "h1v1": (1, 1, 0, 0),
    "h1v2": (1, 0, 0, 1),
    "h2v1": (0, 1, 1, 0),
    "h2v2": (0, 0, 1, 1),
}

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
    "XZ": np.array([[0.0, -1.0], [1.0, 0.0]]),
}

HALF_BS = fock.beamsplitter(0.5)


def channel_transmittance(distance_km: float, alpha_db_per_km: float = 0.2) -> float:
    """Fiber transmission 10^(-alpha L / 10)."""
    if distance_km < 0:
        raise ValueError(f"negative distance {distance_km}")
    if alpha_db_per_km < 0:
        raise ValueError(f"negative loss coefficient {alpha_db_per_km}")
    return 10 ** (-alpha_db_per_km * distance_km / 10)


@dataclass(frozen=True)
class SchemeConfig:
    """Physical and protocol parameters for one scheme evaluation.

    ``source_model`` selects how sources are built:

    * ``"spdc"``: SPDC pair mixtures (and SPDC-heralded singles for the amplifier);
    * ``"ideal_singles"``: SPDC pair source, perfect on-demand single photons;
    * ``"oracle"``: the idealized inputs of the closed forms.  The amplifier
      uses the lossy single-pair source with probability ``p`` and perfect
      single photons; the relay uses the explicit distributions
      ``pair_probs_ab`` / ``pair_probs_bb``.

    ``eta_t`` overrides the distance-derived channel transmission when set.
    """

    scheme: str
    lambda_ab: float = 0.01
    lambda_bb: float = 0.01
    lambda_single: float = 0.05
    t: float = 0.9
    distance_km: float = 0.0
    alpha_db_per_km: float = 0.2
    eta_c: float = 1.0
    eta_det: float = 1.0
    n_max_pairs: int = 4
    source_model: str = "spdc"
    p: float = 1.0
    pair_probs_ab: tuple | None = None
    pair_probs_bb: tuple | None = None
    eta_t: float | None = None

    def __post_init__(self):
        if self.scheme not in ("amplifier", "relay"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.source_model not in ("spdc", "ideal_singles", "oracle"):
            raise ValueError(f"unknown source model {self.source_model!r}")
        for name in ("eta_c", "eta_det"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.eta_t is not None and not 0 <= self.eta_t <= 1:
            raise ValueError(f"eta_t={self.eta_t} outside [0, 1]")
        if self.distance_km < 0:
            raise ValueError(f"negative distance {self.distance_km}")
        if self.n_max_pairs < 1:
            raise ValueError("n_max_pairs must be at least 1")
        if self.scheme == "amplifier" and not 0 < self.t < 1:
            raise ValueError(f"beamsplitter transmittance t={self.t} outside (0, 1)")
        if not 0 < self.p <= 1:
            raise ValueError(f"pair probability p={self.p} outside (0, 1]")
        for name in ("lambda_ab", "lambda_bb", "lambda_single"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def channel_efficiency(self) -> float:
        if self.eta_t is not None:
            return self.eta_t
        return channel_transmittance(self.distance_km, self.alpha_db_per_km)

    @property
    def cap(self) -> int:
        return 2 * self.n_max_pairs

    def with_(self, **changes) -> "SchemeConfig":
        return replace(self, **changes)


@dataclass
class ConditionalOutcome:
    """Unnormalized conditional state on ``OUTPUT_MODES`` plus per-pattern parts."""

    sigma: MixedState
    herald_probability: float
    pattern_states: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# building blocks


def _bell_measurement(
    s: MixedState, port1: tuple, port2: tuple, corrections: Mapping[str, np.ndarray]
) -> dict:
    """Interfere ``port1``/``port2``, project on each herald, correct ``out``.

    ``s`` must already hold exactly two photons in the four input modes, with
    detector loss applied upstream.
    """
    for m1, m2 in zip(port1, port2):
        s = fock.apply_two_mode_unitary(s, m1, m2, HALF_BS)
    detectors = (port1[0], port1[1], port2[0], port2[1])
    results = {}
    for name, counts in HERALD_PATTERNS.items():
        cond = measure_pattern(s, DetectionPattern(tuple(zip(detectors, counts))), 1.0)
        U = corrections.get(name, PAULI["I"])
        cond = fock.apply_two_mode_unitary(cond, "out_h", "out_v", U)
        results[name] = cond
    return results


def _combine_two_photon_sectors(s1: MixedState, modes1, s2: MixedState, modes2) -> MixedState | None:
    sec1 = fock.number_sectors(s1, modes1)
    sec2 = fock.number_sectors(s2, modes2)
    parts = []
    for n1, part1 in sec1.items():
        part2 = sec2.get(2 - n1)
        if part2 is None or not part1.branches or not part2.branches:
            continue
        parts.append(fock.tensor_product(part1, part2))
    if not parts:
        return None
    return fock.mix(parts)


def _finish(
    pattern_states: dict, out_losses: Mapping[str, float], registry: ModeRegistry
) -> ConditionalOutcome:
    finished = {}
    for name, cond in pattern_states.items():
        if cond is None:
            cond = MixedState(registry)
        else:
            cond = fock.reorder(fock.apply_losses(cond, out_losses), OUTPUT_MODES)
        finished[name] = cond
    sigma = fock.mix(list(finished.values()))
    return ConditionalOutcome(sigma, fock.total_weight(sigma), finished)


def _output_registry(cfg: SchemeConfig) -> ModeRegistry:
    return ModeRegistry(OUTPUT_MODES, cfg.cap)


def _pair_source(cfg: SchemeConfig, lam: float, probs, modes) -> MixedState:
    if cfg.source_model == "oracle" and probs is not None:
        return pair_mixture_source(probs, modes, cap=cfg.cap)
    return pair_mixture_source(spdc_pair_distribution(lam, cfg.n_max_pairs), modes, cap=cfg.cap)


# ---------------------------------------------------------------------------
# amplifier


def _amplifier_singles(cfg: SchemeConfig) -> MixedState:
    """Both single photons merged on a PBS into the (out_h, out_v) spatial mode."""
    if cfg.source_model in ("oracle", "ideal_singles"):
        sh = ideal_single_source("h", ("out_h", "X_v"), cap=cfg.cap)
        sv = ideal_single_source("v", ("X_h", "out_v"), cap=cfg.cap)
    else:
        sh = heralded_single_source(
            cfg.lambda_single, cfg.eta_det, "h", cfg.n_max_pairs, ("out_h", "X_v"), cap=cfg.cap
        )
        sv = heralded_single_source(
            cfg.lambda_single, cfg.eta_det, "v", cfg.n_max_pairs, ("X_h", "out_v"), cap=cfg.cap
        )
    # the PBS's other output port only ever sees vacuum
    merged = fock.trace_out(fock.tensor_product(sh, sv), ("X_v", "X_h"))
    return fock.reorder(merged, ("out_h", "out_v"))


def run_amplifier(cfg: SchemeConfig, corrections: Mapping[str, np.ndarray] | None = None) -> ConditionalOutcome:
    """Teleportation-based heralded qubit amplifier on Bob's side."""
    if cfg.scheme != "amplifier":
        raise ValueError("run_amplifier needs an amplifier config")
    if corrections is None:
        corrections = amplifier_corrections()
    eta_t = cfg.channel_efficiency

    if cfg.source_model == "oracle":
        ab = lossy_pair_source(cfg.p, ("A_h", "A_v", "B_h", "B_v"), cap=cfg.cap)
    else:
        ab = _pair_source(cfg, cfg.lambda_ab, None, ("A_h", "A_v", "B_h", "B_v"))
    eta_b = cfg.eta_c * eta_t * cfg.eta_det
    ab = fock.apply_losses(ab, {"B_h": eta_b, "B_v": eta_b})

    singles = fock.apply_losses(_amplifier_singles(cfg), {"out_h": cfg.eta_c, "out_v": cfg.eta_c})
    reg_r = ModeRegistry(("R_h", "R_v"), cfg.cap)
    singles = fock.tensor_product(singles, MixedState.vacuum(reg_r))
    T = fock.beamsplitter(cfg.t)
    singles = fock.apply_two_mode_unitary(singles, "out_h", "R_h", T)
    singles = fock.apply_two_mode_unitary(singles, "out_v", "R_v", T)
    singles = fock.apply_losses(singles, {"R_h": cfg.eta_det, "R_v": cfg.eta_det})

    joint = _combine_two_photon_sectors(ab, ("B_h", "B_v"), singles, ("R_h", "R_v"))
    out_losses = {"A_h": cfg.eta_c, "A_v": cfg.eta_c}
    if joint is None:
        return _finish({name: None for name in HERALD_PATTERNS}, out_losses, _output_registry(cfg))
    patterns = _bell_measurement(joint, ("B_h", "B_v"), ("R_h", "R_v"), corrections)
    return _finish(patterns, out_losses, _output_registry(cfg))


# ---------------------------------------------------------------------------
# relay


def run_relay(cfg: SchemeConfig, corrections: Mapping[str, np.ndarray] | None = None) -> ConditionalOutcome:
    """Entanglement swapping between Alice's pair source and Bob's local pair source."""
    if cfg.scheme != "relay":
        raise ValueError("run_relay needs a relay config")
    if corrections is None:
        corrections = relay_corrections()
    eta_t = cfg.channel_efficiency

    ab = _pair_source(cfg, cfg.lambda_ab, cfg.pair_probs_ab, ("A_h", "A_v", "B_h", "B_v"))
    bb = _pair_source(cfg, cfg.lambda_bb, cfg.pair_probs_bb, ("C_h", "C_v", "out_h", "out_v"))
    eta_b = cfg.eta_c * eta_t * cfg.eta_det
    eta_cc = cfg.eta_c * cfg.eta_det
    ab = fock.apply_losses(ab, {"B_h": eta_b, "B_v": eta_b})
    bb = fock.apply_losses(bb, {"C_h": eta_cc, "C_v": eta_cc})

    joint = _combine_two_photon_sectors(ab, ("B_h", "B_v"), bb, ("C_h", "C_v"))
    out_losses = {m: cfg.eta_c for m in OUTPUT_MODES}
    if joint is None:
        return _finish({name: None for name in HERALD_PATTERNS}, out_losses, _output_registry(cfg))
    patterns = _bell_measurement(joint, ("B_h", "B_v"), ("C_h", "C_v"), corrections)
    return _finish(patterns, out_losses, _output_registry(cfg))


def run_scheme(cfg: SchemeConfig) -> ConditionalOutcome:
    return run_amplifier(cfg) if cfg.scheme == "amplifier" else run_relay(cfg)


# ---------------------------------------------------------------------------
# corrections, found by brute force in the ideal limit


def maximally_entangled_ket(registry: ModeRegistry | None = None) -> PureState:
    """(a_h^+ b_h^+ + a_v^+ b_v^+)/sqrt(2) on the output modes."""
    registry = registry or ModeRegistry(OUTPUT_MODES)
    return pair_ket(1, registry, OUTPUT_MODES)


def derive_corrections(run, cfg: SchemeConfig, candidates: Mapping[str, np.ndarray] = PAULI) -> dict:
    """Pick, per herald pattern, the candidate rotation giving the target ket.

    ``cfg`` must be an ideal configuration whose heralded states are pure
    maximally entangled pairs up to a local polarization unitary.
    """
    raw = run(cfg, corrections={})
    target = maximally_entangled_ket(_output_registry(cfg))
    chosen = {}
    for name, state in raw.pattern_states.items():
        best, best_f = None, -1.0
        for label, U in candidates.items():
            rotated = fock.apply_two_mode_unitary(state, "out_h", "out_v", U)
            f = fock.fidelity(rotated, target)
            if f > best_f + 1e-12:
                best, best_f = label, f
        if best_f < 1 - 1e-9:
            raise RuntimeError(f"no candidate correction reaches the target for pattern {name} (best {best_f})")
        chosen[name] = best
    return chosen


@lru_cache(maxsize=None)
def _amplifier_correction_labels() -> tuple:
    cfg = SchemeConfig("amplifier", t=0.5, source_model="oracle", p=1.0, eta_t=1.0)
    return tuple(sorted(derive_corrections(run_amplifier, cfg).items()))


@lru_cache(maxsize=None)
def _relay_correction_labels() -> tuple:
    cfg = SchemeConfig("relay", source_model="oracle", pair_probs_ab=(0, 1), pair_probs_bb=(0, 1), eta_t=1.0)
    return tuple(sorted(derive_corrections(run_relay, cfg).items()))


def amplifier_corrections() -> dict:
    return {name: PAULI[label] for name, label in _amplifier_correction_labels()}


def relay_corrections() -> dict:
    return {name: PAULI[label] for name, label in _relay_correction_labels()}


# ---------------------------------------------------------------------------
# closed forms


def amplifier_closed_form(p: float, t: float, eta_t: float) -> MixedState:
    """Amplifier state conditioned on one herald pattern, ideal devices."""
    reg = ModeRegistry(OUTPUT_MODES)
    vac = PureState.vacuum(reg)
    ah = PureState.fock(reg, {"A_h": 1})
    av = PureState.fock(reg, {"A_v": 1})
    return MixedState(
        reg,
        [
            ((1 - p) * (1 - t) ** 2 / 4, vac),
            (p * (1 - eta_t) * (1 - t) ** 2 / 8, ah),
            (p * (1 - eta_t) * (1 - t) ** 2 / 8, av),
            (p * eta_t * t * (1 - t) / 4, maximally_entangled_ket(reg)),
        ],
    )


def amplifier_closed_form_herald(p: float, t: float, eta_t: float) -> float:
    """Amplifier herald probability summed over the four accepted patterns."""
    return (1 - t) * (1 - t - p * eta_t * (1 - 2 * t))


def relay_closed_form(p0: float, p1: float, p2: float) -> MixedState:
    """Relay state summed over all heralds, ideal devices and channel."""
    reg = ModeRegistry(OUTPUT_MODES)
    return MixedState(
        reg,
        [
            (p0 * p2 / 3, PureState.fock(reg, {"A_h": 1, "A_v": 1})),
            (p0 * p2 / 3, PureState.fock(reg, {"out_h": 1, "out_v": 1})),
            (p1**2 / 2, maximally_entangled_ket(reg)),
        ],
    )


def amplifier_state_coefficients(state: MixedState) -> dict:
    """Project a conditional state on the four components of the amplifier closed form."""
    reg = state.registry
    probes = {
        "vacuum": PureState.vacuum(reg),
        "a_h": PureState.fock(reg, {"A_h": 1}),
        "a_v": PureState.fock(reg, {"A_v": 1}),
        "entangled": maximally_entangled_ket(reg),
    }
    return {
        name: sum(w * abs(fock.inner_product(ket, psi)) ** 2 for w, psi in state.branches)
        for name, ket in probes.items()
    }


# ---------------------------------------------------------------------------
# component expansion
#
# The conditional state is linear in the source weights.  For the amplifier,
# every final branch also carries a definite number J of photons transmitted by
# the t-beamsplitter out of m photons entering it, so its weight scales exactly
# as t^J (1-t)^(m-J).  Running the optics once with unit source weights and
# t = 1/2 therefore gives every (lambda, t) point by reweighting.


@dataclass
class Component:
    """One piece of an expanded conditional state.

    ``ab``/``bb`` index the pair-number distributions, ``singles`` is the total
    photon number emitted by the two single-photon sources, and
    ``transmitted``/``reflected`` count photons through the t-beamsplitter
    (amplifier only).  ``state`` omits the coupler loss still pending on each
    party's output modes, recorded in ``output_loss`` as (Alice, Bob); that loss
    is uniform over h and v, so it can be merged into the detector efficiency.
    """

    state: MixedState
    ab: int
    bb: int = -1
    singles: int = 0
    transmitted: int = 0
    reflected: int = 0
    output_loss: tuple = (1.0, 1.0)


def _pair_weights(cfg: SchemeConfig, lam: float, probs) -> tuple:
    if cfg.source_model == "oracle" and probs is not None:
        return tuple(probs)
    return spdc_pair_distribution(lam, cfg.n_max_pairs).probs


def _at(seq, i):
    return seq[i] if 0 <= i < len(seq) else 0.0


def component_weight(c: Component, cfg: SchemeConfig) -> float:
    """Weight multiplying ``c.state`` for the parameters in ``cfg``."""
    if cfg.scheme == "relay":
        pab = _pair_weights(cfg, cfg.lambda_ab, cfg.pair_probs_ab)
        pbb = _pair_weights(cfg, cfg.lambda_bb, cfg.pair_probs_bb)
        return _at(pab, c.ab) * _at(pbb, c.bb)
    pab = (1 - cfg.p, cfg.p) if cfg.source_model == "oracle" else _pair_weights(cfg, cfg.lambda_ab, None)
    w = _at(pab, c.ab)
    if cfg.source_model == "spdc":
        # q_nh q_nv depends only on nh + nv
        lam = cfg.lambda_single
        w *= lam**c.singles / (1 + lam) ** (c.singles + 2)
    return w * (2 * cfg.t) ** c.transmitted * (2 * (1 - cfg.t)) ** c.reflected


def _one_hot_pair_sources(cfg, modes, n_values):
    reg = ModeRegistry(modes, cfg.cap)
    return {n: MixedState.pure(pair_ket(n, reg, modes)) for n in n_values}


def _heralded_sum(parts, port2, corrections, cfg) -> MixedState:
    patterns = _bell_measurement(fock.mix(parts), ("B_h", "B_v"), port2, corrections)
    done = _finish(patterns, {}, _output_registry(cfg))
    return done.sigma


def _n_sources(cfg, probs):
    if cfg.source_model == "oracle" and probs:
        return len(probs)
    return cfg.n_max_pairs + 1


def expand_relay(cfg: SchemeConfig) -> list:
    """Components (n pairs from Alice's source, m pairs from Bob's) of the relay state."""
    if cfg.scheme != "relay":
        raise ValueError("expand_relay needs a relay config")
    corrections = relay_corrections()
    eta_b = cfg.eta_c * cfg.channel_efficiency * cfg.eta_det
    eta_cc = cfg.eta_c * cfg.eta_det
    abs_ = {
        n: fock.number_sectors(fock.apply_losses(s, {"B_h": eta_b, "B_v": eta_b}), ("B_h", "B_v"))
        for n, s in _one_hot_pair_sources(
            cfg, ("A_h", "A_v", "B_h", "B_v"), range(_n_sources(cfg, cfg.pair_probs_ab))
        ).items()
    }
    bbs = {
        m: fock.number_sectors(fock.apply_losses(s, {"C_h": eta_cc, "C_v": eta_cc}), ("C_h", "C_v"))
        for m, s in _one_hot_pair_sources(
            cfg, ("C_h", "C_v", "out_h", "out_v"), range(_n_sources(cfg, cfg.pair_probs_bb))
        ).items()
    }
    comps = []
    for n, sec_a in abs_.items():
        for m, sec_b in bbs.items():
            parts = [fock.tensor_product(pa, sec_b[2 - k]) for k, pa in sec_a.items() if (2 - k) in sec_b]
            if not parts:
                continue
            sigma = _heralded_sum(parts, ("C_h", "C_v"), corrections, cfg)
            if sigma.branches:
                comps.append(Component(sigma, ab=n, bb=m, output_loss=(cfg.eta_c, cfg.eta_c)))
    return comps


def expand_amplifier(cfg: SchemeConfig) -> list:
    """Components of the amplifier state, evaluated at t = 1/2 with unit source weights."""
    if cfg.scheme != "amplifier":
        raise ValueError("expand_amplifier needs an amplifier config")
    corrections = amplifier_corrections()
    eta_b = cfg.eta_c * cfg.channel_efficiency * cfg.eta_det
    n_ab = 2 if cfg.source_model == "oracle" else cfg.n_max_pairs + 1
    abs_ = {
        n: fock.number_sectors(fock.apply_losses(s, {"B_h": eta_b, "B_v": eta_b}), ("B_h", "B_v"))
        for n, s in _one_hot_pair_sources(cfg, ("A_h", "A_v", "B_h", "B_v"), range(n_ab)).items()
    }

    reg_s = ModeRegistry(("out_h", "out_v"), cfg.cap)
    if cfg.source_model == "spdc":
        numbers = range(1, cfg.n_max_pairs + 1)
        herald = {n: n * cfg.eta_det * (1 - cfg.eta_det) ** (n - 1) for n in numbers}
    else:
        numbers = (1,)
        herald = {1: 1.0}
    # group emitted photon pairs (nh, nv) by nh + nv, then by photons m surviving the couplers
    grouped: dict = {}
    for nh in numbers:
        for nv in numbers:
            w = herald[nh] * herald[nv]
            if w <= 0:
                continue
            s = MixedState.pure(PureState.fock(reg_s, {"out_h": nh, "out_v": nv}), w)
            s = fock.apply_losses(s, {"out_h": cfg.eta_c, "out_v": cfg.eta_c})
            for m, sec in fock.number_sectors(s, ("out_h", "out_v")).items():
                grouped.setdefault((nh + nv, m), []).append(sec)
    reg_r = ModeRegistry(("R_h", "R_v"), cfg.cap)
    half = fock.beamsplitter(0.5)
    singles = {}
    for key, secs in grouped.items():
        sec = fock.tensor_product(fock.mix(secs), MixedState.vacuum(reg_r))
        sec = fock.apply_two_mode_unitary(sec, "out_h", "R_h", half)
        sec = fock.apply_two_mode_unitary(sec, "out_v", "R_v", half)
        sec = fock.apply_losses(sec, {"R_h": cfg.eta_det, "R_v": cfg.eta_det})
        singles[key] = fock.number_sectors(sec, ("R_h", "R_v"))

    comps = []
    for n, sec_a in abs_.items():
        for (total, m), sec_r in singles.items():
            parts = [fock.tensor_product(pa, sec_r[2 - k]) for k, pa in sec_a.items() if (2 - k) in sec_r]
            if not parts:
                continue
            sigma = _heralded_sum(parts, ("R_h", "R_v"), corrections, cfg)
            for j, piece in fock.number_sectors(sigma, ("out_h", "out_v")).items():
                if piece.branches:
                    comps.append(
                        Component(piece, ab=n, singles=total, transmitted=j, reflected=m - j,
                                  output_loss=(cfg.eta_c, 1.0))
                    )
    return comps


def expand_scheme(cfg: SchemeConfig) -> list:
    return expand_amplifier(cfg) if cfg.scheme == "amplifier" else expand_relay(cfg)


def assemble(components, cfg: SchemeConfig) -> MixedState:
    """Reweight expanded components into the conditional state for ``cfg``."""
    reg = _output_registry(cfg)
    branches = []
    for c in components:
        w = component_weight(c, cfg)
        if w <= 0:
            continue
        eta_a, eta_b = c.output_loss
        state = fock.apply_losses(
            c.state, {"A_h": eta_a, "A_v": eta_a, "out_h": eta_b, "out_v": eta_b}
        )
        branches.extend((w * bw, psi) for bw, psi in state.branches)
    return MixedState(reg, branches)
