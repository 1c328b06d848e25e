"""Photon sources: lossy pair source, SPDC pair mixtures, heralded and ideal single photons.

Entangled sources are incoherent mixtures over the total pair number (the pump
phase is taken as randomized).  The n-pair component is the normalized ket

    (x_h^+ y_h^+ + x_v^+ y_v^+)^n / (n! sqrt(n+1)) |0>

which has amplitude ``1/sqrt(n+1)`` on every ``|k, n-k>_x |k, n-k>_y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .fock import DEFAULT_CAP, MixedState, ModeRegistry, PureState

DEFAULT_N_MAX = 4
PAIR_MODES = ("A_h", "A_v", "B_h", "B_v")
SINGLE_MODES = ("S_h", "S_v")


@dataclass(frozen=True)
class PairDistribution:
    """Pair-number probabilities ``p_0..p_nmax``; the truncated tail is dropped."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise ValueError("empty pair distribution")
        if any(p < 0 for p in probs):
            raise ValueError(f"negative probability in {probs}")
        if sum(probs) > 1 + 1e-12:
            raise ValueError(f"pair probabilities sum to {sum(probs)} > 1")
        object.__setattr__(self, "probs", probs)

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1

    def __getitem__(self, n: int) -> float:
        return self.probs[n] if 0 <= n < len(self.probs) else 0.0


def spdc_pair_distribution(lam: float, n_max: int = DEFAULT_N_MAX) -> PairDistribution:
    """p_n = (n+1) lam^n / (1+lam)^(n+2) for n <= n_max."""
    if not lam > 0:
        raise ValueError(f"pump intensity must be positive, got {lam}")
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    return PairDistribution(
        tuple((n + 1) * lam**n / (1 + lam) ** (n + 2) for n in range(n_max + 1))
    )


def thermal_distribution(lam: float, n_max: int = DEFAULT_N_MAX) -> tuple:
    """Single-mode thermal statistics q_n = lam^n / (1+lam)^(n+1), truncated at n_max."""
    if not lam > 0:
        raise ValueError(f"pump intensity must be positive, got {lam}")
    return tuple(lam**n / (1 + lam) ** (n + 1) for n in range(n_max + 1))


def _registry(modes: Sequence[str], cap: int | None, n_photons: int) -> ModeRegistry:
    return ModeRegistry(modes, max(cap if cap is not None else DEFAULT_CAP, n_photons))


def pair_ket(n: int, registry: ModeRegistry, modes: Sequence[str] = PAIR_MODES) -> PureState:
    """Normalized n-pair ket on modes (x_h, x_v, y_h, y_v)."""
    xh, xv, yh, yv = (registry.index(m) for m in modes)
    amp = 1 / math.sqrt(n + 1)
    amps = {}
    for k in range(n + 1):
        key = [0] * len(registry)
        key[xh] = key[yh] = k
        key[xv] = key[yv] = n - k
        amps[tuple(key)] = amp
    return PureState(registry, amps)


def lossy_pair_source(p: float, modes: Sequence[str] = PAIR_MODES, cap: int | None = None) -> MixedState:
    """Vacuum with probability 1-p, one maximally entangled pair with probability p."""
    if not 0 < p <= 1:
        raise ValueError(f"pair probability {p} outside (0, 1]")
    reg = _registry(modes, cap, 1)
    return MixedState(
        reg, [(1 - p, PureState.vacuum(reg)), (p, pair_ket(1, reg, modes))]
    )


def pair_mixture_source(
    dist: PairDistribution | Sequence[float],
    modes: Sequence[str] = PAIR_MODES,
    cap: int | None = None,
) -> MixedState:
    """Mixture of n-pair kets weighted by ``dist``."""
    if not isinstance(dist, PairDistribution):
        dist = PairDistribution(tuple(dist))
    reg = _registry(modes, cap, dist.n_max)
    return MixedState(reg, [(p, pair_ket(n, reg, modes)) for n, p in enumerate(dist.probs) if p > 0])


def _polarization_index(polarization: str) -> int:
    try:
        return {"h": 0, "v": 1}[polarization]
    except KeyError:
        raise ValueError(f"polarization must be 'h' or 'v', got {polarization!r}") from None


def heralded_single_source(
    lam: float,
    eta_herald: float,
    polarization: str,
    n_max: int = DEFAULT_N_MAX,
    modes: Sequence[str] = SINGLE_MODES,
    cap: int | None = None,
) -> MixedState:
    """Signal mode of a single-polarization SPDC emitter heralded on one idler count.

    The idler is read by a number-resolving detector of efficiency
    ``eta_herald``; a herald means exactly one count.  The returned mixture is
    subnormalized and its total weight is the herald probability.
    """
    if not 0 <= eta_herald <= 1:
        raise ValueError(f"herald efficiency {eta_herald} outside [0, 1]")
    q = thermal_distribution(lam, n_max)
    reg = _registry(modes, cap, n_max)
    slot = _polarization_index(polarization)
    branches = []
    for n in range(1, n_max + 1):
        weight = q[n] * n * eta_herald * (1 - eta_herald) ** (n - 1)
        if weight > 0:
            counts = {modes[slot]: n}
            branches.append((weight, PureState.fock(reg, counts)))
    return MixedState(reg, branches)


def ideal_single_source(
    polarization: str, modes: Sequence[str] = SINGLE_MODES, cap: int | None = None
) -> MixedState:
    """Exactly one photon in the requested polarization mode."""
    reg = _registry(modes, cap, 1)
    slot = _polarization_index(polarization)
    return MixedState.pure(PureState.fock(reg, {modes[slot]: 1}))
