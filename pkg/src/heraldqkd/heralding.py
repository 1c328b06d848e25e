"""Number-resolving detection with finite efficiency.

A detector of efficiency ``eta`` is a pure-loss channel followed by ideal photon
counting.  Projecting onto an exact count pattern after loss splits every
branch according to how many photons were lost in each measured mode; those
environment records are orthogonal, so each becomes its own branch.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .fock import MixedState, _normalized_branch, _split_by, _tuple_getter, total_weight


@dataclass(frozen=True)
class DetectionPattern:
    """Required exact photon count per measured mode."""

    counts: tuple  # ((mode, count), ...)

    def __post_init__(self):
        counts = tuple((str(m), int(n)) for m, n in self.counts)
        modes = [m for m, _ in counts]
        if len(set(modes)) != len(modes):
            raise ValueError(f"repeated mode in detection pattern {counts}")
        if any(n < 0 for _, n in counts):
            raise ValueError("detector counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def of(cls, mapping: Mapping[str, int]) -> "DetectionPattern":
        return cls(tuple(mapping.items()))

    @property
    def modes(self) -> tuple:
        return tuple(m for m, _ in self.counts)

    @property
    def required(self) -> tuple:
        return tuple(n for _, n in self.counts)


def detection_probability(n: int, r: int, eta: float) -> float:
    """P(r clicks | n photons) for a number-resolving detector of efficiency eta."""
    if r > n:
        return 0.0
    return math.comb(n, r) * eta**r * (1 - eta) ** (n - r)


def _check_modes(s: MixedState, modes: Iterable[str]):
    for m in modes:
        if m not in s.registry:
            raise ValueError(f"pattern mode {m!r} not in registry {s.registry.labels}")


def measure_pattern(s: MixedState, pattern: DetectionPattern, eta_det: float = 1.0) -> MixedState:
    """Unnormalized conditional state after observing ``pattern``.

    Measured modes are removed from the registry.  The total weight of the
    result is the probability of the pattern.
    """
    if not 0 <= eta_det <= 1:
        raise ValueError(f"detector efficiency {eta_det} outside [0, 1]")
    _check_modes(s, pattern.modes)
    required = pattern.required
    out = []
    reg = s.registry.without(pattern.modes)
    if eta_det == 1:
        return _project_exact(s, pattern, reg)
    for w, reg, groups in _split_by(s, pattern.modes):
        for measured, amps in groups.items():
            factor = 1.0
            for n, r in zip(measured, required):
                if r > n:
                    factor = 0.0
                    break
                factor *= detection_probability(n, r, eta_det)
            if factor == 0:
                continue
            # every distinct `measured` is a distinct loss record, hence its own branch
            b = _normalized_branch(reg, w * factor, amps)
            if b is not None:
                out.append(b)
    return MixedState._trusted(reg, out)


def _project_exact(s: MixedState, pattern: DetectionPattern, reg) -> MixedState:
    # ideal detectors: only the exact occupation survives, no loss records
    idx = [s.registry.index(m) for m in pattern.modes]
    keep = [i for i in range(len(s.registry)) if i not in idx]
    measured_of = _tuple_getter(idx)
    rest_of = _tuple_getter(keep)
    required = pattern.required
    out = []
    for w, psi in s.branches:
        amps = {}
        for key, a in psi.amplitudes.items():
            if measured_of(key) == required:
                amps[rest_of(key)] = a
        if amps:
            b = _normalized_branch(reg, w, amps)
            if b is not None:
                out.append(b)
    return MixedState._trusted(reg, out)


def pattern_probability(s: MixedState, pattern: DetectionPattern, eta_det: float = 1.0) -> float:
    return total_weight(measure_pattern(s, pattern, eta_det))


def count_distribution(s: MixedState, modes: Sequence[str], eta_det: float = 1.0) -> dict:
    """Probability of every detected count tuple on ``modes`` (unnormalized, like ``s``)."""
    if not 0 <= eta_det <= 1:
        raise ValueError(f"detector efficiency {eta_det} outside [0, 1]")
    _check_modes(s, modes)
    idx = [s.registry.index(m) for m in modes]
    dist: dict = {}
    for w, psi in s.branches:
        for key, a in psi.amplitudes.items():
            p = w * (a.real * a.real + a.imag * a.imag)
            ns = [key[i] for i in idx]
            for rs in itertools.product(*(range(n + 1) for n in ns)):
                q = p
                for n, r in zip(ns, rs):
                    q *= detection_probability(n, r, eta_det)
                if q:
                    dist[rs] = dist.get(rs, 0.0) + q
    return dist
