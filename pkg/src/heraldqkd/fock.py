"""Sparse multimode bosonic Fock states.

Pure states are dictionaries from occupation tuples to complex amplitudes.
Mixed states are lists of ``(weight, PureState)`` branches, which is exact for
everything downstream because every measurement in this package is diagonal in
photon number.  Branches may be subnormalized so that heralding probabilities
travel with the state.
"""

from __future__ import annotations

import math
from operator import itemgetter
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

AMPLITUDE_CUTOFF = 1e-14
WEIGHT_CUTOFF = 1e-16
DEFAULT_CAP = 8

Occupation = tuple  # tuple[int, ...]


class ModeRegistry:
    """Ordered, immutable set of mode labels with a per-mode photon cap."""

    __slots__ = ("labels", "cap", "_index")

    def __init__(self, labels: Iterable[str], cap: int = DEFAULT_CAP):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate mode labels in {labels}")
        if cap < 0:
            raise ValueError("photon cap must be nonnegative")
        self.labels = labels
        self.cap = int(cap)
        self._index = {label: i for i, label in enumerate(labels)}

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label) -> bool:
        return label in self._index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ModeRegistry)
            and self.labels == other.labels
            and self.cap == other.cap
        )

    def __hash__(self) -> int:
        return hash((self.labels, self.cap))

    def __repr__(self) -> str:
        return f"ModeRegistry({list(self.labels)}, cap={self.cap})"

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValueError(f"mode {label!r} not in registry {self.labels}") from None

    def concat(self, other: "ModeRegistry") -> "ModeRegistry":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise ValueError(f"mode label collision: {sorted(clash)}")
        return ModeRegistry(self.labels + other.labels, max(self.cap, other.cap))

    def without(self, labels: Iterable[str]) -> "ModeRegistry":
        drop = set(labels)
        return ModeRegistry([m for m in self.labels if m not in drop], self.cap)

    def renamed(self, mapping: Mapping[str, str]) -> "ModeRegistry":
        return ModeRegistry([mapping.get(m, m) for m in self.labels], self.cap)


class PureState:
    """Sparse ket over a :class:`ModeRegistry`.

    ``amplitudes`` maps occupation tuples (aligned with the registry) to complex
    amplitudes.  The ket need not be normalized.
    """

    __slots__ = ("registry", "amplitudes")

    def __init__(self, registry: ModeRegistry, amplitudes: Mapping[Occupation, complex]):
        amps = {}
        n = len(registry)
        for key, amp in amplitudes.items():
            key = tuple(int(k) for k in key)
            if len(key) != n:
                raise ValueError(f"occupation {key} does not match {n} modes")
            if any(k < 0 for k in key):
                raise ValueError(f"negative occupation in {key}")
            if any(k > registry.cap for k in key):
                raise ValueError(f"occupation {key} exceeds photon cap {registry.cap}")
            amp = complex(amp)
            if abs(amp) > AMPLITUDE_CUTOFF:
                amps[key] = amps.get(key, 0j) + amp
        self.registry = registry
        self.amplitudes = amps

    @classmethod
    def _trusted(cls, registry: ModeRegistry, amplitudes: dict) -> "PureState":
        # skips validation; callers guarantee keys are well formed and pruned
        obj = cls.__new__(cls)
        obj.registry = registry
        obj.amplitudes = amplitudes
        return obj

    @classmethod
    def vacuum(cls, registry: ModeRegistry) -> "PureState":
        return cls._trusted(registry, {(0,) * len(registry): 1 + 0j})

    @classmethod
    def fock(cls, registry: ModeRegistry, counts: Mapping[str, int]) -> "PureState":
        """Number state with ``counts`` photons in the named modes, vacuum elsewhere."""
        key = [0] * len(registry)
        for label, n in counts.items():
            key[registry.index(label)] = n
        return cls(registry, {tuple(key): 1.0})

    @property
    def norm2(self) -> float:
        return float(sum(a.real * a.real + a.imag * a.imag for a in self.amplitudes.values()))

    def scaled(self, factor: complex) -> "PureState":
        return PureState._trusted(
            self.registry,
            {k: a * factor for k, a in self.amplitudes.items() if abs(a * factor) > AMPLITUDE_CUTOFF},
        )

    def normalized(self) -> "PureState":
        n2 = self.norm2
        if n2 == 0:
            raise ValueError("cannot normalize the zero vector")
        return self.scaled(1 / math.sqrt(n2))

    def __repr__(self) -> str:
        terms = ", ".join(f"{k}: {a:.6g}" for k, a in sorted(self.amplitudes.items()))
        return f"PureState({{{terms}}})"


class MixedState:
    """Incoherent mixture of pure branches sharing one registry."""

    __slots__ = ("registry", "branches")

    def __init__(self, registry: ModeRegistry, branches: Iterable[tuple[float, PureState]] = ()):
        kept = []
        for weight, psi in branches:
            weight = float(weight)
            if weight < 0:
                raise ValueError(f"negative branch weight {weight}")
            if psi.registry != registry:
                raise ValueError("branch registry does not match mixture registry")
            if weight * psi.norm2 > WEIGHT_CUTOFF:
                kept.append((weight, psi))
        self.registry = registry
        self.branches = tuple(kept)

    @classmethod
    def _trusted(cls, registry: ModeRegistry, branches: list) -> "MixedState":
        obj = cls.__new__(cls)
        obj.registry = registry
        obj.branches = tuple(branches)
        return obj

    @classmethod
    def pure(cls, psi: PureState, weight: float = 1.0) -> "MixedState":
        return cls(psi.registry, [(weight, psi)])

    @classmethod
    def vacuum(cls, registry: ModeRegistry) -> "MixedState":
        return cls.pure(PureState.vacuum(registry))

    def __len__(self) -> int:
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)

    def __repr__(self) -> str:
        return f"MixedState({len(self.branches)} branches, weight={total_weight(self):.6g}, modes={list(self.registry.labels)})"

    def scaled(self, factor: float) -> "MixedState":
        if factor < 0:
            raise ValueError("mixture weights cannot be scaled by a negative factor")
        return MixedState(self.registry, [(w * factor, psi) for w, psi in self.branches])


# ---------------------------------------------------------------------------
# basic queries


def total_weight(s: MixedState) -> float:
    return float(sum(w * psi.norm2 for w, psi in s.branches))


def inner_product(s1: PureState, s2: PureState) -> complex:
    """<s1|s2>, conjugate-linear in ``s1``."""
    if s1.registry != s2.registry:
        raise ValueError("inner product of states on different registries")
    small, large, flip = (s1.amplitudes, s2.amplitudes, False)
    if len(small) > len(large):
        small, large, flip = large, small, True
    acc = 0j
    for key, a in small.items():
        b = large.get(key)
        if b is not None:
            acc += (b.conjugate() * a) if flip else (a.conjugate() * b)
    return acc


def mix(states: Sequence[MixedState]) -> MixedState:
    """Concatenate the branches of several mixtures on the same registry."""
    if not states:
        raise ValueError("nothing to mix")
    reg = states[0].registry
    branches = []
    for s in states:
        if s.registry != reg:
            raise ValueError("cannot mix states on different registries")
        branches.extend(s.branches)
    return MixedState._trusted(reg, branches)


def fidelity(s: MixedState, target: PureState) -> float:
    """<target|rho|target> for the normalized mixture ``s`` and normalized ``target``."""
    tw = total_weight(s)
    if tw <= 0:
        raise ValueError("fidelity of a zero-weight state")
    target = target.normalized()
    return sum(w * abs(inner_product(target, psi)) ** 2 for w, psi in s.branches) / tw


# ---------------------------------------------------------------------------
# structural operations


def tensor_product(s1: MixedState, s2: MixedState) -> MixedState:
    reg = s1.registry.concat(s2.registry)
    branches = []
    for w1, p1 in s1.branches:
        for w2, p2 in s2.branches:
            w = w1 * w2
            if w * p1.norm2 * p2.norm2 <= WEIGHT_CUTOFF:
                continue
            amps = {}
            for k1, a1 in p1.amplitudes.items():
                for k2, a2 in p2.amplitudes.items():
                    a = a1 * a2
                    if abs(a) > AMPLITUDE_CUTOFF:
                        amps[k1 + k2] = a
            if amps:
                branches.append((w, PureState._trusted(reg, amps)))
    return MixedState._trusted(reg, branches)


def relabel(s: MixedState, mapping: Mapping[str, str]) -> MixedState:
    """Rename modes; amplitudes are untouched."""
    reg = s.registry.renamed(mapping)
    return MixedState._trusted(
        reg, [(w, PureState._trusted(reg, psi.amplitudes)) for w, psi in s.branches]
    )


def reorder(s: MixedState, labels: Sequence[str]) -> MixedState:
    """Permute the registry into the order given by ``labels``."""
    if sorted(labels) != sorted(s.registry.labels):
        raise ValueError("reorder needs a permutation of the existing labels")
    perm = [s.registry.index(m) for m in labels]
    reg = ModeRegistry(labels, s.registry.cap)
    return MixedState._trusted(
        reg,
        [
            (w, PureState._trusted(reg, {tuple(k[i] for i in perm): a for k, a in psi.amplitudes.items()}))
            for w, psi in s.branches
        ],
    )


def _split_by(s: MixedState, modes: Sequence[str]):
    """Yield (weight, registry-without-modes, {measured occupation: amplitudes}) per branch."""
    idx = [s.registry.index(m) for m in modes]
    keep = [i for i in range(len(s.registry)) if i not in idx]
    reg = s.registry.without(modes)
    measured_of = _tuple_getter(idx)
    rest_of = _tuple_getter(keep)
    for w, psi in s.branches:
        groups: dict = {}
        for key, a in psi.amplitudes.items():
            groups.setdefault(measured_of(key), {})[rest_of(key)] = a
        yield w, reg, groups


def _tuple_getter(indices):
    if not indices:
        return lambda key: ()
    if len(indices) == 1:
        i = indices[0]
        return lambda key: (key[i],)
    return itemgetter(*indices)


def _normalized_branch(reg, weight, amps):
    n2 = sum(a.real * a.real + a.imag * a.imag for a in amps.values())
    if weight * n2 <= WEIGHT_CUTOFF:
        return None
    scale = 1 / math.sqrt(n2)
    return weight * n2, PureState._trusted(reg, {k: a * scale for k, a in amps.items()})


def trace_out(s: MixedState, modes: Sequence[str]) -> MixedState:
    """Partial trace over ``modes``.

    Exact in the branch picture: the discarded modes are measured in the number
    basis and the outcome forgotten, giving one branch per occupation found.
    """
    if not modes:
        return s
    out = []
    reg = s.registry.without(modes)
    for w, reg, groups in _split_by(s, modes):
        for amps in groups.values():
            b = _normalized_branch(reg, w, amps)
            if b is not None:
                out.append(b)
    return MixedState._trusted(reg, out)


def project_total_number(s: MixedState, modes: Sequence[str], n: int) -> MixedState:
    """Keep only the components with exactly ``n`` photons summed over ``modes``.

    Branch weights carry the projection probability; modes are kept.
    """
    idx = [s.registry.index(m) for m in modes]
    out = []
    for w, psi in s.branches:
        amps = {k: a for k, a in psi.amplitudes.items() if sum(k[i] for i in idx) == n}
        if not amps:
            continue
        if len(amps) == len(psi.amplitudes):
            out.append((w, psi))
            continue
        b = _normalized_branch(s.registry, w, amps)
        if b is not None:
            out.append(b)
    return MixedState._trusted(s.registry, out)


# ---------------------------------------------------------------------------
# linear optics


def check_unitary(U, atol: float = 1e-12) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {U.shape}")
    if not np.allclose(U.conj().T @ U, np.eye(2), rtol=0, atol=atol):
        raise ValueError("matrix is not unitary")
    return U


@lru_cache(maxsize=65536)
def _transfer(ni: int, nj: int, u11: complex, u12: complex, u21: complex, u22: complex):
    """Output amplitudes of |ni, nj> under a_i^+ -> u11 a_i^+ + u21 a_j^+, a_j^+ -> u12 a_i^+ + u22 a_j^+."""
    total = ni + nj
    coeffs = [0j] * (total + 1)
    for k in range(ni + 1):
        ck = math.comb(ni, k) * u11**k * u21 ** (ni - k)
        if ck == 0:
            continue
        for l in range(nj + 1):
            cl = math.comb(nj, l) * u12**l * u22 ** (nj - l)
            coeffs[k + l] += ck * cl
    norm = math.sqrt(math.factorial(ni) * math.factorial(nj))
    out = []
    for m, c in enumerate(coeffs):
        c *= math.sqrt(math.factorial(m) * math.factorial(total - m)) / norm
        if abs(c) > AMPLITUDE_CUTOFF:
            out.append((m, total - m, c))
    return tuple(out)


def _apply_unitary_pure(psi: PureState, i: int, j: int, u: tuple, cap: int) -> dict:
    amps: dict = {}
    for key, a in psi.amplitudes.items():
        ni, nj = key[i], key[j]
        if ni == 0 and nj == 0:
            amps[key] = amps.get(key, 0j) + a
            continue
        if ni + nj > cap:
            raise ValueError(f"photon cap {cap} too small for {ni + nj} photons in two modes")
        base = list(key)
        for mi, mj, c in _transfer(ni, nj, *u):
            base[i] = mi
            base[j] = mj
            k2 = tuple(base)
            amps[k2] = amps.get(k2, 0j) + a * c
    return {k: a for k, a in amps.items() if abs(a) > AMPLITUDE_CUTOFF}


def apply_two_mode_unitary(s: MixedState, mode_i: str, mode_j: str, U) -> MixedState:
    """Passive two-mode transformation.

    Creation operators map as ``a_i^+ -> U[0,0] a_i^+ + U[1,0] a_j^+`` and
    ``a_j^+ -> U[0,1] a_i^+ + U[1,1] a_j^+``.
    """
    if mode_i == mode_j:
        raise ValueError("a two-mode unitary needs two distinct modes")
    U = check_unitary(U)
    i, j = s.registry.index(mode_i), s.registry.index(mode_j)
    u = (complex(U[0, 0]), complex(U[0, 1]), complex(U[1, 0]), complex(U[1, 1]))
    cap = s.registry.cap
    out = []
    for w, psi in s.branches:
        amps = _apply_unitary_pure(psi, i, j, u, cap)
        if amps:
            out.append((w, PureState._trusted(s.registry, amps)))
    return MixedState._trusted(s.registry, out)


def beamsplitter(t: float) -> np.ndarray:
    """Real beamsplitter with intensity transmittance ``t``."""
    if not 0 <= t <= 1:
        raise ValueError(f"transmittance {t} outside [0, 1]")
    c, r = math.sqrt(t), math.sqrt(1 - t)
    return np.array([[c, -r], [r, c]])


def rotation(theta: float) -> np.ndarray:
    """Polarization rotator: h -> cos h + sin v, v -> -sin h + cos v."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


# ---------------------------------------------------------------------------
# loss


@lru_cache(maxsize=4096)
def _loss_factors(n: int, eta: float):
    # amplitude factor for losing k of n photons, indexed by k
    return tuple(
        math.sqrt(math.comb(n, k) * eta ** (n - k) * (1 - eta) ** k) for k in range(n + 1)
    )


def apply_loss(s: MixedState, mode: str, eta: float) -> MixedState:
    """Pure-loss channel of transmission ``eta`` on one mode.

    The mode is coupled to an environment that is then read out in photon
    number, so each branch splits according to the number of photons lost.
    """
    if not 0 <= eta <= 1:
        raise ValueError(f"efficiency {eta} outside [0, 1]")
    if eta == 1:
        return s
    i = s.registry.index(mode)
    out = []
    for w, psi in s.branches:
        by_lost: dict = {}
        touched = False
        for key, a in psi.amplitudes.items():
            n = key[i]
            if n == 0:
                by_lost.setdefault(0, {})[key] = a
                continue
            touched = True
            factors = _loss_factors(n, eta)
            base = list(key)
            for k, f in enumerate(factors):
                if f == 0:
                    continue
                base[i] = n - k
                by_lost.setdefault(k, {})[tuple(base)] = a * f
        if not touched:
            out.append((w, psi))
            continue
        for amps in by_lost.values():
            b = _normalized_branch(s.registry, w, amps)
            if b is not None:
                out.append(b)
    return MixedState._trusted(s.registry, out)


def apply_losses(s: MixedState, etas: Mapping[str, float]) -> MixedState:
    for mode, eta in etas.items():
        s = apply_loss(s, mode, eta)
    return s


# ---------------------------------------------------------------------------
# comparison helpers


def density_matrix(s: MixedState, basis: Sequence[Occupation] | None = None):
    """Dense density matrix over ``basis`` (default: every occupation present).

    Returns ``(basis, rho)``.
    """
    if basis is None:
        keys = set()
        for _, psi in s.branches:
            keys.update(psi.amplitudes)
        basis = sorted(keys)
    index = {k: n for n, k in enumerate(basis)}
    rho = np.zeros((len(basis), len(basis)), dtype=complex)
    for w, psi in s.branches:
        v = np.zeros(len(basis), dtype=complex)
        for k, a in psi.amplitudes.items():
            try:
                v[index[k]] = a
            except KeyError:
                raise ValueError(f"occupation {k} missing from the supplied basis") from None
        rho += w * np.outer(v, v.conj())
    return list(basis), rho


def max_abs_difference(s1: MixedState, s2: MixedState) -> float:
    """Largest elementwise deviation between the density matrices of two mixtures."""
    if s1.registry != s2.registry:
        raise ValueError("cannot compare states on different registries")
    keys = set()
    for s in (s1, s2):
        for _, psi in s.branches:
            keys.update(psi.amplitudes)
    basis = sorted(keys)
    if not basis:
        return 0.0
    _, r1 = density_matrix(s1, basis)
    _, r2 = density_matrix(s2, basis)
    return float(np.max(np.abs(r1 - r2)))


def _phase_fixed(psi: PureState) -> PureState:
    psi = psi.normalized()
    lead = min(psi.amplitudes)
    a = psi.amplitudes[lead]
    return psi.scaled(abs(a) / a)


def _same_ket(p1: PureState, p2: PureState, atol: float) -> bool:
    if p1.amplitudes.keys() != p2.amplitudes.keys():
        return False
    return all(abs(p1.amplitudes[k] - p2.amplitudes[k]) <= atol for k in p1.amplitudes)


def canonicalize(s: MixedState, atol: float = 1e-12) -> MixedState:
    """Normalize branches, fix global phases, merge identical kets, sort.

    Intended for equality checks in tests; no operation canonicalizes implicitly.
    """
    merged: list = []
    for w, psi in s.branches:
        n2 = psi.norm2
        if n2 == 0:
            continue
        ket = _phase_fixed(psi)
        weight = w * n2
        for entry in merged:
            if _same_ket(entry[1], ket, atol):
                entry[0] += weight
                break
        else:
            merged.append([weight, ket])
    merged.sort(key=lambda e: (sorted(e[1].amplitudes), -e[0]))
    return MixedState(s.registry, [(w, k) for w, k in merged])


def number_sectors(s: MixedState, modes: Sequence[str]) -> dict:
    """Split ``s`` by the total photon number found in ``modes``.

    Returns ``{n: MixedState}``; the sectors' weights add up to ``total_weight(s)``.
    """
    idx = [s.registry.index(m) for m in modes]
    sectors: dict = {}
    for w, psi in s.branches:
        groups: dict = {}
        for key, a in psi.amplitudes.items():
            groups.setdefault(sum(key[i] for i in idx), {})[key] = a
        if len(groups) == 1:
            (n,) = groups
            sectors.setdefault(n, []).append((w, psi))
            continue
        for n, amps in groups.items():
            b = _normalized_branch(s.registry, w, amps)
            if b is not None:
                sectors.setdefault(n, []).append(b)
    return {n: MixedState._trusted(s.registry, br) for n, br in sorted(sectors.items())}
