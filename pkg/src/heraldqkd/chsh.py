"""Measurement devices, CHSH values, QBER and key-rate bounds.

Each party rotates the polarization of its two modes, splits them on a PBS and
counts photons with two number-resolving detectors.  Outcome ``+1`` means
exactly one photon, in the h detector; ``-1`` exactly one, in the v detector;
anything else is inconclusive.

Since the devices only count photons and the rotation preserves each party's
photon number, the statistics depend only on the diagonal blocks of the state
with fixed photon number per party.  Those blocks are small, which keeps
evaluation cheap even for states with thousands of branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np

from .fock import MixedState, _transfer, rotation, total_weight

PLUS, MINUS, INCONCLUSIVE = 0, 1, 2  # row/column order of JointDistribution
TSIRELSON = 2 * math.sqrt(2)

ALICE_MODES = ("A_h", "A_v")
BOB_MODES = ("out_h", "out_v")


@dataclass(frozen=True)
class MeasurementSettings:
    """Alice's CHSH angles, Bob's CHSH angles, Bob's key angle (radians)."""

    a: tuple = (0.0, math.pi / 4)
    b: tuple = (math.pi / 8, -math.pi / 8)
    b_key: float = 0.0
    eta_det: float = 1.0

    def __post_init__(self):
        if not 0 <= self.eta_det <= 1:
            raise ValueError(f"eta_det={self.eta_det} outside [0, 1]")

    def pairs(self) -> tuple:
        """Setting pairs needed for one report: four CHSH pairs, then the key pair."""
        a1, a2 = self.a
        b1, b2 = self.b
        return ((a1, b1), (a1, b2), (a2, b1), (a2, b2), (a1, self.b_key))


@dataclass(frozen=True)
class JointDistribution:
    """3x3 outcome probabilities indexed (+1, -1, inconclusive) for Alice x Bob."""

    probs: np.ndarray

    @classmethod
    def from_counts(cls, table: np.ndarray) -> "JointDistribution":
        table = np.asarray(table, dtype=float)
        total = table.sum()
        if not total > 0:
            raise ValueError("joint distribution of a zero-weight state")
        return cls(table / total)

    @property
    def mu_cc(self) -> float:
        return float(self.probs[:2, :2].sum())

    @property
    def cross_inconclusive(self) -> float:
        """P(conclusive, inconclusive) + P(inconclusive, conclusive)."""
        p = self.probs
        return float(p[:2, 2].sum() + p[2, :2].sum())

    def correlator_conclusive(self) -> float:
        p = self.probs
        mu = self.mu_cc
        if mu <= 0:
            return math.nan
        return float((p[0, 0] + p[1, 1] - p[0, 1] - p[1, 0]) / mu)

    def error_conclusive(self) -> float:
        p = self.probs
        mu = self.mu_cc
        if mu <= 0:
            return math.nan
        return float((p[0, 1] + p[1, 0]) / mu)

    def deterministic(self) -> np.ndarray:
        """2x2 distribution after mapping inconclusive to +1 on both sides."""
        p = self.probs
        return np.array(
            [
                [p[0, 0] + p[0, 2] + p[2, 0] + p[2, 2], p[0, 1] + p[2, 1]],
                [p[1, 0] + p[1, 2], p[1, 1]],
            ]
        )

    def random_assignment(self) -> np.ndarray:
        """2x2 distribution after mapping inconclusive to +1 or -1 with equal weight."""
        p = self.probs
        q = p[:2, :2].copy()
        q += 0.5 * p[:2, 2][:, None]
        q += 0.5 * p[2, :2][None, :]
        q += 0.25 * p[2, 2]
        return q

    def correlator_deterministic(self) -> float:
        q = self.deterministic()
        return float(q[0, 0] + q[1, 1] - q[0, 1] - q[1, 0])

    def error_deterministic(self) -> float:
        q = self.deterministic()
        return float(q[0, 1] + q[1, 0])

    def correlator_random(self) -> float:
        q = self.random_assignment()
        return float(q[0, 0] + q[1, 1] - q[0, 1] - q[1, 0])


# ---------------------------------------------------------------------------
# device model


@lru_cache(maxsize=4096)
def _rotation_block(n: int, theta: float) -> np.ndarray:
    """Rotation of an n-photon two-mode block in the basis |k h, n-k v>, k = 0..n."""
    U = rotation(theta)
    u = (complex(U[0, 0]), complex(U[0, 1]), complex(U[1, 0]), complex(U[1, 1]))
    M = np.zeros((n + 1, n + 1), dtype=complex)
    for k in range(n + 1):
        for mh, _, c in _transfer(k, n - k, *u):
            M[mh, k] += c
    return M


@lru_cache(maxsize=4096)
def _outcome_matrix(n: int, eta: float) -> np.ndarray:
    """Rows k = h-photon count (0..n); columns (+1, -1, inconclusive)."""
    out = np.zeros((n + 1, 3))
    for k in range(n + 1):
        nh, nv = k, n - k
        plus = nh * eta * (1 - eta) ** (nh - 1) * (1 - eta) ** nv if nh else 0.0
        minus = nv * eta * (1 - eta) ** (nv - 1) * (1 - eta) ** nh if nv else 0.0
        out[k] = (plus, minus, 1.0 - plus - minus)
    return out


def number_blocks(sigma: MixedState, alice=ALICE_MODES, bob=BOB_MODES) -> dict:
    """Diagonal blocks of ``sigma`` with fixed photon number per party.

    Returns ``{(NA, NB): rho}`` with ``rho`` over the basis ``(kA, kB)``
    flattened as ``kA * (NB + 1) + kB`` where k counts h photons.
    """
    reg = sigma.registry
    ah, av = (reg.index(m) for m in alice)
    bh, bv = (reg.index(m) for m in bob)
    others = [i for i in range(len(reg)) if i not in (ah, av, bh, bv)]
    if others:
        raise ValueError("state must live on exactly the two parties' modes")
    blocks: dict = {}
    for w, psi in sigma.branches:
        vecs: dict = {}
        for key, a in psi.amplitudes.items():
            na, nb = key[ah] + key[av], key[bh] + key[bv]
            v = vecs.get((na, nb))
            if v is None:
                v = vecs[(na, nb)] = np.zeros((na + 1) * (nb + 1), dtype=complex)
            v[key[ah] * (nb + 1) + key[bh]] += a
        for nn, v in vecs.items():
            rho = blocks.get(nn)
            if rho is None:
                rho = blocks[nn] = np.zeros((v.size, v.size), dtype=complex)
            rho += w * np.outer(v, v.conj())
    return blocks


def outcome_counts(
    blocks: dict, theta_a: float, theta_b: float, eta_a: float, eta_b: float | None = None
) -> np.ndarray:
    """Unnormalized 3x3 outcome table for the given number blocks.

    ``eta_a``/``eta_b`` are the overall efficiencies in front of each party's
    ideal counters (``eta_b`` defaults to ``eta_a``).
    """
    if eta_b is None:
        eta_b = eta_a
    table = np.zeros((3, 3))
    for (na, nb), rho in blocks.items():
        M = np.kron(_rotation_block(na, theta_a), _rotation_block(nb, theta_b))
        diag = np.einsum("ij,jk,ik->i", M, rho, M.conj()).real.reshape(na + 1, nb + 1)
        table += _outcome_matrix(na, eta_a).T @ diag @ _outcome_matrix(nb, eta_b)
    return table


def joint_distribution(sigma: MixedState, theta_a: float, theta_b: float, eta_det: float) -> JointDistribution:
    if not 0 <= eta_det <= 1:
        raise ValueError(f"eta_det={eta_det} outside [0, 1]")
    if not total_weight(sigma) > 0:
        raise ValueError("joint distribution of a zero-weight state")
    return JointDistribution.from_counts(outcome_counts(number_blocks(sigma), theta_a, theta_b, eta_det))


def setting_tables(
    sigma: MixedState | dict, settings: MeasurementSettings, pre_loss: tuple = (1.0, 1.0)
) -> list:
    """Unnormalized outcome tables for every pair in ``settings.pairs()``.

    ``sigma`` may also be precomputed number blocks.  ``pre_loss`` is extra
    transmission on (Alice's, Bob's) modes not yet applied to the state.
    """
    blocks = sigma if isinstance(sigma, dict) else number_blocks(sigma)
    eta_a = settings.eta_det * pre_loss[0]
    eta_b = settings.eta_det * pre_loss[1]
    return [outcome_counts(blocks, ta, tb, eta_a, eta_b) for ta, tb in settings.pairs()]


# ---------------------------------------------------------------------------
# CHSH and QBER


def _chsh(values) -> float:
    e11, e12, e21, e22 = values
    return e11 + e12 + e21 - e22


def chsh_conclusive(sigma: MixedState, settings: MeasurementSettings) -> tuple:
    """(mu_cc, S_cc); S_cc is NaN when no round is conclusive for both."""
    dists = [joint_distribution(sigma, ta, tb, settings.eta_det) for ta, tb in settings.pairs()[:4]]
    mu = dists[0].mu_cc
    if mu <= 0:
        return 0.0, math.nan
    return mu, _chsh([d.correlator_conclusive() for d in dists])


def chsh_deterministic(sigma: MixedState, settings: MeasurementSettings) -> float:
    dists = [joint_distribution(sigma, ta, tb, settings.eta_det) for ta, tb in settings.pairs()[:4]]
    return _chsh([d.correlator_deterministic() for d in dists])


def chsh_random(sigma: MixedState, settings: MeasurementSettings) -> float:
    """Comparison hook: inconclusive outcomes replaced by a fair coin."""
    dists = [joint_distribution(sigma, ta, tb, settings.eta_det) for ta, tb in settings.pairs()[:4]]
    return _chsh([d.correlator_random() for d in dists])


def qber(sigma: MixedState, a1: float, b3: float, eta_det: float, post_processing: str = "conclusive") -> float:
    d = joint_distribution(sigma, a1, b3, eta_det)
    if post_processing == "conclusive":
        return d.error_conclusive()
    if post_processing == "deterministic":
        return d.error_deterministic()
    raise ValueError(f"unknown post-processing {post_processing!r}")


# ---------------------------------------------------------------------------
# key rates


def binary_entropy(x: float) -> float:
    if not -1e-12 <= x <= 1 + 1e-12:
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    if x <= 0 or x >= 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def conditional_rate(s: float, q: float) -> float:
    """1 - h(Q) - h((1 + sqrt((S/2)^2 - 1))/2) with S clamped to [2, 2 sqrt 2]; may be negative."""
    s = min(max(s, 2.0), TSIRELSON)
    q = min(max(q, 0.0), 1.0)
    return 1 - binary_entropy(q) - binary_entropy((1 + math.sqrt(max((s / 2) ** 2 - 1, 0.0))) / 2)


@dataclass
class RateReport:
    herald_probability: float
    mu_cc: float
    s_cc: float
    s_det: float
    qber: float
    qber_det: float
    rate_a_conditional: float
    rate_b_conditional: float
    rate_a: float
    rate_b: float
    cross_inconclusive: float = 0.0
    extras: dict = field(default_factory=dict)

    def rate(self, analysis: str) -> float:
        return {"A": self.rate_a, "B": self.rate_b}[analysis]

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("extras")
        d.update(self.extras)
        return d


def key_rates(
    herald_probability: float, mu_cc: float, s_cc: float, q: float, s_det: float, q_det: float
) -> tuple:
    """(rate_A, rate_B, conditional A, conditional B); rates clamped at zero.

    Analysis A keeps only both-conclusive rounds and uses S_cc; analysis B uses
    the deterministic-assignment CHSH value on every heralded round.
    """
    if mu_cc > 0 and not math.isnan(s_cc) and not math.isnan(q):
        cond_a = conditional_rate(s_cc, q)
    else:
        cond_a = -math.inf
    cond_b = conditional_rate(s_det, q_det)
    rate_a = herald_probability * mu_cc * max(0.0, cond_a)
    rate_b = herald_probability * max(0.0, cond_b)
    return rate_a, rate_b, cond_a, cond_b


def report_from_tables(tables, herald_probability: float) -> RateReport:
    """Build a :class:`RateReport` from the five unnormalized tables of ``MeasurementSettings.pairs``."""
    if not herald_probability > 0 or not np.sum(tables[0]) > 0:
        return RateReport(max(herald_probability, 0.0), 0.0, math.nan, math.nan, math.nan, math.nan,
                          -math.inf, -math.inf, 0.0, 0.0)
    dists = [JointDistribution.from_counts(t) for t in tables]
    chsh_dists, key_dist = dists[:4], dists[4]
    mu = chsh_dists[0].mu_cc
    s_cc = _chsh([d.correlator_conclusive() for d in chsh_dists]) if mu > 0 else math.nan
    s_det = _chsh([d.correlator_deterministic() for d in chsh_dists])
    q = key_dist.error_conclusive()
    q_det = key_dist.error_deterministic()
    rate_a, rate_b, cond_a, cond_b = key_rates(herald_probability, mu, s_cc, q, s_det, q_det)
    return RateReport(
        herald_probability, mu, s_cc, s_det, q, q_det, cond_a, cond_b, rate_a, rate_b,
        cross_inconclusive=chsh_dists[0].cross_inconclusive,
    )


def analyze(sigma: MixedState, settings: MeasurementSettings | None = None) -> RateReport:
    """All CHSH, QBER and rate quantities for one conditional state."""
    settings = settings or MeasurementSettings()
    return report_from_tables(setting_tables(sigma, settings), total_weight(sigma))
