import itertools

import numpy as np
import pytest

from heraldqkd import fock
from heraldqkd.fock import MixedState, ModeRegistry, PureState
from heraldqkd.heralding import (
    DetectionPattern,
    count_distribution,
    detection_probability,
    measure_pattern,
    pattern_probability,
)
from heraldqkd.schemes import SchemeConfig, amplifier_closed_form_herald, run_amplifier
from heraldqkd.sources import lossy_pair_source, pair_mixture_source, spdc_pair_distribution


def number_state(n, label="m"):
    reg = ModeRegistry([label, "keep"])
    return MixedState.pure(PureState.fock(reg, {label: n}))


def test_vacuum_zero_pattern():
    s = number_state(0)
    for eta in (0.0, 0.4, 1.0):
        out = measure_pattern(s, DetectionPattern.of({"m": 0}), eta)
        assert fock.total_weight(out) == pytest.approx(1)
        assert out.registry.labels == ("keep",)


def test_single_photon_click():
    assert pattern_probability(number_state(1), DetectionPattern.of({"m": 1}), 0.8) == pytest.approx(0.8)


def test_two_photons_one_click():
    assert pattern_probability(number_state(2), DetectionPattern.of({"m": 1}), 0.9) == pytest.approx(0.18)


def test_absent_mode_rejected():
    with pytest.raises(ValueError):
        measure_pattern(number_state(1), DetectionPattern.of({"nope": 1}))


def test_repeated_mode_rejected():
    with pytest.raises(ValueError):
        DetectionPattern((("m", 1), ("m", 0)))


def test_zero_state_gives_zero():
    reg = ModeRegistry(["m"])
    assert pattern_probability(MixedState(reg, []), DetectionPattern.of({"m": 1}), 0.5) == 0


def test_detection_probability_binomial():
    assert detection_probability(3, 2, 0.5) == pytest.approx(3 / 8)
    assert detection_probability(1, 2, 0.9) == 0


@pytest.mark.parametrize("eta", [1.0, 0.73, 0.2])
def test_completeness(eta):
    s = fock.apply_two_mode_unitary(pair_mixture_source(spdc_pair_distribution(0.3, 3)), "A_h", "B_h",
                                    fock.beamsplitter(0.3))
    modes = ("A_h", "A_v", "B_v")
    total = 0.0
    for counts in itertools.product(range(7), repeat=3):
        total += pattern_probability(s, DetectionPattern(tuple(zip(modes, counts))), eta)
    assert total == pytest.approx(fock.total_weight(s), abs=1e-10)
    assert sum(count_distribution(s, modes, eta).values()) == pytest.approx(fock.total_weight(s), abs=1e-10)


def test_conditional_state_of_partner():
    # clicking on B_h of a perfect pair leaves A in |h>
    out = measure_pattern(lossy_pair_source(1.0), DetectionPattern.of({"B_h": 1, "B_v": 0}))
    assert fock.total_weight(out) == pytest.approx(0.5)
    keys = {k for _, psi in out.branches for k in psi.amplitudes}
    assert keys == {(1, 0)}


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_monotone_in_efficiency(n):
    # holds when every photon present must click; P(1 | 2) = 2 eta (1 - eta) is not monotone
    etas = np.linspace(1.0, 0.0, 11)
    probs = [pattern_probability(number_state(n), DetectionPattern.of({"m": n}), e) for e in etas]
    assert all(b <= a + 1e-15 for a, b in zip(probs, probs[1:]))


def test_partial_click_probability_is_not_monotone():
    probs = [pattern_probability(number_state(2), DetectionPattern.of({"m": 1}), e) for e in (0.2, 0.5, 0.9)]
    assert probs[1] > probs[0] and probs[1] > probs[2]


def test_disjoint_measurements_commute():
    s = fock.apply_two_mode_unitary(pair_mixture_source((0.5, 0.3, 0.2)), "A_h", "B_v", fock.beamsplitter(0.4))
    p1 = DetectionPattern.of({"A_h": 1})
    p2 = DetectionPattern.of({"B_v": 1, "B_h": 0})
    a = measure_pattern(measure_pattern(s, p1, 0.7), p2, 0.7)
    b = measure_pattern(measure_pattern(s, p2, 0.7), p1, 0.7)
    assert fock.max_abs_difference(a, b) < 1e-12


def test_ideal_fast_path_agrees_with_general_route():
    s = pair_mixture_source(spdc_pair_distribution(0.2, 3))
    pat = DetectionPattern.of({"B_h": 1, "B_v": 1})
    exact = measure_pattern(s, pat, 1.0)
    near = measure_pattern(s, pat, 1 - 1e-13)
    assert fock.max_abs_difference(exact, near) < 1e-10


def test_amplifier_herald_probability_matches_closed_form():
    cfg = SchemeConfig("amplifier", t=0.7, source_model="oracle", p=0.8, eta_t=0.3)
    assert run_amplifier(cfg).herald_probability == pytest.approx(amplifier_closed_form_herald(0.8, 0.7, 0.3), abs=1e-12)
