import math

import pytest

from heraldqkd.evaluation import RateModel
from heraldqkd.optimizer import (
    LAMBDA_BOUNDS,
    T_BOUNDS,
    OptimizationSpec,
    Variable,
    default_variables,
    grid_oracle,
    maximize,
    maximize_function,
)
from heraldqkd.schemes import SchemeConfig


def concave(params):
    v = -((params["x"] - 0.3) ** 2)
    return v, -v


def test_variable_validation():
    with pytest.raises(ValueError):
        Variable("x", 1.0, 0.0)
    with pytest.raises(ValueError):
        Variable("x", 0.0, 1.0, scale="log")
    with pytest.raises(ValueError):
        Variable("x", 0.0, math.inf)


def test_variable_maps_round_trip():
    for v in (Variable("t", *T_BOUNDS), Variable("lam", *LAMBDA_BOUNDS, scale="log")):
        for x in (v.lower * 1.5, (v.lower + v.upper) / 2, v.upper * 0.9):
            assert v.from_z(v.to_z(x)) == pytest.approx(x, rel=1e-9)
        assert v.lower <= v.from_z(-800) <= v.upper
        assert v.lower <= v.from_z(800) <= v.upper


def test_spec_validation():
    with pytest.raises(ValueError):
        OptimizationSpec(objective="C")
    with pytest.raises(ValueError):
        OptimizationSpec(multistart=0)
    with pytest.raises(ValueError):
        OptimizationSpec((Variable("x", 0, 1), Variable("x", 0, 2)))


def test_concave_argmax():
    res = maximize_function(concave, [Variable("x", 0.0, 1.0)])
    assert res.params["x"] == pytest.approx(0.3, abs=1e-4)


def test_grid_brackets_concave_optimum():
    xs = [i / 24 for i in range(25)]
    best = max(xs, key=lambda x: concave({"x": x})[0])
    assert abs(best - 0.3) <= 1 / 24


def test_result_never_worse_than_starts():
    res = maximize_function(concave, [Variable("x", 0.0, 1.0)], multistart=5)
    assert all(res.rate >= start_value for _, start_value, _ in res.starts)


def test_empty_variable_list_evaluates_fixed_point():
    res = maximize_function(lambda p: (7.0, -7.0), [])
    assert res.params == {} and res.rate == 7.0 and res.evaluations == 1
    cfg = SchemeConfig("relay", n_max_pairs=2, lambda_ab=0.01, lambda_bb=0.02)
    model = RateModel(cfg)
    spec = OptimizationSpec(variables=(), objective="A")
    expected = model.report(cfg).rate_a
    assert grid_oracle(spec, cfg, model=model).rate == pytest.approx(expected)
    assert maximize(spec, cfg, model).rate == pytest.approx(expected)


def test_default_variables():
    names = lambda cfg: [v.name for v in default_variables(cfg)]
    assert names(SchemeConfig("relay")) == ["lambda_ab", "lambda_bb"]
    assert names(SchemeConfig("amplifier")) == ["t", "lambda_ab", "lambda_single"]
    assert names(SchemeConfig("amplifier", source_model="oracle")) == ["t"]
    assert len(default_variables(SchemeConfig("relay"), angles=True)) == 7


@pytest.fixture(scope="module")
def relay_model():
    return RateModel(SchemeConfig("relay", eta_c=1.0, eta_det=1.0))


def test_ideal_relay_optimum_is_analytic(relay_model):
    # lossless detection keeps only the two-photon terms, whose ratio p0 p2 / p1^2 = 3/4 is
    # independent of lambda, so the rate follows p1^2, which peaks at lambda = 1/2
    cfg = relay_model.template
    res = maximize(OptimizationSpec(objective="B"), cfg, relay_model)
    assert res.rate > 0
    for name in ("lambda_ab", "lambda_bb"):
        assert LAMBDA_BOUNDS[0] <= res.params[name] <= LAMBDA_BOUNDS[1]
        assert res.params[name] == pytest.approx(0.5, abs=1e-3)


def test_lossy_relay_optimum_is_interior():
    cfg = SchemeConfig("relay", eta_c=0.99, eta_det=0.99)
    res = maximize(OptimizationSpec(objective="B"), cfg)
    assert res.rate > 0
    for name in ("lambda_ab", "lambda_bb"):
        assert 1e-3 < res.params[name] < 0.45


def test_relay_matches_grid_oracle(relay_model):
    cfg = relay_model.template
    spec = OptimizationSpec(objective="B")
    simplex = maximize(spec, cfg, relay_model)
    grid = grid_oracle(spec, cfg, resolution=25, model=relay_model)
    assert simplex.rate >= grid.rate * 0.99
    assert all(LAMBDA_BOUNDS[0] <= x <= LAMBDA_BOUNDS[1] for x in simplex.params.values())


def test_determinism(relay_model):
    spec = OptimizationSpec(objective="A", multistart=3, seed=11)
    a = maximize(spec, relay_model.template, relay_model)
    b = maximize(spec, relay_model.template, relay_model)
    assert a.params == b.params and a.rate == b.rate


def test_all_zero_objective_reports_zero_point():
    cfg = SchemeConfig("relay", eta_det=0.5, eta_c=0.5, n_max_pairs=2)
    res = maximize(OptimizationSpec(objective="B", multistart=2), cfg)
    assert res.rate == 0
    assert set(res.params) == {"lambda_ab", "lambda_bb"}


def test_amplifier_transmittance_trade_off():
    # at 60 km with ideal singles and one free parameter, t is neither pushed to 1 nor to the lower bound
    cfg = SchemeConfig("amplifier", source_model="ideal_singles", lambda_ab=0.01, distance_km=60, n_max_pairs=3)
    spec = OptimizationSpec(variables=(Variable("t", *T_BOUNDS),), objective="A", multistart=4)
    model = RateModel(cfg)
    res = maximize(spec, cfg, model)
    t = res.params["t"]
    assert 0.05 < t < 0.99
    near_one = model.report(model.config(t=0.999)).rate_a
    near_zero = model.report(model.config(t=0.02)).rate_a
    assert res.rate > near_one and res.rate > near_zero
