import math

import numpy as np
import pytest

from huber_rkhs import harness as H
from huber_rkhs.errors import PreconditionError
from huber_rkhs.kernel import evaluate, kappa, rkhs_norm

from conftest import make_scenario

ZERO = dict(noise={"family": "gaussian", "sd": 0.0}, target={"family": "constant", "value": 0.0})
RKHS_TARGET = {"family": "rkhs_element", "support": [[0.2], [0.5], [0.8]], "coefficients": [0.6, -0.4, 0.5]}


def test_effective_space_rescaling(heavy_scenario):
    s = H.sample_effective_space(heavy_scenario, 8.0, 25, seed=3)
    probe = heavy_scenario.probe_grid
    k = kappa(heavy_scenario.kernel, probe)
    for f, fill, sup in zip(s.functions, s.fill_fractions, s.sup_norms):
        assert 0.1 <= fill <= 1.0
        assert np.max(np.abs(evaluate(f, probe))) == pytest.approx(fill * 4.0, rel=1e-12)
        assert sup <= 4.0 * (1 + 1e-12)
        assert k * rkhs_norm(f) >= sup * (1 - 1e-12)
    again = H.sample_effective_space(heavy_scenario, 8.0, 25, seed=3)
    assert all(np.array_equal(a.coefficients, b.coefficients) and np.array_equal(a.support_points, b.support_points)
               for a, b in zip(s.functions, again.functions))


def test_effective_space_preconditions(heavy_scenario):
    with pytest.raises(PreconditionError):
        H.sample_effective_space(heavy_scenario, 2.0, 1, seed=0)
    with pytest.raises(PreconditionError):
        H.sample_effective_space(heavy_scenario, 8.0, 0, seed=0)


def test_rough_bound_zero_data():
    rep = H.check_rough_bound(make_scenario(**ZERO), [2.0], [0.1], 3, seed=0, n=20)
    assert rep.verdict and rep.details["violations"] == 0
    assert all(r["sup_norm"] == 0.0 for r in rep.rows)


def test_rough_bound_heavy_tail(heavy_scenario):
    rep = H.check_rough_bound(heavy_scenario, [2.0, 8.0], [1e-3, 1e-1], 2, seed=1, n=60)
    assert rep.verdict and rep.trials == 8 and rep.measured_margin >= 0
    with pytest.raises(PreconditionError):
        H.check_rough_bound(heavy_scenario, [], [0.1], 2)


def test_jobs_do_not_change_results(heavy_scenario):
    a = H.check_rough_bound(heavy_scenario, [2.0, 4.0], [1e-2], 3, seed=5, n=40, jobs=1)
    b = H.check_rough_bound(heavy_scenario, [2.0, 4.0], [1e-2], 3, seed=5, n=40, jobs=3)
    assert a.rows == b.rows and a.to_dict() == b.to_dict()


def test_binomial_allowance():
    assert H.binomial_allowance(0.2, 500) == pytest.approx(0.2 + 3 * math.sqrt(0.16 / 500))
    assert H.binomial_allowance(0.2, 500) == pytest.approx(0.2537, abs=1e-4)


def test_norm_bound_probabilistic_zero():
    rep = H.check_norm_bound_probabilistic(make_scenario(**ZERO), 2.0, 0.1, 1.0, 10, 100, 0.2, seed=0)
    assert rep.verdict
    assert rep.details["violation_frequency"] == 0.0
    assert rep.details["norm_a"] == 0.0
    assert all(r["rkhs_norm"] == 0.0 for r in rep.rows)


def test_norm_bound_probabilistic_preconditions(heavy_scenario):
    with pytest.raises(PreconditionError):
        H.check_norm_bound_probabilistic(heavy_scenario, 4.0, 0.1, 1.0, 20, 99, 0.2)
    with pytest.raises(PreconditionError):
        H.check_norm_bound_probabilistic(heavy_scenario, 0.5, 0.1, 1.0, 20, 100, 0.2)
    with pytest.raises(PreconditionError):
        H.check_norm_bound_probabilistic(heavy_scenario, 4.0, 0.1, 1.0, 20, 100, 1.0)


def test_norm_bound_echoes_norm_a(heavy_scenario):
    grid = heavy_scenario.quadrature_grid(nodes=33)
    rep = H.check_norm_bound_probabilistic(heavy_scenario, 4.0, 0.05, 1.0, 40, 100, 0.2, seed=2, grid=grid)
    assert rep.details["norm_a"] == pytest.approx(H.norm_a(heavy_scenario, 1.0, grid))
    assert rep.details["bound"] == pytest.approx(
        math.sqrt(2 * (rep.details["norm_a"] + 1)) * math.sqrt(2 / (0.2 * 0.05)))


def test_population_bound_formula():
    assert H.population_norm_bound(3.0, 5.0, 0.1, 1.0) == pytest.approx(math.sqrt(8) * math.sqrt(2 / 0.1))
    # eps < 1: both exponent terms equal sigma^(1-eps)
    assert H.moment_bound_factor(16.0, 0.5) == pytest.approx(8.0)
    # eps > 1: sigma^0 + sigma^(1-eps)
    assert H.moment_bound_factor(16.0, 1.5) == pytest.approx(1.25)


def test_population_norm_bound_huge_lambda(heavy_scenario):
    rep = H.check_population_norm_bound(heavy_scenario, [4.0], [1e9], 1.0,
                                        grid=heavy_scenario.quadrature_grid(nodes=33))
    assert rep.verdict and rep.rows[0]["rkhs_norm"] <= 1e-6


def test_comparison_constant():
    assert H.comparison_constant(2.0, 1.0) == pytest.approx((2 + 4) ** 2 * 4)
    a, eps, l2 = 1.3, 0.7, 0.25
    C = H.comparison_constant(a, eps)
    allowed = lambda s: 2 * math.sqrt(C) * s ** (-eps) * math.sqrt(l2)
    assert allowed(16.0) / allowed(8.0) == pytest.approx(2 ** (-eps))


def test_comparison_zero_scenario():
    sc = make_scenario(**ZERO)
    rep = H.check_comparison(sc, [4.0], 1.0, 100, seed=0, grid=sc.quadrature_grid(nodes=33))
    assert rep.details["C"] == 0.0
    # zero noise, sigma > 2 sup|f|: Xi = (f_star - f)^2 exactly, so both sides coincide
    assert all(abs(r["excess_risk"] - r["l2_sq"]) <= 1e-12 * r["l2_sq"] for r in rep.rows)
    assert rep.verdict


def test_comparison_precondition(heavy_scenario):
    with pytest.raises(PreconditionError):
        H.check_comparison(heavy_scenario, [1.0, 4.0], 1.0, 100)
    with pytest.raises(PreconditionError):
        H.check_comparison(heavy_scenario, [4.0], 1.0, 99)


def test_comparison_small_heavy(heavy_scenario):
    rep = H.check_comparison(heavy_scenario, [4.0, 8.0], 1.0, 100, seed=4,
                             grid=heavy_scenario.quadrature_grid(nodes=65))
    assert rep.verdict
    assert rep.details["sharp_violations"] == 0 and rep.details["positivity_violations"] == 0


def test_bias_symmetric_zero_target():
    sc = make_scenario(target={"family": "constant", "value": 0.0})
    rep = H.check_bias_bound(sc, 1e-2, 1.0, [2.0, 4.0, 8.0, 16.0], grid=sc.quadrature_grid(nodes=33))
    assert rep.verdict and rep.details["at_floor"]
    assert all(r["raw_gap"] == 0.0 for r in rep.rows)


def test_bias_preconditions(heavy_scenario):
    with pytest.raises(PreconditionError):
        H.check_bias_bound(heavy_scenario, 1e-2, 1.0, [4.0])
    with pytest.raises(PreconditionError):
        H.check_bias_bound(heavy_scenario, 1e-2, 1.0, [2.0, 4.0, 9.0, 16.0])
    with pytest.raises(PreconditionError):
        H.check_bias_bound(heavy_scenario, 1e-2, 1.0, [0.5, 1.0, 2.0, 4.0])
    with pytest.raises(PreconditionError):
        H.check_bias_bound(heavy_scenario, 1e-2, 1.0, [8.0, 4.0, 2.0, 1.0])


def test_variance_rhs_branches():
    # eps = 1: sigma^(1 - eps) = 1, so sigma enters only through B
    a = H.variance_rhs(0.5, 2.0, 1.0, 10.0, 8.0, 1.0)
    B = 0.5 + 40.0 / 64.0
    assert a == pytest.approx(3.0 * math.sqrt(B) + 9.0 * B)
    b = H.variance_rhs(0.5, 2.0, 1.0, 10.0, 8.0, 1.5)
    B = 0.5 + 40.0 / 8.0 ** 3
    assert b == pytest.approx(3.0 ** 0.8 * B ** 0.6 + 9.0 * B)


def test_variance_ratio_rows():
    sc = make_scenario(**ZERO)
    rep = H.check_variance_bound(sc, [4.0, 8.0], 1.0, 5, seed=0, grid=sc.quadrature_grid(nodes=17))
    assert rep.details["internal_inconsistencies"] == 0
    for r in rep.rows:
        # zero noise: Xi = (f_star - f)^2, so E Xi = L2^2 and E Xi^2 = E (f_star - f)^4
        assert r["excess_risk"] == pytest.approx(r["l2_sq"], rel=1e-12)
        assert r["ratio"] == pytest.approx(r["xi_second_moment"] / r["rhs"])
    # f = f_star gives E Xi^2 = 0 and hence ratio 0
    grid = sc.quadrature_grid(nodes=17)
    assert H.xi_moments(sc.target, sc, H.HuberLoss(4.0), grid) == (0.0, 0.0)


def test_rate_noiseless_decreasing():
    sc = make_scenario(noise={"family": "gaussian", "sd": 0.0, "epsilon": 1.0}, target=RKHS_TARGET)
    rep = H.rate_experiment(sc, 1.0, 1.0, 1.0, 1.0, [50, 100, 200, 400], 10, seed=0,
                            grid=sc.quadrature_grid(nodes=65))
    assert rep.verdict
    # noiseless error is the approximation term, of order lam ~ n^(-1/3) here
    assert rep.details["huber_slope"] < -0.25
    assert not rep.details["heavy_tailed"]
    table = rep.details["table"]
    assert [t["n"] for t in table] == [50, 100, 200, 400]
    assert table[0]["sigma"] == pytest.approx(50 ** (1 / 6))


def test_rate_preconditions(heavy_scenario):
    with pytest.raises(PreconditionError):
        H.rate_experiment(heavy_scenario, 1.0, 1.0, 1.0, 1.0, [50, 100], 9)
    with pytest.raises(PreconditionError):
        H.rate_experiment(heavy_scenario, 1.0, 1.0, 1.0, 1.0, [100], 10)
