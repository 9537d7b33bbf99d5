import math

import numpy as np
import pytest

from huber_rkhs.errors import ContractViolation
from huber_rkhs.kernel import KernelSpec, RepresenterFunction, gram, rkhs_norm
from huber_rkhs.population import (
    _xi_node,
    bias_functionals,
    excess_risk,
    l2_distance_sq,
    population_minimizer,
    population_quantities,
    reference_function,
    risk,
    shift_d2loss,
    shift_dloss,
    shift_loss,
    xi_moments,
)
from huber_rkhs.quadrature import QuadratureGrid
from huber_rkhs.robust_loss import HuberLoss

from conftest import make_scenario

NOISES = {
    "student_t": {"family": "student_t", "dof": 2.5, "epsilon": 1.0},
    "asym": {"family": "asym_two_exp", "epsilon": 1.0},
    "pareto": {"family": "symmetric_pareto", "tail": 3.0, "epsilon": 1.0},
    "gaussian": {"family": "gaussian", "sd": 0.5},
    "t_heavy": {"family": "student_t", "dof": 1.5, "epsilon": 0.4},
}
RKHS_TARGET = {"family": "rkhs_element", "support": [[0.2], [0.5], [0.8]], "coefficients": [0.6, -0.4, 0.5]}


def random_function(scenario, rng, m=4, amp=1.5):
    return RepresenterFunction(rng.uniform(0, 1, (m, 1)), amp * rng.standard_normal(m), scenario.kernel)


def one_node_grid(x=0.5):
    return QuadratureGrid([[x]], [1.0])


@pytest.mark.parametrize("name", NOISES)
def test_shift_derivatives(name):
    sc = make_scenario(noise=NOISES[name])
    L = HuberLoss(3.0)
    for s in (-5.0, -1.3, 0.0, 0.4, 2.9, 7.0):
        h = 1e-4
        fd = (shift_loss(sc.noise, L, s + h, 1e-12) - shift_loss(sc.noise, L, s - h, 1e-12)) / (2 * h)
        assert shift_dloss(sc.noise, L, s) == pytest.approx(fd, abs=1e-6)
        fd2 = (shift_dloss(sc.noise, L, s + h) - shift_dloss(sc.noise, L, s - h)) / (2 * h)
        assert shift_d2loss(sc.noise, L, s) == pytest.approx(fd2, abs=1e-6)


@pytest.mark.parametrize("name", NOISES)
def test_phi_convex(name):
    sc = make_scenario(noise=NOISES[name])
    L = HuberLoss(2.5)
    u = np.linspace(-8, 8, 161)
    phi = np.array([shift_loss(sc.noise, L, v, 1e-10) for v in u])
    mid = phi[1:-1] - 0.5 * (phi[:-2] + phi[2:])
    assert np.all(mid <= 1e-9 * np.abs(phi[1:-1]))
    assert np.all(shift_d2loss(sc.noise, L, u) >= 0)


def test_risk_examples():
    quiet = make_scenario(noise={"family": "gaussian", "sd": 0.0})
    assert risk(quiet.target, quiet, HuberLoss(1.0), quiet.quadrature_grid()) == 0.0
    g = make_scenario(noise={"family": "gaussian", "sd": 0.1})
    assert risk(g.target, g, HuberLoss(100.0), g.quadrature_grid()) == pytest.approx(0.01, rel=1e-6)
    a = make_scenario(noise=NOISES["asym"])
    assert risk(a.target, a, HuberLoss(100.0), a.quadrature_grid()) == pytest.approx(19 / 16, rel=1e-5)


def test_l2_examples():
    sc = make_scenario()
    grid = sc.quadrature_grid()
    assert l2_distance_sq(sc.target, sc.target, grid) == 0.0
    shifted = lambda x: sc.target(x) + 0.3
    assert l2_distance_sq(shifted, sc.target, grid) == pytest.approx(0.09, rel=1e-12)
    two = QuadratureGrid([[0.1], [0.9]], [0.5, 0.5])
    f = lambda x: np.where(np.asarray(x)[:, 0] < 0.5, 1.0, 3.0)
    assert l2_distance_sq(f, lambda x: np.zeros(len(x)), two) == pytest.approx(5.0)


def test_xi_examples(rng):
    sc = make_scenario()
    grid = sc.quadrature_grid(nodes=33)
    assert xi_moments(sc.target, sc, HuberLoss(3.0), grid) == (0.0, 0.0)
    quiet = make_scenario(noise={"family": "gaussian", "sd": 0.0}, target={"family": "constant", "value": 0.0})
    c = 0.8
    m1, m2 = xi_moments(lambda x: np.full(len(x), c), quiet, HuberLoss(1e6), one_node_grid())
    assert m1 == pytest.approx(c ** 2, rel=1e-12) and m2 == pytest.approx(c ** 4, rel=1e-12)


@pytest.mark.parametrize("name", NOISES)
def test_xi_identities(name, rng):
    sc = make_scenario(noise=NOISES[name])
    grid = sc.quadrature_grid()
    for sigma in (3.0, 40.0):
        L = HuberLoss(sigma)
        f = random_function(sc, rng)
        m1, m2 = xi_moments(f, sc, L, grid)
        assert m1 == pytest.approx(risk(f, sc, L, grid) - risk(sc.target, sc, L, grid), abs=1e-8)
        assert m2 >= m1 * m1
        assert excess_risk(f, sc, L, grid) == pytest.approx(m1, rel=1e-14)
        pq = population_quantities(f, sc, L, grid)
        assert pq.risk_f >= 0 and pq.l2_sq >= 0
        assert abs(pq.excess_risk - (pq.risk_f - pq.risk_fstar)) < 1e-12


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("name", ["student_t", "asym", "t_heavy"])
def test_fast_xi_matches_adaptive(name, rng):
    sc = make_scenario(noise=NOISES[name])
    grid = sc.quadrature_grid(nodes=17)
    for sigma in (4.0, 64.0):
        L = HuberLoss(sigma)
        f = random_function(sc, rng, amp=sigma / 4)
        d = sc.target(grid.x_nodes) - f(grid.x_nodes)
        ref1 = grid.x_weights @ np.array([_xi_node(sc.noise, L, float(v), 1e-12, False) for v in d])
        ref2 = grid.x_weights @ np.array([_xi_node(sc.noise, L, float(v), 1e-12, True) for v in d])
        m1, m2 = xi_moments(f, sc, L, grid)
        assert m1 == pytest.approx(ref1, rel=1e-9)
        assert m2 == pytest.approx(ref2, rel=1e-9)


@pytest.mark.parametrize("name", ["student_t", "asym", "pareto", "t_heavy"])
def test_grid_doubling_stability(name, rng):
    sc = make_scenario(noise=NOISES[name])
    coarse, fine = sc.quadrature_grid(129, 1e-10), sc.quadrature_grid(257, 5e-11)
    L = HuberLoss(4.0)
    for _ in range(2):
        f = random_function(sc, rng)
        for q in (risk, excess_risk):
            a, b = q(f, sc, L, coarse), q(f, sc, L, fine)
            assert abs(a - b) <= 1e-5 * abs(b)
        a, b = l2_distance_sq(f, sc.target, coarse), l2_distance_sq(f, sc.target, fine)
        assert abs(a - b) <= 1e-5 * b
        a, b = xi_moments(f, sc, L, coarse)[1], xi_moments(f, sc, L, fine)[1]
        assert abs(a - b) <= 1e-5 * b


# the standard-error band needs a finite-variance loss, i.e. E eps^2 < inf
@pytest.mark.parametrize("name", ["student_t", "asym", "pareto"])
def test_risk_matches_monte_carlo(name):
    sc = make_scenario(noise=NOISES[name])
    grid = sc.quadrature_grid()
    rng = np.random.default_rng(99)
    L = HuberLoss(3.0)
    n = 10 ** 6
    for _ in range(5):
        f = random_function(sc, rng)
        xs = sc.marginal.sample(rng, n)
        ys = sc.target(xs) + sc.noise.sample(rng, n)
        vals = L.loss(ys - f(xs))
        se = vals.std(ddof=1) / math.sqrt(n)
        # the marginal integral is itself a quadrature rule; its error is far below se
        assert abs(vals.mean() - risk(f, sc, L, grid)) <= 5 * se


def test_reference_function_examples():
    sc = make_scenario()
    grid = sc.quadrature_grid(nodes=33)
    big = reference_function(sc, 1e12, grid)
    assert np.max(np.abs(big.coefficients)) < 1e-10
    zero = make_scenario(target={"family": "constant", "value": 0.0})
    assert np.all(reference_function(zero, 0.1, grid).coefficients == 0.0)
    one = make_scenario(target={"family": "constant", "value": 1.0})
    assert reference_function(one, 1.0, one_node_grid()).coefficients[0] == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(ContractViolation):
        reference_function(sc, 0.0, grid)


def test_reference_function_is_grid_optimal(rng):
    sc = make_scenario()
    grid = sc.quadrature_grid(nodes=33)
    lam = 1e-2
    f = reference_function(sc, lam, grid)
    G = gram(sc.kernel, grid.x_nodes)

    def obj(alpha):
        g = RepresenterFunction(grid.x_nodes, alpha, sc.kernel)
        return l2_distance_sq(g, sc.target, grid) + lam * float(alpha @ G @ alpha)

    base = obj(f.coefficients)
    for _ in range(20):
        assert obj(f.coefficients + 1e-3 * rng.standard_normal(33)) >= base


def test_population_minimizer_examples():
    sc = make_scenario()
    grid = sc.quadrature_grid(nodes=65)
    f = population_minimizer(sc, HuberLoss(4.0), 1e9, grid)
    assert rkhs_norm(f) <= 1e-6
    quiet = make_scenario(noise={"family": "gaussian", "sd": 0.0}, target=RKHS_TARGET)
    g = population_minimizer(quiet, HuberLoss(3.0), 1e-8, grid)
    assert l2_distance_sq(g, quiet.target, grid) <= 1e-4


@pytest.mark.parametrize("name", ["student_t", "asym", "pareto"])
def test_population_minimizer_stationary_and_centering(name):
    sc = make_scenario(noise=NOISES[name])
    grid = sc.quadrature_grid(nodes=65)
    L = HuberLoss(3.0)
    a, info = population_minimizer(sc, L, 1e-2, grid, return_info=True)
    b = population_minimizer(sc, L, 1e-2, grid, centered=False)
    assert info["gradient_norm"] <= 1e-10
    assert np.allclose(a.coefficients, b.coefficients, rtol=1e-6, atol=1e-9)


def test_zero_noise_huge_sigma_matches_reference():
    quiet = make_scenario(noise={"family": "gaussian", "sd": 0.0})
    grid = quiet.quadrature_grid(nodes=65)
    a = population_minimizer(quiet, HuberLoss(1e3), 1e-3, grid)
    b = reference_function(quiet, 1e-3, grid)
    assert np.allclose(a(grid.x_nodes), b(grid.x_nodes), atol=1e-8)


def test_bias_functional_examples():
    zero = make_scenario(noise={"family": "gaussian", "sd": 0.0}, target={"family": "constant", "value": 0.0})
    grid = zero.quadrature_grid(nodes=33)
    assert bias_functionals(zero, HuberLoss(3.0), 1e-2, grid) == (0.0, 0.0)
    quiet = make_scenario(noise={"family": "gaussian", "sd": 0.0}, target=RKHS_TARGET)
    lam = 1e-2
    _, d_plain = bias_functionals(quiet, HuberLoss(3.0), lam, quiet.quadrature_grid(nodes=65))
    assert 0 <= d_plain <= lam * rkhs_norm(quiet.target.function) ** 2


def test_symmetric_noise_zero_target_zero_minimizer():
    sc = make_scenario(target={"family": "constant", "value": 0.0})
    grid = sc.quadrature_grid(nodes=65)
    f = population_minimizer(sc, HuberLoss(3.0), 1e-2, grid)
    assert np.max(np.abs(f.coefficients)) == 0.0
