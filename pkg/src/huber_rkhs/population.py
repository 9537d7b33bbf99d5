"""Quadrature oracle for population quantities of the Huber objective.

Expectations over ``x`` use the grid rule of the marginal; expectations over
the noise are one-dimensional.  With ``s = f_star(x) - f(x)`` the residual is
``s + eps``, so everything reduces to the shift functions

    h(s)   = E loss(s + eps)
    h'(s)  = E dloss(s + eps)            (closed form from CDF and partial mean)
    h''(s) = 2 P(|s + eps| < sigma)      (closed form)

``h`` itself integrates the quadratic window adaptively and adds the linear
tails in closed form.
"""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation, OptimizationError
from .kernel import RepresenterFunction, gram, quadratic_norm
from .linalg import solve_weighted_gram
from .quadrature import density_cuts, integrate_segments

log = logging.getLogger(__name__)


def _values(f, nodes):
    return np.asarray(f(nodes), dtype=float).reshape(-1)


def _interval_mass(noise, a, b):
    # P(a < eps < b), choosing the branch that avoids cancellation
    return np.where(a > 0, noise.sf(a) - noise.sf(b), noise.cdf(b) - noise.cdf(a))


def shift_loss(noise, loss, s, rtol):
    """``h(s) = E loss(s + eps)`` for a scalar shift."""
    s = float(s)
    sig = loss.sigma
    if noise.degenerate:
        return float(loss.loss(s))
    a, b = -sig - s, sig - s
    pdf = noise.pdf
    edges = [a, b, *density_cuts(noise, a, b)]
    middle = integrate_segments(lambda t: (s + t) ** 2 * pdf(t), edges, rtol)
    right = (2 * sig * s - sig ** 2) * float(noise.sf(b)) + 2 * sig * float(noise.upper_first_moment(b))
    left = (-2 * sig * s - sig ** 2) * float(noise.cdf(a)) + 2 * sig * float(noise.upper_first_moment(a))
    return middle + right + left


def shift_dloss(noise, loss, s):
    """``h'(s)``, vectorized over ``s``."""
    s = np.asarray(s, dtype=float)
    sig = loss.sigma
    a, b = -sig - s, sig - s
    inside = noise.upper_first_moment(a) - noise.upper_first_moment(b)
    return 2.0 * (s * _interval_mass(noise, a, b) + inside) + 2.0 * sig * (noise.sf(b) - noise.cdf(a))


def shift_d2loss(noise, loss, s):
    """``h''(s) = 2 P(|s + eps| < sigma)``, vectorized over ``s``."""
    s = np.asarray(s, dtype=float)
    return 2.0 * _interval_mass(noise, -loss.sigma - s, loss.sigma - s)


def _xi_node(noise, loss, d, rtol, second):
    # Xi(t) = loss(t + d) - loss(t); constant +-2 sigma d once both residuals saturate
    sig = loss.sigma
    if d == 0.0:
        return 0.0
    if noise.degenerate:
        xi = float(loss.loss(d) - loss.loss(0.0))
        return xi * xi if second else xi
    lo, hi = min(-sig, -sig - d), max(sig, sig - d)
    pdf = noise.pdf
    edges = [lo, hi, *[p for p in (-sig, sig, -sig - d, sig - d) if lo < p < hi], *density_cuts(noise, lo, hi)]
    if second:
        mid = integrate_segments(lambda t: (loss.loss(t + d) - loss.loss(t)) ** 2 * pdf(t), edges, rtol)
        return mid + 4.0 * sig * sig * d * d * (float(noise.sf(hi)) + float(noise.cdf(lo)))
    mid = integrate_segments(lambda t: (loss.loss(t + d) - loss.loss(t)) * pdf(t), edges, rtol)
    return mid + 2.0 * sig * d * (float(noise.sf(hi)) - float(noise.cdf(lo)))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _xi_mean_node(noise, loss, d):
    # E Xi = int_0^d h'(u) du; h' is closed form and h'' only kinks where a
    # density kink crosses -sigma - u or sigma - u, so composite Gauss-Legendre
    # on kink-free pieces no wider than one noise scale converges fast
    if d == 0.0:
        return 0.0
    if noise.degenerate:
        return float(loss.loss(d) - loss.loss(0.0))
    sig = loss.sigma
    lo, hi = min(0.0, d), max(0.0, d)
    cuts = [u for k in noise.kinks for u in (-sig - k, sig - k) if lo < u < hi]
    edges = np.unique(np.array([lo, hi, *cuts]))
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(1, int(np.ceil((b - a) / noise.scale)))
        pieces.append(np.linspace(a, b, m + 1))
    knots = np.unique(np.concatenate(pieces))
    left, right = knots[:-1, None], knots[1:, None]
    u = 0.5 * (right - left) * _GL_X + 0.5 * (right + left)
    vals = shift_dloss(noise, loss, u)
    total = float(np.sum(0.5 * (right - left) * (vals @ _GL_W[:, None])))
    return total if d > 0 else -total


def _ladder(noise, lo, hi):
    # panel edges at 0, +-scale * 2^k / 2 and +-scale * 3 * 2^k / 4: widths grow
    # with the distance from the density centre, keeping every panel well
    # inside the analyticity region of a unimodal density
    sc = noise.scale
    big = max(abs(lo), abs(hi))
    r = 0.5 * sc
    pts = [0.0]
    while r < big:
        pts += [r, 1.5 * r]
        r *= 2.0
    pts = np.array(pts)
    return np.concatenate([-pts, pts])


def _xi_second_node(noise, loss, d):
    """``E[Xi^2]`` at one node by composite Gauss-Legendre between kinks."""
    if d == 0.0:
        return 0.0
    sig = loss.sigma
    if noise.degenerate:
        return float(loss.loss(d) - loss.loss(0.0)) ** 2
    lo, hi = min(-sig, -sig - d), max(sig, sig - d)
    cuts = [-sig, sig, -sig - d, sig - d, *noise.kinks, *_ladder(noise, lo, hi)]
    knots = np.unique(np.clip(np.array([lo, hi, *cuts]), lo, hi))
    left, right = knots[:-1, None], knots[1:, None]
    t = 0.5 * (right - left) * _GL_X + 0.5 * (right + left)
    xi = loss.loss(t + d) - loss.loss(t)
    mid = float(np.sum(0.5 * (right - left) * ((xi * xi * noise.pdf(t)) @ _GL_W[:, None])))
    return mid + 4.0 * sig * sig * d * d * (float(noise.sf(hi)) + float(noise.cdf(lo)))


def risk(f, scenario, loss, grid):
    """``R(f) = E loss(y - f(x))``."""
    s = scenario.target(grid.x_nodes) - _values(f, grid.x_nodes)
    h = np.array([shift_loss(scenario.noise, loss, si, grid.inner_tolerance) for si in s])
    return float(grid.x_weights @ h)


def excess_risk(f, scenario, loss, grid):
    """``E[Xi] = R(f) - R(f_star)``, integrated as a difference to avoid cancellation."""
    d = scenario.target(grid.x_nodes) - _values(f, grid.x_nodes)
    xi = np.array([_xi_mean_node(scenario.noise, loss, float(di)) for di in d])
    return float(grid.x_weights @ xi)


def l2_distance_sq(f, g, grid):
    diff = _values(f, grid.x_nodes) - _values(g, grid.x_nodes)
    return float(grid.x_weights @ (diff * diff))


def xi_moments(f, scenario, loss, grid):
    """``(E[Xi], E[Xi^2])`` for ``Xi = loss(y - f(x)) - loss(y - f_star(x))``."""
    d = scenario.target(grid.x_nodes) - _values(f, grid.x_nodes)
    m1 = np.array([_xi_mean_node(scenario.noise, loss, float(di)) for di in d])
    m2 = np.array([_xi_second_node(scenario.noise, loss, float(di)) for di in d])
    return float(grid.x_weights @ m1), float(grid.x_weights @ m2)


class PopulationQuantities(NamedTuple):
    risk_f: float
    risk_fstar: float
    excess_risk: float
    l2_sq: float
    xi_mean: float
    xi_second_moment: float


def population_quantities(f, scenario, loss, grid):
    risk_f = risk(f, scenario, loss, grid)
    risk_fstar = risk(scenario.target, scenario, loss, grid)
    m1, m2 = xi_moments(f, scenario, loss, grid)
    return PopulationQuantities(risk_f, risk_fstar, risk_f - risk_fstar,
                                l2_distance_sq(f, scenario.target, grid), m1, m2)


def reference_function(scenario, lam, grid):
    """Regularized L2 projection of ``f_star`` onto the span of the grid kernels.

    Solves ``(W G + lam I) alpha = W F_star`` exactly.
    """
    if not lam > 0:
        raise ContractViolation("lambda must be positive")
    G = gram(scenario.kernel, grid.x_nodes)
    w = grid.x_weights
    fstar = scenario.target(grid.x_nodes)
    alpha = solve_weighted_gram(G, w, lam, w * fstar)
    return RepresenterFunction(grid.x_nodes, alpha, scenario.kernel)


def _population_objective(G, alpha, fstar, w, noise, loss, lam, rtol, offset):
    s = fstar - G @ alpha
    h = np.array([shift_loss(noise, loss, si, rtol) for si in s])
    return float(w @ h + lam * (alpha @ G @ alpha)) - offset


def population_minimizer(scenario, loss, lam, grid, centered=True, tol_gradient=1e-10,
                         max_iterations=100, return_info=False):
    """Minimizer of the grid-discretized regularized population Huber risk.

    Minimizes ``sum_j w_j h(f_star(x_j) - (G alpha)_j) + lam alpha' G alpha``
    over the span of the grid kernels by damped Newton with Armijo
    backtracking, started from the least-squares reference function.  With
    ``centered`` the constant ``R(f_star)`` is subtracted from the objective,
    which leaves the minimizer unchanged.
    """
    if not lam > 0:
        raise ContractViolation("lambda must be positive")
    noise = scenario.noise
    G = gram(scenario.kernel, grid.x_nodes)
    w = np.asarray(grid.x_weights)
    fstar = scenario.target(grid.x_nodes)
    rtol = grid.inner_tolerance
    offset = risk(scenario.target, scenario, loss, grid) if centered else 0.0

    alpha = np.array(reference_function(scenario, lam, grid).coefficients)
    J = _population_objective(G, alpha, fstar, w, noise, loss, lam, rtol, offset)
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        s = fstar - G @ alpha
        hp = w * shift_dloss(noise, loss, s)
        grad = G @ (2.0 * lam * alpha - hp)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol_gradient:
            break
        D = w * shift_d2loss(noise, loss, s)
        direction = solve_weighted_gram(G, D, 2.0 * lam, hp - 2.0 * lam * alpha)
        slope = float(grad @ direction)
        # quadrature noise in J; near the optimum Newton decreases fall below it
        noise_floor = 10.0 * rtol * (abs(J) + abs(offset))
        step = 1.0
        for _ in range(40):
            trial = alpha + step * direction
            J_trial = _population_objective(G, trial, fstar, w, noise, loss, lam, rtol, offset)
            if J_trial <= J + 1e-4 * step * slope + noise_floor:
                break
            step *= 0.5
        else:
            raise OptimizationError(f"line search failed (gradient norm {gnorm:.3g})")
        alpha, J = trial, J_trial
    else:
        raise OptimizationError(f"population minimizer did not converge (gradient norm {gnorm:.3g})")
    f = RepresenterFunction(grid.x_nodes, alpha, scenario.kernel)
    if return_info:
        return f, {"objective": J, "gradient_norm": gnorm, "iterations": iterations}
    return f


def bias_functionals(scenario, loss, lam, grid):
    """``(D(lam, sigma), D(lam))`` on a common grid."""
    f_sl = population_minimizer(scenario, loss, lam, grid)
    f_l = reference_function(scenario, lam, grid)
    G = gram(scenario.kernel, grid.x_nodes)
    d_sigma = excess_risk(f_sl, scenario, loss, grid) + lam * quadratic_norm(G, f_sl.coefficients) ** 2
    d_plain = l2_distance_sq(f_l, scenario.target, grid) + lam * quadratic_norm(G, f_l.coefficients) ** 2
    return d_sigma, d_plain
