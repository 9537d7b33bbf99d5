"""Adaptive quadrature against noise densities and rules for the input marginal."""

from __future__ import annotations

import numpy as np
from scipy import integrate

from .errors import QuadratureError

INNER_TOLERANCE = 1e-10
# half-width, in noise scales, of the central window integrated directly
CENTRAL_HALF_WIDTH = 8.0
_EPSABS = 1e-15
_LIMIT = 200
# tails are cut at |t| ~ scale * e^300; beyond that every supported integrand is < 1e-30
_MAX_LOG_STRETCH = 300.0


def _quad(func, a, b, rtol, points=None):
    val, _ = integrate.quad(func, a, b, epsabs=_EPSABS, epsrel=rtol, limit=_LIMIT,
                            points=points)
    return val


def integrate_segments(func, edges, rtol=INNER_TOLERANCE):
    """Sum of adaptive Gauss-Kronrod integrals of ``func`` between consecutive edges."""
    edges = np.unique(np.asarray(edges, dtype=float))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            total += _quad(func, a, b, rtol)
    if not np.isfinite(total):
        raise QuadratureError("non-finite integral")
    return total


def density_cuts(noise, lo, hi):
    """Breakpoints inside ``(lo, hi)`` that isolate the bulk of the noise density.

    Over long windows adaptive quadrature can step over a narrow density
    entirely; cutting at 0, the kinks and ``+-scale * 8 * 4^k`` prevents that.
    """
    sc = noise.scale
    cuts = [0.0, *noise.kinks]
    r = CENTRAL_HALF_WIDTH * sc
    while r < max(abs(lo), abs(hi)):
        cuts += [-r, r]
        r *= 4.0
    return [c for c in cuts if lo < c < hi]


def _tail(func, start, width, direction, rtol):
    # t = start + direction * width * (e^v - 1): algebraic tails become exponential in v
    def mapped(v):
        if v > _MAX_LOG_STRETCH:
            return 0.0
        ev = np.exp(v)
        with np.errstate(over="ignore", invalid="ignore"):
            val = func(start + direction * width * (ev - 1.0)) * width * ev
        # overflow only happens where the density has long underflowed
        return val if np.isfinite(val) else 0.0

    val, _ = integrate.quad(mapped, 0.0, np.inf, epsabs=_EPSABS, epsrel=rtol, limit=_LIMIT)
    return val


def expect(noise, g, points=(), rtol=INNER_TOLERANCE):
    """``E g(eps)`` for ``eps`` distributed as ``noise``.

    ``points`` lists the kinks of ``g``; density kinks are added automatically.
    The real line is split into a central window, cut at every kink, and two
    tails integrated after an exponential change of variables.
    """
    if noise.degenerate:
        return float(g(0.0))
    pdf = noise.pdf

    def integrand(t):
        return g(t) * pdf(t)

    cuts = [0.0, *points, *noise.kinks]
    width = CENTRAL_HALF_WIDTH * noise.scale
    lo = min(cuts) - width
    hi = max(cuts) + width
    edges = [lo, hi, *[c for c in cuts if lo < c < hi]]
    total = integrate_segments(integrand, edges, rtol)
    total += _tail(integrand, hi, noise.scale, 1.0, rtol)
    total += _tail(integrand, lo, noise.scale, -1.0, rtol)
    if not np.isfinite(total):
        raise QuadratureError("non-finite expectation")
    return float(total)


def gauss_legendre_rule(lo, hi, nodes):
    """Gauss-Legendre nodes on ``[lo, hi]`` with weights normalized to sum to one."""
    x, w = np.polynomial.legendre.leggauss(int(nodes))
    x = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    w = w / w.sum()
    return x, w


class QuadratureGrid:
    """Nodes and probability weights discretizing the input marginal."""

    def __init__(self, x_nodes, x_weights, inner_tolerance=INNER_TOLERANCE):
        from .kernel import as_points

        nodes = as_points(x_nodes)
        weights = np.asarray(x_weights, dtype=float).reshape(-1)
        if nodes.shape[0] != weights.shape[0] or nodes.shape[0] == 0:
            raise ValueError("grid needs matching, nonempty nodes and weights")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("grid weights must be nonnegative and sum to one")
        if not inner_tolerance > 0:
            raise ValueError("inner_tolerance must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        self.x_nodes = nodes
        self.x_weights = weights
        self.inner_tolerance = float(inner_tolerance)

    def __len__(self):
        return self.x_weights.shape[0]

    def __repr__(self):
        return f"QuadratureGrid(nodes={len(self)}, inner_tolerance={self.inner_tolerance:g})"
