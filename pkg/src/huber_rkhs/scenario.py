"""Synthetic regression scenarios ``y = f_star(x) + eps``."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractViolation, InfiniteMomentError
from .kernel import KernelSpec, RepresenterFunction, as_points, evaluate
from .noise import GaussianNoise, NoiseModel, noise_from_dict
from .quadrature import INNER_TOLERANCE, QuadratureGrid, expect, gauss_legendre_rule
from .seeding import make_rng
from .solver import Dataset

TARGET_FAMILIES = ("constant", "sinusoid", "rkhs_element")
DEFAULT_PROBE_POINTS = 1024
DEFAULT_GRID_NODES = 129


@dataclass(frozen=True, eq=False)
class TargetFunction:
    """Regression function with a declared sup-norm bound ``bound_M``.

    ``sinusoid`` is ``amplitude * sin(2 pi frequency x_0)``.  When
    ``bound_M`` is None the scenario fills it in from the probe grid.
    """

    family: str = "sinusoid"
    value: float = 0.0
    amplitude: float = 1.0
    frequency: float = 1.0
    function: RepresenterFunction | None = None
    bound_M: float | None = None

    def __post_init__(self):
        if self.family not in TARGET_FAMILIES:
            raise ContractViolation(f"unknown target family {self.family!r}")
        if self.family == "rkhs_element" and self.function is None:
            raise ContractViolation("rkhs_element target needs a representer function")
        if self.bound_M is not None and not self.bound_M >= 0:
            raise ContractViolation("bound_M must be nonnegative")

    def __call__(self, x):
        if self.family == "rkhs_element":
            return evaluate(self.function, x)
        X = as_points(x)
        if self.family == "constant":
            return np.full(X.shape[0], float(self.value))
        return self.amplitude * np.sin(2.0 * math.pi * self.frequency * X[:, 0])

    def natural_bound(self):
        if self.family == "constant":
            return abs(float(self.value))
        if self.family == "sinusoid":
            return abs(float(self.amplitude))
        return None

    def to_dict(self):
        out = {"family": self.family}
        if self.family == "constant":
            out["value"] = float(self.value)
        elif self.family == "sinusoid":
            out.update(amplitude=float(self.amplitude), frequency=float(self.frequency))
        else:
            out.update(support=self.function.support_points.tolist(),
                       coefficients=self.function.coefficients.tolist())
        out["bound_M"] = self.bound_M
        return out


@dataclass(frozen=True, eq=False)
class MarginalX:
    """Input distribution: uniform on an interval or a finite weighted grid."""

    family: str = "uniform_interval"
    lo: float = 0.0
    hi: float = 1.0
    points: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.family == "uniform_interval":
            if not self.hi > self.lo:
                raise ContractViolation("uniform_interval needs hi > lo")
        elif self.family == "weighted_grid":
            pts = as_points(self.points)
            w = np.asarray(self.weights, dtype=float).reshape(-1)
            if pts.shape[0] != w.shape[0] or w.size == 0:
                raise ContractViolation("weighted_grid needs one weight per point")
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ContractViolation("weighted_grid weights must be nonnegative and sum to 1")
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "weights", w)
        else:
            raise ContractViolation(f"unknown marginal family {self.family!r}")

    @property
    def dim(self):
        return 1 if self.family == "uniform_interval" else self.points.shape[1]

    def sample(self, rng, n):
        if self.family == "uniform_interval":
            return rng.uniform(self.lo, self.hi, size=(n, 1))
        idx = rng.choice(self.weights.shape[0], size=n, p=self.weights)
        return self.points[idx]

    def quadrature_grid(self, nodes=DEFAULT_GRID_NODES, inner_tolerance=INNER_TOLERANCE):
        if self.family == "weighted_grid":
            return QuadratureGrid(self.points, self.weights, inner_tolerance)
        x, w = gauss_legendre_rule(self.lo, self.hi, nodes)
        return QuadratureGrid(x, w, inner_tolerance)

    def probe(self, count=DEFAULT_PROBE_POINTS):
        if self.family == "weighted_grid":
            return self.points
        return np.linspace(self.lo, self.hi, int(count)).reshape(-1, 1)

    def to_dict(self):
        if self.family == "uniform_interval":
            return {"family": self.family, "lo": float(self.lo), "hi": float(self.hi)}
        return {"family": self.family, "points": self.points.tolist(),
                "weights": self.weights.tolist()}


@dataclass(frozen=True, eq=False)
class Scenario:
    target: TargetFunction
    marginal: MarginalX
    noise: NoiseModel
    kernel: KernelSpec
    probe_grid: np.ndarray

    def __post_init__(self):
        probe = as_points(self.probe_grid)
        if probe.shape[0] == 0:
            raise ContractViolation("probe grid must be nonempty")
        if self.marginal.family == "uniform_interval" and (
                probe.min() < self.marginal.lo or probe.max() > self.marginal.hi):
            raise ContractViolation("probe grid leaves the marginal's support")
        probe.setflags(write=False)
        object.__setattr__(self, "probe_grid", probe)
        sup = float(np.max(np.abs(self.target(probe))))
        if self.target.bound_M is None:
            bound = self.target.natural_bound()
            object.__setattr__(self, "target", replace(self.target, bound_M=sup if bound is None else bound))
        elif sup > self.target.bound_M * (1 + 1e-12):
            raise ContractViolation(f"target reaches {sup:g} on the probe grid, above bound_M={self.target.bound_M:g}")

    @classmethod
    def build(cls, target, marginal, noise, kernel, probe_points=DEFAULT_PROBE_POINTS):
        return cls(target, marginal, noise, kernel, marginal.probe(probe_points))

    @property
    def bound_M(self):
        return float(self.target.bound_M)

    @property
    def epsilon(self):
        return float(self.noise.epsilon)

    def quadrature_grid(self, nodes=DEFAULT_GRID_NODES, inner_tolerance=INNER_TOLERANCE):
        return self.marginal.quadrature_grid(nodes, inner_tolerance)

    def with_noise(self, noise):
        return replace(self, noise=noise)

    def to_dict(self):
        return {
            "target": self.target.to_dict(),
            "marginal": self.marginal.to_dict(),
            "noise": self.noise.to_dict(),
            "kernel": self.kernel.to_dict(),
            "probe_points": int(self.probe_grid.shape[0]),
        }


def _check_keys(data, allowed, what):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ContractViolation(f"unknown {what} key(s): {sorted(unknown)}")


def target_from_dict(data, kernel):
    data = dict(data)
    family = data.get("family", "sinusoid")
    if family == "constant":
        _check_keys(data, {"family", "value", "bound_M"}, "target")
        return TargetFunction("constant", value=float(data.get("value", 0.0)), bound_M=data.get("bound_M"))
    if family == "sinusoid":
        _check_keys(data, {"family", "amplitude", "frequency", "bound_M"}, "target")
        return TargetFunction("sinusoid", amplitude=float(data.get("amplitude", 1.0)),
                              frequency=float(data.get("frequency", 1.0)), bound_M=data.get("bound_M"))
    if family == "rkhs_element":
        _check_keys(data, {"family", "support", "coefficients", "bound_M"}, "target")
        fn = RepresenterFunction(np.asarray(data["support"], dtype=float), data["coefficients"], kernel)
        return TargetFunction("rkhs_element", function=fn, bound_M=data.get("bound_M"))
    raise ContractViolation(f"unknown target family {family!r}")


def marginal_from_dict(data):
    data = dict(data)
    family = data.get("family", "uniform_interval")
    if family == "uniform_interval":
        _check_keys(data, {"family", "lo", "hi"}, "marginal")
        return MarginalX("uniform_interval", lo=float(data.get("lo", 0.0)), hi=float(data.get("hi", 1.0)))
    _check_keys(data, {"family", "points", "weights"}, "marginal")
    return MarginalX(family, points=np.asarray(data["points"], dtype=float), weights=data["weights"])


def scenario_from_dict(data):
    _check_keys(data, {"target", "marginal", "noise", "kernel", "probe_points"}, "scenario")
    kernel = KernelSpec.from_dict(data.get("kernel", {"family": "gaussian", "bandwidth": 0.2}))
    target = target_from_dict(data.get("target", {}), kernel)
    marginal = marginal_from_dict(data.get("marginal", {}))
    noise = noise_from_dict(data.get("noise", {"family": "gaussian", "sd": 1.0}))
    return Scenario.build(target, marginal, noise, kernel, data.get("probe_points", DEFAULT_PROBE_POINTS))


def _check_moment(noise, epsilon):
    if not 1.0 + epsilon < noise.moment_limit:
        raise InfiniteMomentError(
            f"E|y|^(1+{epsilon:g}) is infinite for {noise.family} (moment limit {noise.moment_limit:g})"
        )


def _a_of_value(noise, c, power, rtol):
    return expect(noise, lambda t: abs(c + t) ** power, points=(-c,), rtol=rtol)


def a_of_x(scenario, x, epsilon, rtol=1e-9):
    """Conditional moment ``E[|y|^(1+epsilon) | x]``."""
    _check_moment(scenario.noise, epsilon)
    c = float(scenario.target(as_points(x, dim=scenario.marginal.dim)[:1])[0])
    return _a_of_value(scenario.noise, c, 1.0 + epsilon, rtol)


def a_values(scenario, epsilon, grid, rtol=1e-9):
    """``a(x_j)`` at every grid node (one quadrature per distinct target value)."""
    _check_moment(scenario.noise, epsilon)
    fvals = scenario.target(grid.x_nodes)
    uniq, inverse = np.unique(fvals, return_inverse=True)
    vals = np.array([_a_of_value(scenario.noise, float(c), 1.0 + epsilon, rtol) for c in uniq])
    return vals[inverse]


def norm_a(scenario, epsilon, grid=None):
    """``||a||_{2, rho}`` under the grid discretization of the marginal."""
    grid = scenario.quadrature_grid() if grid is None else grid
    a = a_values(scenario, epsilon, grid)
    return float(np.sqrt(np.sum(grid.x_weights * a * a)))


def sample_dataset(scenario, n, seed, *keys):
    """``n`` i.i.d. pairs; a pure function of ``(scenario, n, seed, keys)``."""
    if n < 1:
        raise ContractViolation("n must be positive")
    rng = make_rng(seed, *keys)
    xs = scenario.marginal.sample(rng, n)
    eps = np.asarray(scenario.noise.sample(rng, n), dtype=float).reshape(-1)
    return Dataset(xs, scenario.target(xs) + eps)


def zero_noise(epsilon=1.0):
    return GaussianNoise(sd=0.0, epsilon=epsilon)
