"""Regularized Huber regression in an RKHS and its least-squares baseline.

Both estimators minimize over ``span{K(x_i, .)}``, which contains the exact
minimizer by the representer theorem.  With ``f = G alpha`` on the sample the
Huber objective reads

    J(alpha) = (1/n) sum_i loss(y_i - (G alpha)_i) + lam * alpha' G alpha.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation, DivergenceError
from .kernel import RepresenterFunction, as_points, evaluate, gram, kappa, quadratic_norm
from .linalg import JITTER_GROWTH, JITTER_MAX, JITTER_START, solve_weighted_gram
from .robust_loss import HuberLoss

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = as_points(self.xs)
        ys = np.asarray(self.ys, dtype=float).reshape(-1)
        if xs.shape[0] != ys.shape[0] or ys.shape[0] < 1:
            raise ContractViolation(f"need n >= 1 matching rows, got {xs.shape[0]} and {ys.shape[0]}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ContractViolation("dataset entries must be finite")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self):
        return self.ys.shape[0]

    def to_csv_rows(self):
        d = self.xs.shape[1]
        header = [f"x{j}" for j in range(d)] + ["y"]
        return header, np.column_stack([self.xs, self.ys])


@dataclass(frozen=True)
class FitConfig:
    lam: float
    tol_objective: float = 1e-10
    tol_gradient: float | None = None  # default 1e-8 * sqrt(n) * sigma
    max_iterations: int = 500
    init: str = "ridge"  # or "zero"
    jitter_start: float = JITTER_START
    jitter_max: float = JITTER_MAX
    jitter_growth: float = JITTER_GROWTH

    def __post_init__(self):
        if not self.lam > 0:
            raise ContractViolation("lambda must be positive")
        if not self.tol_objective > 0 or (self.tol_gradient is not None and not self.tol_gradient > 0):
            raise ContractViolation("tolerances must be positive")
        if self.max_iterations < 1:
            raise ContractViolation("max_iterations must be positive")
        if self.init not in ("ridge", "zero"):
            raise ContractViolation(f"unknown init {self.init!r}")

    @property
    def jitter(self):
        return {"jitter_start": self.jitter_start, "jitter_max": self.jitter_max,
                "jitter_growth": self.jitter_growth}


@dataclass(frozen=True, eq=False)
class FittedModel:
    function: RepresenterFunction
    lam: float
    sigma: float | None
    rkhs_norm: float
    sup_norm_probe: float
    kappa: float
    objective_value: float
    iterations: int
    converged: bool
    gradient_norm: float = 0.0
    objective_history: tuple = field(default_factory=tuple)

    @property
    def coefficients(self):
        return self.function.coefficients

    def predict(self, x):
        return evaluate(self.function, x)

    def to_dict(self):
        return {
            "estimator": "ridge" if self.sigma is None else "huber",
            "kernel": self.function.kernel.to_dict(),
            "sigma": self.sigma,
            "lambda": self.lam,
            "coefficients": self.function.coefficients.tolist(),
            "support_points": self.function.support_points.tolist(),
            "rkhs_norm": self.rkhs_norm,
            "sup_norm_probe": self.sup_norm_probe,
            "kappa": self.kappa,
            "objective": self.objective_value,
            "gradient_norm": self.gradient_norm,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _huber_objective(G, alpha, ys, loss, lam):
    r = ys - G @ alpha
    return float(np.mean(loss.loss(r)) + lam * (alpha @ G @ alpha))


def _huber_gradient(G, alpha, ys, loss, lam):
    r = ys - G @ alpha
    return G @ (2.0 * lam * alpha - loss.dloss(r) / ys.shape[0])


def empirical_objective(f, data, loss, lam):
    """``(1/n) sum loss(y_i - f(x_i)) + lam ||f||_K^2`` for any representer function."""
    from .kernel import rkhs_norm

    resid = data.ys - evaluate(f, data.xs)
    return float(np.mean(loss.loss(resid)) + lam * rkhs_norm(f) ** 2)


def _package(kernel, data, alpha, G, lam, sigma, objective, iterations, converged,
             gradient_norm, history, probe):
    f = RepresenterFunction(data.xs, alpha, kernel)
    probe = data.xs if probe is None else as_points(probe, dim=data.xs.shape[1])
    sup = float(np.max(np.abs(evaluate(f, probe))))
    return FittedModel(
        function=f, lam=lam, sigma=sigma, rkhs_norm=quadratic_norm(G, alpha),
        sup_norm_probe=sup, kappa=kappa(kernel, probe), objective_value=objective,
        iterations=iterations, converged=converged, gradient_norm=gradient_norm,
        objective_history=tuple(history),
    )


def _ridge_coefficients(G, ys, lam, jitter):
    n = ys.shape[0]
    return solve_weighted_gram(G, np.ones(n), n * lam, ys, **jitter)


def fit_kernel_ridge(data, kernel, lam, probe=None, G=None):
    """Closed-form kernel ridge: ``(G + n lam I) alpha = y``."""
    if not lam > 0:
        raise ContractViolation("lambda must be positive")
    G = gram(kernel, data.xs) if G is None else G
    alpha = _ridge_coefficients(G, data.ys, lam, FitConfig(lam).jitter)
    r = data.ys - G @ alpha
    objective = float(np.mean(r * r) + lam * (alpha @ G @ alpha))
    grad = G @ (2.0 * lam * alpha - 2.0 * r / data.n)
    return _package(kernel, data, alpha, G, lam, None, objective, 1, True,
                    float(np.linalg.norm(grad)), (objective,), probe)


def _irls_step(G, alpha, ys, loss, lam, jitter):
    # majorizer: loss(r) <= w r^2 + const with w = min(1, sigma/|r0|), tight at r0
    n = ys.shape[0]
    w = loss.irls_weight(ys - G @ alpha)
    return solve_weighted_gram(G, w, n * lam, w * ys, **jitter)


def _newton_direction(G, alpha, ys, loss, lam, jitter):
    # semismooth Newton on the piecewise quadratic objective: (D G + n lam I) d = psi/2 - n lam alpha
    n = ys.shape[0]
    r = ys - G @ alpha
    D = (~loss.saturated(r)).astype(float)
    return solve_weighted_gram(G, D, n * lam, 0.5 * loss.dloss(r) - n * lam * alpha, **jitter)


def fit_huber_krr(data, kernel, loss, cfg, probe=None, G=None):
    """Minimize the regularized empirical Huber risk.

    Each iteration takes one IRLS (majorize-minimize) step and then tries a
    backtracked semismooth Newton step from the new point, kept only if it
    lowers the objective.  The recorded objective sequence is therefore
    non-increasing.  Stops when the relative decrease is below
    ``cfg.tol_objective`` and the gradient norm below ``cfg.tol_gradient``.

    Returns a :class:`FittedModel` whose ``converged`` flag is false if
    ``cfg.max_iterations`` was exhausted.
    """
    if not isinstance(loss, HuberLoss):
        loss = HuberLoss(float(loss))
    n = data.n
    G = gram(kernel, data.xs) if G is None else G
    ys = np.asarray(data.ys)
    lam = cfg.lam
    tol_grad = cfg.tol_gradient if cfg.tol_gradient is not None else 1e-8 * np.sqrt(n) * loss.sigma
    jitter = cfg.jitter

    if cfg.init == "ridge":
        alpha = _ridge_coefficients(G, ys, lam, jitter)
    else:
        alpha = np.zeros(n)
    J = _huber_objective(G, alpha, ys, loss, lam)
    if not np.isfinite(J):
        raise DivergenceError("initial objective is not finite")
    history = [J]
    converged = False
    iterations = 0
    gnorm = float(np.linalg.norm(_huber_gradient(G, alpha, ys, loss, lam)))

    while not converged and iterations < cfg.max_iterations:
        iterations += 1
        J_old = J
        candidate = _irls_step(G, alpha, ys, loss, lam, jitter)
        J_irls = _huber_objective(G, candidate, ys, loss, lam)
        if not np.isfinite(J_irls):
            raise DivergenceError(f"objective became non-finite at iteration {iterations}")
        if J_irls <= J:
            alpha, J = candidate, J_irls

        direction = _newton_direction(G, alpha, ys, loss, lam, jitter)
        step = 1.0
        for _ in range(30):
            trial = alpha + step * direction
            J_trial = _huber_objective(G, trial, ys, loss, lam)
            if np.isfinite(J_trial) and J_trial <= J:
                alpha, J = trial, J_trial
                break
            step *= 0.5
        history.append(J)

        gnorm = float(np.linalg.norm(_huber_gradient(G, alpha, ys, loss, lam)))
        rel_decrease = (J_old - J) / max(abs(J_old), 1e-300)
        if rel_decrease < cfg.tol_objective and gnorm <= tol_grad:
            converged = True

    if not converged:
        log.warning("Huber fit did not converge in %d iterations (gradient norm %.3g)",
                    iterations, gnorm)
    return _package(kernel, data, alpha, G, lam, loss.sigma, J, iterations, converged,
                    gnorm, history, probe)


class TuningChoice(NamedTuple):
    sigma: float
    lam: float
    alpha_rate: float


def tuning_rule(n, epsilon, beta, q, eta):
    """Scale and regularization coupled to the sample size.

    ``alpha = min(2 eps / beta, 1 + eps, 2)``,
    ``sigma = n ** (2 / ((1 + q)(2 + alpha + alpha beta)))``,
    ``lam = eta * sigma ** -alpha``.
    """
    if n < 1 or not (epsilon > 0 and q > 0 and eta > 0 and 0 < beta <= 1):
        raise ContractViolation("tuning_rule needs n >= 1, epsilon, q, eta > 0 and 0 < beta <= 1")
    alpha = min(2.0 * epsilon / beta, 1.0 + epsilon, 2.0)
    sigma = float(n) ** (2.0 / ((1.0 + q) * (2.0 + alpha + alpha * beta)))
    return TuningChoice(sigma=sigma, lam=eta * sigma ** (-alpha), alpha_rate=alpha)


def rate_exponent(alpha_rate, beta, q):
    """Exponent of ``n`` in the guaranteed L2 rate (multiplied by ``log n``)."""
    return -2.0 * alpha_rate * beta / ((1.0 + q) * (2.0 + alpha_rate + alpha_rate * beta))
