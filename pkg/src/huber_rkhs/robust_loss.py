"""Robust losses: the Huber loss and the interface it implements."""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, PreconditionError


class RobustLoss(abc.ABC):
    """Scale-parametrized loss usable by the IRLS solver and the oracles.

    Subclasses must be convex for the solver's majorize-minimize guarantee.
    """

    sigma: float

    @abc.abstractmethod
    def loss(self, t): ...

    @abc.abstractmethod
    def dloss(self, t): ...

    @abc.abstractmethod
    def irls_weight(self, t): ...

    @property
    @abc.abstractmethod
    def lipschitz(self): ...


@dataclass(frozen=True)
class HuberLoss(RobustLoss):
    """Huber loss with scale ``sigma``.

    ``t**2`` for ``|t| < sigma`` and ``2*sigma*|t| - sigma**2`` otherwise.
    All methods accept scalars or arrays and return the same shape.
    """

    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ContractViolation(f"sigma must be positive and finite, got {self.sigma}")

    def loss(self, t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        out = np.where(a >= self.sigma, 2.0 * self.sigma * a - self.sigma ** 2, t * t)
        return out[()] if out.ndim == 0 else out

    def dloss(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(np.abs(t) >= self.sigma, 2.0 * self.sigma * np.sign(t), 2.0 * t)
        return out[()] if out.ndim == 0 else out

    def irls_weight(self, t):
        a = np.abs(np.asarray(t, dtype=float))
        with np.errstate(divide="ignore"):
            out = np.where(a > self.sigma, self.sigma / np.where(a > self.sigma, a, 1.0), 1.0)
        return out[()] if out.ndim == 0 else out

    def saturated(self, t):
        return np.abs(np.asarray(t, dtype=float)) >= self.sigma

    @property
    def lipschitz(self):
        return 2.0 * self.sigma


def require_theorem_scale(loss, bound_M):
    """Raise unless ``sigma > max(2M, 1)``, the comparison-theorem regime."""
    threshold = max(2.0 * bound_M, 1.0)
    if not loss.sigma > threshold:
        raise PreconditionError(
            f"sigma={loss.sigma:g} must exceed max(2M, 1)={threshold:g}"
        )
