"""Zero-mean noise distributions with closed-form tails.

Each model exposes its density, distribution function, the upper partial
first moment ``int_a^inf t p(t) dt`` and exact samplers.  The partial moment
together with the CDF gives the expected Huber loss outside its quadratic
window without quadrature.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import special

from .errors import ContractViolation, InfiniteMomentError
from .quadrature import expect

NOISE_FAMILIES = ("gaussian", "student_t", "symmetric_pareto", "asym_two_exp")


class NoiseModel(abc.ABC):
    family: ClassVar[str]
    epsilon: float
    #: density breakpoints (points where the pdf is not smooth)
    kinks: ClassVar[tuple] = ()

    def _check_epsilon(self):
        if not self.epsilon > 0:
            raise ContractViolation("declared epsilon must be positive")
        if not 1.0 + self.epsilon < self.moment_limit:
            raise ContractViolation(
                f"{self.family}: E|eps|^(1+epsilon) must be finite; need "
                f"1+epsilon < {self.moment_limit:g}, got epsilon={self.epsilon:g}"
            )

    @property
    def moment_limit(self):
        """Supremum of ``r`` with ``E|eps|^r < inf``."""
        return math.inf

    @property
    def degenerate(self):
        return False

    @property
    @abc.abstractmethod
    def scale(self): ...

    @abc.abstractmethod
    def pdf(self, t): ...

    @abc.abstractmethod
    def cdf(self, t): ...

    def sf(self, t):
        return 1.0 - self.cdf(t)

    @abc.abstractmethod
    def upper_first_moment(self, a):
        """``int_a^inf t p(t) dt``."""

    @abc.abstractmethod
    def sample(self, rng, size=None): ...

    def abs_moment(self, p):
        """``E|eps|^p``, or ``inf`` when that moment does not exist."""
        if p < 1:
            raise ContractViolation("abs_moment requires p >= 1")
        if p >= self.moment_limit:
            return math.inf
        return self._abs_moment(p)

    def _abs_moment(self, p):
        return expect(self, lambda t: abs(t) ** p, points=(0.0,))

    def params(self):
        return {}

    def to_dict(self):
        return {"family": self.family, **self.params(), "epsilon": float(self.epsilon)}


def noise_density(model, t):
    return model.pdf(t)


def noise_sample(model, rng, size=None):
    return model.sample(rng, size)


@dataclass(frozen=True)
class GaussianNoise(NoiseModel):
    family: ClassVar[str] = "gaussian"
    sd: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        if not self.sd >= 0:
            raise ContractViolation("sd must be nonnegative")
        self._check_epsilon()

    @property
    def degenerate(self):
        return self.sd == 0

    @property
    def scale(self):
        return self.sd

    def pdf(self, t):
        if self.sd == 0:
            raise ContractViolation("the zero-variance gaussian has no density")
        z = np.asarray(t, dtype=float) / self.sd
        return np.exp(-0.5 * z * z) / (self.sd * math.sqrt(2.0 * math.pi))

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.sd == 0:
            return (t >= 0).astype(float)
        return special.ndtr(t / self.sd)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        if self.sd == 0:
            return (t < 0).astype(float)
        return special.ndtr(-t / self.sd)

    def upper_first_moment(self, a):
        a = np.asarray(a, dtype=float)
        if self.sd == 0:
            return np.zeros_like(a)
        return self.sd * np.exp(-0.5 * (a / self.sd) ** 2) / math.sqrt(2.0 * math.pi)

    def sample(self, rng, size=None):
        if self.sd == 0:
            return np.zeros(size) if size is not None else 0.0
        return self.sd * rng.standard_normal(size)

    def _abs_moment(self, p):
        if self.sd == 0:
            return 0.0
        return self.sd ** p * 2 ** (p / 2) * math.gamma((p + 1) / 2) / math.sqrt(math.pi)

    def params(self):
        return {"sd": float(self.sd)}


@dataclass(frozen=True)
class StudentTNoise(NoiseModel):
    """Scaled Student t; ``E|eps|^r`` is finite iff ``r < dof``."""

    family: ClassVar[str] = "student_t"
    dof: float = 2.5
    scale_: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        if not self.dof > 1:
            raise ContractViolation("student_t needs dof > 1 for a finite mean")
        if not self.scale_ > 0:
            raise ContractViolation("scale must be positive")
        self._check_epsilon()

    @property
    def scale(self):
        return self.scale_

    @property
    def moment_limit(self):
        return self.dof

    def _std_pdf(self, z):
        nu = self.dof
        logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        return np.exp(logc - (nu + 1) / 2 * np.log1p(z * z / nu))

    def pdf(self, t):
        z = np.asarray(t, dtype=float) / self.scale_
        return self._std_pdf(z) / self.scale_

    def cdf(self, t):
        return special.stdtr(self.dof, np.asarray(t, dtype=float) / self.scale_)

    def sf(self, t):
        return special.stdtr(self.dof, -np.asarray(t, dtype=float) / self.scale_)

    def upper_first_moment(self, a):
        z = np.asarray(a, dtype=float) / self.scale_
        nu = self.dof
        return self.scale_ * (nu + z * z) / (nu - 1) * self._std_pdf(z)

    def sample(self, rng, size=None):
        return self.scale_ * rng.standard_t(self.dof, size)

    def _abs_moment(self, p):
        nu = self.dof
        logm = (p / 2 * math.log(nu) + special.gammaln((p + 1) / 2)
                + special.gammaln((nu - p) / 2) - 0.5 * math.log(math.pi)
                - special.gammaln(nu / 2))
        return self.scale_ ** p * math.exp(logm)

    def params(self):
        return {"dof": float(self.dof), "scale": float(self.scale_)}


@dataclass(frozen=True)
class SymmetricParetoNoise(NoiseModel):
    """Density ``(p/2) (1 + |z|)^-(1+p)`` for ``z = t/scale``; moments finite iff ``r < p``."""

    family: ClassVar[str] = "symmetric_pareto"
    kinks: ClassVar[tuple] = (0.0,)
    tail: float = 3.0
    scale_: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        if not self.tail > 1:
            raise ContractViolation("symmetric_pareto needs tail exponent > 1")
        if not self.scale_ > 0:
            raise ContractViolation("scale must be positive")
        self._check_epsilon()

    @property
    def scale(self):
        return self.scale_

    @property
    def moment_limit(self):
        return self.tail

    def pdf(self, t):
        z = np.abs(np.asarray(t, dtype=float)) / self.scale_
        return 0.5 * self.tail * (1.0 + z) ** (-1.0 - self.tail) / self.scale_

    def cdf(self, t):
        z = np.asarray(t, dtype=float) / self.scale_
        half = 0.5 * (1.0 + np.abs(z)) ** (-self.tail)
        return np.where(z >= 0, 1.0 - half, half)

    def sf(self, t):
        return self.cdf(-np.asarray(t, dtype=float))

    def upper_first_moment(self, a):
        # even in a for a symmetric density
        z = np.abs(np.asarray(a, dtype=float)) / self.scale_
        p = self.tail
        return self.scale_ * 0.5 * (1.0 + z) ** (-p) * (p * z + 1.0) / (p - 1.0)

    def sample(self, rng, size=None):
        u = rng.random(size)
        mag = u ** (-1.0 / self.tail) - 1.0
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return self.scale_ * sign * mag

    def _abs_moment(self, r):
        return self.scale_ ** r * self.tail * float(special.beta(r + 1.0, self.tail - r))

    def params(self):
        return {"tail": float(self.tail), "scale": float(self.scale_)}


@dataclass(frozen=True)
class AsymTwoExpNoise(NoiseModel):
    """Skewed zero-mean density with exponential tails of different rates.

    ``p(t) = exp(-(t + 1/4)) / 2`` for ``t >= -1/4`` and ``exp(2 (t + 1/4))``
    below; mean 0, variance 19/16.  At ``t = -1/4`` the right branch is used.
    """

    family: ClassVar[str] = "asym_two_exp"
    kinks: ClassVar[tuple] = (-0.25,)
    epsilon: float = 1.0

    def __post_init__(self):
        self._check_epsilon()

    @property
    def scale(self):
        return 1.0

    def pdf(self, t):
        u = np.asarray(t, dtype=float) + 0.25
        return np.where(u >= 0, 0.5 * np.exp(-np.maximum(u, 0.0)), np.exp(2.0 * np.minimum(u, 0.0)))

    def cdf(self, t):
        u = np.asarray(t, dtype=float) + 0.25
        return np.where(u >= 0, 1.0 - 0.5 * np.exp(-np.maximum(u, 0.0)),
                        0.5 * np.exp(2.0 * np.minimum(u, 0.0)))

    def sf(self, t):
        u = np.asarray(t, dtype=float) + 0.25
        return np.where(u >= 0, 0.5 * np.exp(-np.maximum(u, 0.0)),
                        1.0 - 0.5 * np.exp(2.0 * np.minimum(u, 0.0)))

    def upper_first_moment(self, a):
        u = np.asarray(a, dtype=float) + 0.25
        up = np.maximum(u, 0.0)
        dn = np.minimum(u, 0.0)
        return np.where(u >= 0, 0.5 * np.exp(-up) * (up + 0.75),
                        np.exp(2.0 * dn) * (0.375 - 0.5 * dn))

    def sample(self, rng, size=None):
        right = rng.random(size) < 0.5
        e = rng.standard_exponential(size)
        return np.where(right, -0.25 + e, -0.25 - 0.5 * e)

    def _abs_moment(self, p):
        return expect(self, lambda t: abs(t) ** p, points=(0.0,), rtol=1e-12)


def noise_from_dict(data):
    data = dict(data)
    family = data.pop("family", None)
    fields = {
        "gaussian": (GaussianNoise, {"sd": "sd", "epsilon": "epsilon"}),
        "student_t": (StudentTNoise, {"dof": "dof", "scale": "scale_", "epsilon": "epsilon"}),
        "symmetric_pareto": (SymmetricParetoNoise, {"tail": "tail", "scale": "scale_", "epsilon": "epsilon"}),
        "asym_two_exp": (AsymTwoExpNoise, {"epsilon": "epsilon"}),
    }
    if family not in fields:
        raise ContractViolation(f"unknown noise family {family!r}")
    cls, mapping = fields[family]
    unknown = set(data) - set(mapping)
    if unknown:
        raise ContractViolation(f"unknown noise key(s): {sorted(unknown)}")
    return cls(**{mapping[k]: v for k, v in data.items()})
