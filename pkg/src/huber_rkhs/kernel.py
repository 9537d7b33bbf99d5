"""Positive-definite kernels, Gram matrices and representer expansions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, NumericalPSDError

KERNEL_FAMILIES = ("gaussian", "laplacian", "polynomial")


def as_points(x, dim=None):
    """Coerce ``x`` to a float array of shape ``(n, d)``.

    A 1-d array is read as ``n`` scalar inputs unless ``dim`` says otherwise.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if dim is not None and dim == arr.size and dim > 1 else arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ContractViolation(f"input points must be at most 2-d, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ContractViolation(f"dimension mismatch: expected {dim}, got {arr.shape[1]}")
    return arr


@dataclass(frozen=True)
class KernelSpec:
    """A kernel from one of the three supported families.

    ``gaussian``: ``exp(-|x - x'|^2 / (2 b^2))``; ``laplacian``:
    ``exp(-|x - x'| / b)``; ``polynomial``: ``(<x, x'> + offset)^degree``.
    """

    family: str = "gaussian"
    bandwidth: float = 0.2
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ContractViolation(f"unknown kernel family {self.family!r}")
        if self.family in ("gaussian", "laplacian") and not self.bandwidth > 0:
            raise ContractViolation("bandwidth must be positive")
        if self.family == "polynomial":
            if int(self.degree) != self.degree or self.degree < 1:
                raise ContractViolation("degree must be a positive integer")
            if not self.offset >= 0:
                raise ContractViolation("offset must be nonnegative")

    @property
    def constant_diagonal(self):
        return self.family in ("gaussian", "laplacian")

    def to_dict(self):
        if self.family == "polynomial":
            return {"family": self.family, "degree": int(self.degree), "offset": float(self.offset)}
        return {"family": self.family, "bandwidth": float(self.bandwidth)}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        family = data.pop("family", "gaussian")
        allowed = {"polynomial": {"degree", "offset"}}.get(family, {"bandwidth"})
        unknown = set(data) - allowed
        if unknown:
            raise ContractViolation(f"unknown kernel key(s): {sorted(unknown)}")
        return cls(family=family, **data)


def cross_gram(spec, X, Y):
    """Matrix ``K[i, j] = K(X[i], Y[j])``."""
    X = as_points(X)
    Y = as_points(Y, dim=X.shape[1])
    if spec.family == "polynomial":
        return (X @ Y.T + spec.offset) ** int(spec.degree)
    sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * X @ Y.T
    np.maximum(sq, 0.0, out=sq)
    if spec.family == "gaussian":
        return np.exp(-sq / (2.0 * spec.bandwidth ** 2))
    return np.exp(-np.sqrt(sq) / spec.bandwidth)


def eval_kernel(spec, x, x2):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.ndim != 1 or x.shape != x2.shape:
        raise ContractViolation(f"dimension mismatch: {x.shape} vs {x2.shape}")
    return float(cross_gram(spec, x[None, :], x2[None, :])[0, 0])


def gram(spec, points):
    """Symmetric Gram matrix of ``points``.

    Only the upper triangle is computed from the kernel; the lower one is a
    mirror, so the result is exactly symmetric.
    """
    P = as_points(points)
    if P.shape[0] == 0:
        raise ContractViolation("gram requires at least one point")
    G = cross_gram(spec, P, P)
    upper = np.triu(G)
    G = upper + np.triu(G, 1).T
    if spec.constant_diagonal:
        np.fill_diagonal(G, 1.0)
    return G


def psd_tolerance(G):
    return 1e-8 * abs(float(np.trace(G)))


def kappa(spec, domain_probe):
    """``sup sqrt(K(x, x))`` over the probe set."""
    P = as_points(domain_probe)
    if P.shape[0] == 0:
        raise ContractViolation("kappa requires a nonempty probe set")
    if spec.constant_diagonal:
        return 1.0
    diag = ((P * P).sum(1) + spec.offset) ** int(spec.degree)
    return float(np.sqrt(diag.max()))


@dataclass(frozen=True, eq=False)
class RepresenterFunction:
    """``f = sum_i coefficients[i] K(support_points[i], .)``."""

    support_points: np.ndarray
    coefficients: np.ndarray
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        pts = as_points(self.support_points)
        coef = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if pts.shape[0] != coef.shape[0]:
            raise ContractViolation(
                f"{pts.shape[0]} support points but {coef.shape[0]} coefficients"
            )
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(coef))):
            raise ContractViolation("support points and coefficients must be finite")
        pts.setflags(write=False)
        coef.setflags(write=False)
        object.__setattr__(self, "support_points", pts)
        object.__setattr__(self, "coefficients", coef)

    @property
    def dim(self):
        return self.support_points.shape[1]

    def __call__(self, x):
        return evaluate(self, x)

    def scaled(self, c):
        return RepresenterFunction(self.support_points, c * self.coefficients, self.kernel)

    def to_dict(self):
        return {
            "kernel": self.kernel.to_dict(),
            "support_points": self.support_points.tolist(),
            "coefficients": self.coefficients.tolist(),
        }


def evaluate(f, x):
    """Vector of ``f(x_k)`` for every row of ``x``."""
    X = as_points(x, dim=f.dim)
    if f.coefficients.size == 0:
        return np.zeros(X.shape[0])
    return cross_gram(f.kernel, X, f.support_points) @ f.coefficients


def eval_function(f, x):
    """Value of ``f`` at a single input vector."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != f.dim:
        raise ContractViolation(f"dimension mismatch: expected {f.dim}, got {x.shape}")
    return float(evaluate(f, x[None, :])[0])


def quadratic_norm(G, alpha):
    """``sqrt(alpha' G alpha)`` with tiny negative round-off clamped to zero."""
    alpha = np.asarray(alpha, dtype=float)
    q = float(alpha @ G @ alpha)
    if q < 0:
        if q < -psd_tolerance(G) * float(alpha @ alpha):
            raise NumericalPSDError(f"quadratic form is negative: {q:g}")
        q = 0.0
    return float(np.sqrt(q))


def rkhs_norm(f):
    if f.coefficients.size == 0:
        return 0.0
    return quadratic_norm(gram(f.kernel, f.support_points), f.coefficients)
