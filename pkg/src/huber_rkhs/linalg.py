"""Cholesky-based solvers for the diagonally weighted Gram systems.

Every linear system in the package has the form ``(diag(d) G + c I) x = r``
with ``G`` a Gram matrix, ``d >= 0`` and ``c > 0``.  Substituting
``x_A = d_A^{1/2} z`` on the rows with ``d > 0`` turns the active block into the
symmetric positive definite matrix ``d^{1/2} G d^{1/2} + c I``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NumericalError

JITTER_START = 1e-12
JITTER_MAX = 1e-6
JITTER_GROWTH = 10.0

# rows whose weight falls below this fraction of the largest weight are treated as inactive
_INACTIVE_RATIO = 1e-14


def cholesky_solve(A, b, jitter_start=JITTER_START, jitter_max=JITTER_MAX,
                   jitter_growth=JITTER_GROWTH):
    """Solve ``A x = b`` for symmetric positive (semi)definite ``A``.

    On factorization failure a diagonal jitter, scaled by the mean diagonal, is
    added and escalated geometrically from ``jitter_start`` to ``jitter_max``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
        return scipy.linalg.cho_solve(factor, b, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        pass
    scale = float(np.mean(np.diag(A))) if A.size else 1.0
    scale = scale if scale > 0 else 1.0
    jitter = jitter_start
    eye = np.eye(A.shape[0])
    while jitter <= jitter_max * (1 + 1e-9):
        try:
            factor = scipy.linalg.cho_factor(A + jitter * scale * eye, lower=True)
            return scipy.linalg.cho_solve(factor, b, check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            jitter *= jitter_growth
    raise NumericalError(
        f"Cholesky factorization failed after jitter escalation to {jitter_max:g}"
    )


def solve_weighted_gram(G, d, c, rhs, **jitter):
    """Solve ``(diag(d) G + c I) x = rhs`` for ``d >= 0``, ``c > 0``."""
    G = np.asarray(G, dtype=float)
    d = np.asarray(d, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if c <= 0:
        raise ValueError("c must be positive")
    dmax = float(d.max()) if d.size else 0.0
    active = d > _INACTIVE_RATIO * dmax if dmax > 0 else np.zeros(d.shape, bool)
    x = np.empty_like(rhs)
    inactive = ~active
    # inactive rows decouple: c x_i = rhs_i
    x[inactive] = rhs[inactive] / c
    if not active.any():
        return x
    A = np.flatnonzero(active)
    I = np.flatnonzero(inactive)
    dA = d[A]
    r = rhs[A]
    if I.size:
        r = r - dA * (G[np.ix_(A, I)] @ x[I])
    root = np.sqrt(dA)
    M = root[:, None] * G[np.ix_(A, A)] * root[None, :]
    M[np.diag_indices_from(M)] += c
    z = cholesky_solve(M, r / root, **jitter)
    x[A] = root * z
    return x
