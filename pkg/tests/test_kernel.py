import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from huber_rkhs.errors import ContractViolation, NumericalPSDError
from huber_rkhs.kernel import (
    KernelSpec,
    RepresenterFunction,
    eval_function,
    eval_kernel,
    evaluate,
    gram,
    kappa,
    quadratic_norm,
    rkhs_norm,
)

GAUSS1 = KernelSpec("gaussian", bandwidth=1.0)


def test_eval_kernel_examples():
    assert eval_kernel(GAUSS1, [0.3], [0.3]) == 1.0
    assert eval_kernel(GAUSS1, [0.0], [1.0]) == pytest.approx(math.exp(-0.5), rel=1e-15)
    poly = KernelSpec("polynomial", degree=2, offset=1.0)
    assert eval_kernel(poly, [1.0], [1.0]) == 4.0
    lap = KernelSpec("laplacian", bandwidth=2.0)
    assert eval_kernel(lap, [0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.exp(-2.5))


def test_eval_kernel_dimension_mismatch():
    with pytest.raises(ContractViolation):
        eval_kernel(GAUSS1, [0.0], [0.0, 1.0])


@pytest.mark.parametrize("bad", [
    dict(family="gaussian", bandwidth=0.0),
    dict(family="laplacian", bandwidth=-1.0),
    dict(family="polynomial", degree=0),
    dict(family="polynomial", degree=2, offset=-0.5),
    dict(family="cosine"),
])
def test_kernel_spec_invariants(bad):
    with pytest.raises(ContractViolation):
        KernelSpec(**bad)


def test_kernel_spec_roundtrip():
    for spec in (GAUSS1, KernelSpec("laplacian", bandwidth=0.3), KernelSpec("polynomial", degree=3, offset=0.5)):
        assert KernelSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ContractViolation):
        KernelSpec.from_dict({"family": "gaussian", "width": 1.0})


def test_gram_examples():
    assert gram(GAUSS1, [[0.2]]).tolist() == [[1.0]]
    G = gram(GAUSS1, [[0.5], [0.5]])
    assert G.tolist() == [[1.0, 1.0], [1.0, 1.0]]
    assert np.linalg.matrix_rank(G) == 1
    G = gram(GAUSS1, [[0.0, 0.0], [1.0, 1.0]])
    assert G[0, 1] == pytest.approx(math.exp(-1.0), rel=1e-15)
    with pytest.raises(ContractViolation):
        gram(GAUSS1, np.empty((0, 1)))


def test_kappa():
    probes = np.linspace(0, 1, 17)[:, None]
    assert kappa(GAUSS1, probes) == 1.0
    assert kappa(KernelSpec("laplacian", bandwidth=0.1), probes) == 1.0
    assert kappa(KernelSpec("polynomial", degree=1, offset=0.0), probes) == pytest.approx(1.0)
    with pytest.raises(ContractViolation):
        kappa(GAUSS1, np.empty((0, 1)))


def test_rkhs_norm_examples():
    assert rkhs_norm(RepresenterFunction([[0.1], [0.7]], [0.0, 0.0], GAUSS1)) == 0.0
    assert rkhs_norm(RepresenterFunction([[0.1]], [2.0], GAUSS1)) == pytest.approx(2.0, rel=1e-15)
    far = RepresenterFunction([[0.0], [40.0]], [3.0, 4.0], GAUSS1)
    assert rkhs_norm(far) == pytest.approx(5.0, rel=1e-12)


def test_quadratic_norm_rejects_indefinite():
    with pytest.raises(NumericalPSDError):
        quadratic_norm(np.array([[1.0, 0.0], [0.0, -1.0]]), np.array([0.0, 1.0]))


def test_eval_function_examples():
    f0 = RepresenterFunction([[0.1], [0.5]], [0.0, 0.0], GAUSS1)
    assert np.all(evaluate(f0, np.linspace(0, 1, 9)[:, None]) == 0.0)
    f1 = RepresenterFunction([[0.4]], [2.5], GAUSS1)
    assert eval_function(f1, [0.4]) == 2.5
    f2 = RepresenterFunction([[0.0], [1.0]], [1.0, 1.0], GAUSS1)
    assert eval_function(f2, [0.0]) == pytest.approx(1.0 + math.exp(-0.5), rel=1e-15)
    with pytest.raises(ContractViolation):
        eval_function(f2, [0.0, 1.0])


def test_representer_validation():
    with pytest.raises(ContractViolation):
        RepresenterFunction([[0.0], [1.0]], [1.0], GAUSS1)
    with pytest.raises(ContractViolation):
        RepresenterFunction([[0.0]], [np.nan], GAUSS1)


kernels = st.sampled_from([
    KernelSpec("gaussian", bandwidth=0.2), KernelSpec("gaussian", bandwidth=1.5),
    KernelSpec("laplacian", bandwidth=0.3), KernelSpec("polynomial", degree=3, offset=1.0),
])


@given(spec=kernels, n=st.integers(1, 30), dim=st.integers(1, 2), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_gram_symmetric_psd(spec, n, dim, seed):
    pts = np.random.default_rng(seed).uniform(0, 1, (n, dim))
    G = gram(spec, pts)
    assert np.max(np.abs(G - G.T)) == 0.0
    assert np.linalg.eigvalsh(G).min() >= -1e-8 * np.trace(G)


@given(spec=kernels, m=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_reproducing_bound(spec, m, seed):
    rng = np.random.default_rng(seed)
    f = RepresenterFunction(rng.uniform(0, 1, (m, 1)), rng.standard_normal(m), spec)
    probe = np.linspace(0, 1, 512)[:, None]
    sup = np.max(np.abs(evaluate(f, probe)))
    assert sup <= kappa(spec, probe) * rkhs_norm(f) * (1 + 1e-9) + 1e-12


# |c| >= 1e-100 keeps c^2 clear of underflow
@given(c=st.floats(-50, 50, allow_nan=False).filter(lambda v: v == 0 or abs(v) >= 1e-100), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_norm_homogeneity(c, seed):
    rng = np.random.default_rng(seed)
    f = RepresenterFunction(rng.uniform(0, 1, (5, 1)), rng.standard_normal(5), GAUSS1)
    assert rkhs_norm(f.scaled(c)) == pytest.approx(abs(c) * rkhs_norm(f), rel=1e-12, abs=1e-300)
