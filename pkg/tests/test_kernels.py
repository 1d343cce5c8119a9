import numpy as np
import pytest

from s2mamba import kernels


def random_case(rng, L=9, D=5, N=3, dtype=np.float64):
    x = rng.normal(size=(L, D)).astype(dtype)
    dt = rng.uniform(0.05, 0.8, size=(L, D)).astype(dtype)
    B = rng.normal(size=(L, N)).astype(dtype)
    C = rng.normal(size=(L, N)).astype(dtype)
    A = -rng.uniform(0.2, 2.0, size=(D, N)).astype(dtype)
    skip = rng.normal(size=D).astype(dtype)
    return x, dt, B, C, A, skip


needs_cython = pytest.mark.skipif(
    kernels.BACKEND != "cython",
    reason="compiled backend not available")


@needs_cython
@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_forward_parity(dtype):
    fwd_py, _ = kernels.get_backend("python")
    fwd_cy, _ = kernels.get_backend("cython")
    rng = np.random.default_rng(0)
    for _ in range(5):
        case = random_case(rng, dtype=dtype)
        y_py, hs_py = fwd_py(*case)
        y_cy, hs_cy = fwd_cy(*case)
        tol = 1e-5 if dtype == np.float32 else 1e-13
        np.testing.assert_allclose(y_cy, y_py, rtol=tol, atol=tol)
        np.testing.assert_allclose(hs_cy, hs_py, rtol=tol, atol=tol)
        assert y_cy.dtype == dtype


@needs_cython
@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_backward_parity(dtype):
    fwd_py, bwd_py = kernels.get_backend("python")
    _, bwd_cy = kernels.get_backend("cython")
    rng = np.random.default_rng(1)
    for _ in range(5):
        case = random_case(rng, dtype=dtype)
        y, hs = fwd_py(*case)
        gy = rng.normal(size=y.shape).astype(dtype)
        grads_py = bwd_py(*case, hs, gy)
        grads_cy = bwd_cy(*case, hs, gy)
        tol = 1e-4 if dtype == np.float32 else 1e-12
        for g_cy, g_py in zip(grads_cy, grads_py):
            np.testing.assert_allclose(g_cy, g_py, rtol=tol, atol=tol)


def test_backend_names():
    assert kernels.BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_python_backend_always_available():
    fwd, _ = kernels.get_backend("python")
    rng = np.random.default_rng(2)
    y, hs = fwd(*random_case(rng))
    assert np.all(np.isfinite(y)) and np.all(np.isfinite(hs))
