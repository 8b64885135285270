import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import lambertw

from wkelly import _kernels_py, kernels

BACKENDS = [_kernels_py]
try:
    from wkelly import _kernels as _kernels_c
    BACKENDS.append(_kernels_c)
except ImportError:
    _kernels_c = None

needs_ext = pytest.mark.skipif(_kernels_c is None, reason="compiled extension not built")


@pytest.mark.parametrize("mod", BACKENDS)
@pytest.mark.parametrize("L", [-30.0, -2.0, 0.0, 1.0, 5.0, 50.0, 600.0])
def test_lambertw_matches_scipy(mod, L):
    ref = float(lambertw(np.exp(L)).real) if L < 700 else None
    assert mod.lambertw_log(L) == pytest.approx(ref, rel=1e-14)


def _objective(v, a, beta):
    pos = v > 0
    return float(np.sum(v[pos] * (a[pos] - np.log(v[pos]))) - 0.5 * beta * v @ v)


@pytest.mark.parametrize("mod", BACKENDS)
def test_kernel_kkt(mod):
    rng = np.random.default_rng(0)
    A = rng.normal(0, 1, (30, 6))
    for beta in [0.0, 0.01, 1.0, 100.0]:
        V, S = mod.solve_quad_entropy(A, beta)
        np.testing.assert_allclose(V.sum(axis=1), 1.0, atol=1e-14)
        resid = np.log(V) + beta * V - A - S[:, None]
        assert np.abs(resid).max() < 1e-11


@pytest.mark.parametrize("mod", BACKENDS)
def test_kernel_beats_random_simplex_points(mod):
    rng = np.random.default_rng(1)
    a = rng.normal(0, 0.5, 4)
    beta = 3.0
    v, _ = mod.solve_quad_entropy(a[None, :], beta)
    best = _objective(v[0], a, beta)
    for u in rng.dirichlet(np.ones(4), 500):
        assert _objective(u, a, beta) <= best + 1e-12


@pytest.mark.parametrize("mod", BACKENDS)
def test_kernel_handles_excluded_coordinates(mod):
    A = np.array([[0.1, -np.inf, 0.3]])
    V, _ = mod.solve_quad_entropy(A, 2.0)
    assert V[0, 1] == 0.0
    assert V.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        mod.solve_quad_entropy(np.array([[-np.inf, -np.inf]]), 1.0)


@needs_ext
@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_backends_agree(N, n, beta, seed):
    A = np.random.default_rng(seed).normal(0, 0.3, (N, n))
    Vc, Sc = _kernels_c.solve_quad_entropy(A, beta)
    Vp, Sp = _kernels_py.solve_quad_entropy(A, beta)
    np.testing.assert_allclose(Vc, Vp, atol=1e-13)
    np.testing.assert_allclose(Sc, Sp, atol=1e-11)


def test_backend_selection_reports_name():
    assert kernels.BACKEND in ("cython", "python")
