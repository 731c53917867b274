import numpy as np
import pytest

from fracduct import _kernels
from fracduct._kernels import _fallback, available_backends

BACKENDS = available_backends()
HAVE_COMPILED = "compiled" in BACKENDS

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED, reason="extension not built")


@pytest.mark.parametrize("shape", [(1, 1), (1, 5), (7, 1), (9, 13), (31, 31)])
def test_fallback_apply_matches_dense_stencil(shape):
    rng = np.random.default_rng(0)
    y = rng.standard_normal(shape)
    ih1, ih2 = 3.7, 1.9
    out = np.empty_like(y)
    _fallback.apply_laplacian(y, out, ih1, ih2)
    padded = np.zeros((shape[0] + 2, shape[1] + 2))
    padded[1:-1, 1:-1] = y
    ref = (
        2.0 * (ih1 + ih2) * padded[1:-1, 1:-1]
        - ih1 * (padded[:-2, 1:-1] + padded[2:, 1:-1])
        - ih2 * (padded[1:-1, :-2] + padded[1:-1, 2:])
    )
    np.testing.assert_allclose(out, ref, rtol=1e-14, atol=1e-14)


@needs_compiled
@pytest.mark.parametrize("shape", [(1, 1), (1, 5), (7, 1), (9, 13), (31, 31)])
def test_backends_agree_on_apply(shape):
    rng = np.random.default_rng(1)
    y = rng.standard_normal(shape)
    ih1, ih2 = 2.25, 5.5
    out_f = np.empty_like(y)
    out_c = np.empty_like(y)
    _fallback.apply_laplacian(y, out_f, ih1, ih2)
    BACKENDS["compiled"].apply_laplacian(y, out_c, ih1, ih2)
    np.testing.assert_allclose(out_c, out_f, rtol=1e-13, atol=1e-13)
    _fallback.apply_shifted(y, out_f, 0.7, 3.1, ih1, ih2)
    BACKENDS["compiled"].apply_shifted(y, out_c, 0.7, 3.1, ih1, ih2)
    np.testing.assert_allclose(out_c, out_f, rtol=1e-13, atol=1e-13)


@needs_compiled
def test_compiled_accepts_readonly_input():
    y = np.ones((4, 4))
    y.setflags(write=False)
    out = np.empty_like(y)
    BACKENDS["compiled"].apply_laplacian(y, out, 1.0, 1.0)
    assert np.isfinite(out).all()


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_shifted_cg_solves(name):
    mod = BACKENDS[name]
    rng = np.random.default_rng(2)
    shape = (15, 15)
    ih1 = ih2 = 16.0**2
    x_true = rng.standard_normal(shape)
    b = np.empty_like(x_true)
    mod.apply_shifted(x_true, b, 0.8, 2.0, ih1, ih2)
    x = np.zeros_like(b)
    status, iters, rel = mod.shifted_cg(x, b, 0.8, 2.0, ih1, ih2, 1e-12, 10_000)
    assert status == _kernels.CG_CONVERGED
    assert rel <= 1e-12
    assert np.linalg.norm(x - x_true) / np.linalg.norm(x_true) <= 1e-9
    assert iters > 0


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_shifted_cg_warm_start_and_edge_cases(name):
    mod = BACKENDS[name]
    rng = np.random.default_rng(3)
    shape = (9, 9)
    ih1 = ih2 = 100.0
    x_true = rng.standard_normal(shape)
    b = np.empty_like(x_true)
    mod.apply_shifted(x_true, b, 1.0, 0.5, ih1, ih2)

    # exact initial guess converges without iterating
    x = x_true.copy()
    status, iters, _ = mod.shifted_cg(x, b, 1.0, 0.5, ih1, ih2, 1e-10, 100)
    assert status == _kernels.CG_CONVERGED and iters == 0

    # zero right-hand side yields the zero solution
    x = rng.standard_normal(shape)
    status, iters, rel = mod.shifted_cg(x, np.zeros(shape), 1.0, 0.5, ih1, ih2, 1e-10, 100)
    assert status == _kernels.CG_CONVERGED and iters == 0 and rel == 0.0
    assert np.all(x == 0.0)

    # iteration cap reports CG_MAXITER
    x = np.zeros(shape)
    status, iters, rel = mod.shifted_cg(x, b, 1.0, 0.5, ih1, ih2, 1e-14, 2)
    assert status == _kernels.CG_MAXITER and iters == 2 and rel > 1e-14


@needs_compiled
def test_backends_reach_same_solution():
    rng = np.random.default_rng(4)
    shape = (12, 17)
    ih1, ih2 = 144.0, 289.0
    b = rng.standard_normal(shape)
    sols = []
    for mod in (BACKENDS["fallback"], BACKENDS["compiled"]):
        x = np.zeros(shape)
        status, _, _ = mod.shifted_cg(x, b, 0.3, 4.0, ih1, ih2, 1e-13, 10_000)
        assert status == _kernels.CG_CONVERGED
        sols.append(x)
    np.testing.assert_allclose(sols[0], sols[1], rtol=1e-10, atol=1e-12)


def test_selected_backend_exposed():
    assert _kernels.BACKEND in ("compiled", "fallback")
    assert callable(_kernels.apply_laplacian)
    assert callable(_kernels.shifted_cg)
