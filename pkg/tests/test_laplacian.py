import math

import numpy as np
import pytest

from fracduct import (
    ConvergenceError,
    EigenIndex,
    LaplacianOperator,
    ScalarField,
    ValidationError,
    apply_laplacian,
    eigenfunction,
    eigenvalue,
    inner_product,
    make_grid,
    min_eigenvalue,
    norm_E,
    shifted_solve,
)

from oracles import dirichlet_eigenvalues_dense


def test_apply_single_node():
    g = make_grid(2, 2, 1.0)
    op = LaplacianOperator(g)
    y = ScalarField.constant(g, 1.0)
    assert op.apply(y).values[0, 0] == pytest.approx(16.0, rel=1e-14)


def test_apply_zero_field():
    g = make_grid(5, 7, 2.0)
    op = LaplacianOperator(g)
    out = op.apply(ScalarField.zeros(g))
    assert np.all(out.values == 0.0)


def test_apply_grid_mismatch():
    op = LaplacianOperator(make_grid(4, 4, 1.0))
    with pytest.raises(ValidationError):
        op.apply(ScalarField.zeros(make_grid(5, 5, 1.0)))


def test_eigen_equation_on_4x4():
    g = make_grid(4, 4, 1.0)
    op = LaplacianOperator(g)
    phi = op.eigenfunction((1, 1))
    lam = 2.0 * 64.0 * math.sin(math.pi / 8) ** 2
    diff = op.apply(phi) - lam * phi
    assert norm_E(diff) <= 1e-12 * lam


def test_dense_matrix_symmetric_and_matches_eigen_formula():
    # dense assembly is the independent oracle for the closed-form spectrum
    for n1, n2, d in [(4, 4, 1.0), (6, 5, 2.0)]:
        op = LaplacianOperator(make_grid(n1, n2, d))
        mat = op.assemble_dense()
        assert np.max(np.abs(mat - mat.T)) <= 1e-9
        lams = sorted(
            op.eigenvalue((m1, m2)) for m1 in range(1, n1) for m2 in range(1, n2)
        )
        dense = dirichlet_eigenvalues_dense(mat)
        np.testing.assert_allclose(dense, lams, rtol=1e-12)


def test_dense_assembly_guard():
    op = LaplacianOperator(make_grid(80, 80, 1.0))
    with pytest.raises(ValidationError):
        op.assemble_dense()


def test_min_eigenvalue_values():
    assert min_eigenvalue(LaplacianOperator(make_grid(2, 2, 1.0))) == pytest.approx(
        16.0, rel=1e-14
    )
    assert min_eigenvalue(LaplacianOperator(make_grid(4, 4, 1.0))) == pytest.approx(
        18.74516600406096, rel=1e-14
    )
    d100 = min_eigenvalue(LaplacianOperator(make_grid(100, 100, 1.0)))
    assert d100 == pytest.approx(19.737585370737715, rel=1e-14)
    assert d100 < 2.0 * math.pi**2  # just below the continuum limit


def test_min_eigenvalue_equals_first_eigenvalue():
    for n1, n2, d in [(2, 2, 1.0), (6, 9, 2.5), (17, 4, 0.5)]:
        op = LaplacianOperator(make_grid(n1, n2, d))
        assert op.eigenvalue((1, 1)) == op.min_eigenvalue()


def test_eigenfunction_single_node_normalization():
    op = LaplacianOperator(make_grid(2, 2, 1.0))
    phi = op.eigenfunction(EigenIndex(1, 1))
    assert phi.values[0, 0] == pytest.approx(2.0, rel=1e-15)
    assert op.eigenvalue((1, 1)) == pytest.approx(16.0, rel=1e-14)


def test_eigen_pairs_exhaustive_6x6():
    g = make_grid(6, 6, 1.0)
    op = LaplacianOperator(g)
    for m1 in range(1, 6):
        for m2 in range(1, 6):
            phi = op.eigenfunction((m1, m2))
            lam = op.eigenvalue((m1, m2))
            resid = op.apply(phi) - lam * phi
            assert norm_E(resid) <= 1e-12 * lam


def test_eigenfunctions_orthonormal_4x4():
    g = make_grid(4, 4, 1.0)
    op = LaplacianOperator(g)
    idxs = [(m1, m2) for m1 in range(1, 4) for m2 in range(1, 4)]
    for a, ia in enumerate(idxs):
        for b, ib in enumerate(idxs):
            expected = 1.0 if a == b else 0.0
            got = inner_product(op.eigenfunction(ia), op.eigenfunction(ib))
            assert got == pytest.approx(expected, abs=1e-12)


def test_eigen_index_out_of_range():
    op = LaplacianOperator(make_grid(4, 4, 1.0))
    with pytest.raises(ValidationError):
        op.eigenvalue((4, 1))
    with pytest.raises(ValidationError):
        eigenfunction(op, (0, 1))


def test_energy_lower_bound():
    rng = np.random.default_rng(5)
    g = make_grid(9, 7, 1.5)
    op = LaplacianOperator(g)
    delta = op.min_eigenvalue()
    for _ in range(10):
        y = ScalarField(g, rng.standard_normal(g.shape))
        assert inner_product(op.apply(y), y) >= delta * inner_product(y, y) * (1 - 1e-12)


def test_shifted_solve_roundtrip():
    rng = np.random.default_rng(1)
    g = make_grid(8, 8, 1.0)
    op = LaplacianOperator(g)
    y = ScalarField(g, rng.standard_normal(g.shape))
    rhs = op.apply(y)
    z = op.shifted_solve(1.0, 0.0, rhs, tol=1e-12)
    assert norm_E(z - y) / norm_E(y) <= 1e-10


def test_shifted_solve_single_node_closed_form():
    g = make_grid(2, 2, 1.0)
    op = LaplacianOperator(g)
    rhs = ScalarField.constant(g, 3.0)
    z = shifted_solve(op, 2.0, 5.0, rhs, tol=1e-13)
    assert z.values[0, 0] == pytest.approx(3.0 / (16.0 * 2.0 + 5.0), rel=1e-11)


def test_shifted_solve_matches_spectral():
    rng = np.random.default_rng(2)
    g = make_grid(16, 16, 1.0)
    op = LaplacianOperator(g)
    rhs = ScalarField(g, rng.standard_normal(g.shape))
    tol = 1e-10
    z_cg = op.shifted_solve(0.7, 2.5, rhs, tol=tol)
    z_sp = op.shifted_solve(0.7, 2.5, rhs, backend="spectral")
    assert norm_E(z_cg - z_sp) / norm_E(z_sp) <= 10 * tol


def test_shifted_solve_rejects_indefinite():
    g = make_grid(4, 4, 1.0)
    op = LaplacianOperator(g)
    rhs = ScalarField.constant(g, 1.0)
    with pytest.raises(ValidationError):
        op.shifted_solve(-1.0, 0.0, rhs)
    with pytest.raises(ValidationError):
        op.shifted_solve(1.0, -2.0 * op.min_eigenvalue(), rhs)


def test_shifted_solve_iteration_cap():
    g = make_grid(10, 10, 1.0)
    op = LaplacianOperator(g)
    rhs = ScalarField.constant(g, 1.0)
    with pytest.raises(ConvergenceError):
        op.shifted_solve(1.0, 0.0, rhs, tol=1e-14, max_iter=2)


def test_apply_matches_dense_on_basis():
    g = make_grid(5, 4, 1.0)
    op = LaplacianOperator(g)
    mat = op.assemble_dense()
    rng = np.random.default_rng(9)
    y = rng.standard_normal(g.shape)
    ref = (mat @ y.ravel()).reshape(g.shape)
    np.testing.assert_allclose(op.apply_raw(y), ref, rtol=1e-13, atol=1e-13)


def test_functional_aliases():
    g = make_grid(3, 3, 1.0)
    op = LaplacianOperator(g)
    y = ScalarField.constant(g, 1.0)
    np.testing.assert_array_equal(apply_laplacian(op, y).values, op.apply(y).values)
    assert eigenvalue(op, (1, 1)) == op.eigenvalue((1, 1))
    assert min_eigenvalue(op) == op.min_eigenvalue()
