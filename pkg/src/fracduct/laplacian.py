"""Matrix-free discrete Laplacian with zero Dirichlet walls.

A = A1 + A2 is the standard 5-point operator acting on interior values; it is
self-adjoint and positive definite with known eigenpairs on the tensor grid.
Shifted systems (c1*A + c0*E) z = b are solved by CG (default) or exactly by
sine expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConvergenceError, SolverError, ValidationError
from .grid import Grid2D, ScalarField

__all__ = [
    "LaplacianOperator",
    "EigenIndex",
    "apply_laplacian",
    "min_eigenvalue",
    "eigenvalue",
    "eigenfunction",
    "shifted_solve",
]

DENSE_LIMIT = 4096  # dense assembly is a test-oracle path only


@dataclass(frozen=True)
class EigenIndex:
    """Mode index pair, 1-based: m1 in [1, n1-1], m2 in [1, n2-1]."""

    m1: int
    m2: int

    def __post_init__(self):
        if self.m1 < 1 or self.m2 < 1:
            raise ValidationError(f"eigen indices must be >= 1, got ({self.m1}, {self.m2})")


def _as_index(idx) -> EigenIndex:
    if isinstance(idx, EigenIndex):
        return idx
    return EigenIndex(*idx)


def eigenvalues_1d(n: int, h: float) -> np.ndarray:
    """All eigenvalues (4/h^2)*sin^2(pi*m/(2n)), m = 1..n-1, of the 1-D operator."""
    m = np.arange(1, n)
    return (4.0 / h**2) * np.sin(np.pi * m / (2.0 * n)) ** 2


class LaplacianOperator:
    """5-point minus-Laplacian on the interior of a Grid2D."""

    def __init__(self, grid: Grid2D):
        self.grid = grid
        self._ih1 = 1.0 / grid.h1**2
        self._ih2 = 1.0 / grid.h2**2

    def __repr__(self):
        return f"LaplacianOperator(grid={self.grid})"

    # raw ndarray paths used by the solvers ---------------------------------

    def apply_raw(self, values: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty_like(values)
        _kernels.apply_laplacian(values, out, self._ih1, self._ih2)
        return out

    def apply_shifted_raw(
        self, values: np.ndarray, c1: float, c0: float, out: np.ndarray | None = None
    ) -> np.ndarray:
        if out is None:
            out = np.empty_like(values)
        _kernels.apply_shifted(values, out, c1, c0, self._ih1, self._ih2)
        return out

    # field-level operations -------------------------------------------------

    def apply(self, y: ScalarField) -> ScalarField:
        if y.grid != self.grid:
            raise ValidationError(f"grid mismatch: {y.grid} vs {self.grid}")
        return ScalarField(self.grid, self.apply_raw(y.values))

    __call__ = apply

    def min_eigenvalue(self) -> float:
        """delta = delta1 + delta2, the sharp lower spectral bound."""
        g = self.grid
        d1 = (4.0 / g.h1**2) * math.sin(math.pi / (2.0 * g.n1)) ** 2
        d2 = (4.0 / g.h2**2) * math.sin(math.pi / (2.0 * g.n2)) ** 2
        return d1 + d2

    def max_eigenvalue(self) -> float:
        g = self.grid
        d1 = (4.0 / g.h1**2) * math.sin(math.pi * (g.n1 - 1) / (2.0 * g.n1)) ** 2
        d2 = (4.0 / g.h2**2) * math.sin(math.pi * (g.n2 - 1) / (2.0 * g.n2)) ** 2
        return d1 + d2

    def _check_index(self, idx: EigenIndex) -> EigenIndex:
        g = self.grid
        if not (1 <= idx.m1 <= g.n1 - 1 and 1 <= idx.m2 <= g.n2 - 1):
            raise ValidationError(
                f"eigen index ({idx.m1}, {idx.m2}) out of range for grid {g.n1}x{g.n2}"
            )
        return idx

    def eigenvalue(self, idx) -> float:
        idx = self._check_index(_as_index(idx))
        g = self.grid
        return (4.0 / g.h1**2) * math.sin(math.pi * idx.m1 / (2.0 * g.n1)) ** 2 + (
            4.0 / g.h2**2
        ) * math.sin(math.pi * idx.m2 / (2.0 * g.n2)) ** 2

    def eigenfunction(self, idx) -> ScalarField:
        """Eigenfunction sin(pi*m1*i1/n1)*sin(pi*m2*i2/n2), unit discrete norm."""
        idx = self._check_index(_as_index(idx))
        g = self.grid
        s1 = np.sin(np.pi * idx.m1 * np.arange(1, g.n1) / g.n1)
        s2 = np.sin(np.pi * idx.m2 * np.arange(1, g.n2) / g.n2)
        # sum sin^2 = n/2 per direction, so the L2(h1*h2) normalizer is 2/sqrt(d)
        scale = 2.0 / math.sqrt(g.d)
        return ScalarField(g, scale * np.outer(s1, s2))

    def shifted_solve_raw(
        self,
        c1: float,
        c0: float,
        rhs: np.ndarray,
        tol: float = 1e-12,
        x0: np.ndarray | None = None,
        max_iter: int | None = None,
    ) -> np.ndarray:
        """CG solve of (c1*A + c0*E) z = rhs on raw arrays; returns z."""
        delta = self.min_eigenvalue()
        if not (c1 > 0.0 and c1 * delta + c0 > 0.0):
            raise ValidationError(
                f"shifted system not positive definite: c1={c1}, c0={c0}, delta={delta}"
            )
        if max_iter is None:
            max_iter = 10 * self.grid.num_interior
        x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.float64)
        status, _, rel = _kernels.shifted_cg(
            x, rhs, c1, c0, self._ih1, self._ih2, tol, max_iter
        )
        if status == _kernels.CG_BREAKDOWN:
            raise SolverError("CG breakdown: (Mp, p) <= 0 on a shifted Laplacian system")
        if status == _kernels.CG_MAXITER:
            raise ConvergenceError(
                f"shifted CG stalled at relative residual {rel:.3e} "
                f"after {max_iter} iterations (tol {tol:.1e})"
            )
        return x

    def shifted_solve(
        self,
        c1: float,
        c0: float,
        rhs: ScalarField,
        tol: float = 1e-12,
        x0: ScalarField | None = None,
        max_iter: int | None = None,
        backend: str = "cg",
    ) -> ScalarField:
        """Solve (c1*A + c0*E) z = rhs to relative residual <= tol."""
        if rhs.grid != self.grid:
            raise ValidationError(f"grid mismatch: {rhs.grid} vs {self.grid}")
        if backend == "spectral":
            from . import spectral

            delta = self.min_eigenvalue()
            if not (c1 > 0.0 and c1 * delta + c0 > 0.0):
                raise ValidationError(
                    f"shifted system not positive definite: c1={c1}, c0={c0}, delta={delta}"
                )
            lam = spectral.lambda_grid(self.grid)
            coeffs = spectral.analyze(rhs).coeffs / (c1 * lam + c0)
            return spectral.synthesize(spectral.SpectralCoefficients(self.grid, coeffs))
        if backend != "cg":
            raise ValidationError(f"unknown shifted-solve backend {backend!r}")
        x0_arr = None if x0 is None else x0.values
        z = self.shifted_solve_raw(c1, c0, rhs.values, tol=tol, x0=x0_arr, max_iter=max_iter)
        return ScalarField(self.grid, z)

    def assemble_dense(self) -> np.ndarray:
        """Dense matrix of A in row-major interior ordering (test oracle only)."""
        m = self.grid.num_interior
        if m > DENSE_LIMIT:
            raise ValidationError(f"dense assembly limited to {DENSE_LIMIT} unknowns, got {m}")
        mat = np.empty((m, m))
        e = np.zeros(self.grid.shape)
        flat = e.reshape(-1)
        for j in range(m):
            flat[j] = 1.0
            mat[:, j] = self.apply_raw(e).ravel()
            flat[j] = 0.0
        return mat


# functional aliases matching the operation names ---------------------------


def apply_laplacian(op: LaplacianOperator, y: ScalarField) -> ScalarField:
    return op.apply(y)


def min_eigenvalue(op: LaplacianOperator) -> float:
    return op.min_eigenvalue()


def eigenvalue(op: LaplacianOperator, idx) -> float:
    return op.eigenvalue(idx)


def eigenfunction(op: LaplacianOperator, idx) -> ScalarField:
    return op.eigenfunction(idx)


def shifted_solve(
    op: LaplacianOperator, c1: float, c0: float, rhs: ScalarField, tol: float = 1e-12, **kw
) -> ScalarField:
    return op.shifted_solve(c1, c0, rhs, tol=tol, **kw)
