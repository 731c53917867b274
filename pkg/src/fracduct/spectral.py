"""Exact eigen-expansion solver for the tensor-grid Laplacian.

Serves as the ground-truth oracle for the iterative solvers: fractional
powers A^s act diagonally on sine coefficients, and the two-term problem
A y + mu*A^alpha y = rhs has a closed-form solution.  Valid only for this
operator on uniform rectangular grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ValidationError
from .grid import Grid2D, ScalarField
from .laplacian import eigenvalues_1d

__all__ = [
    "SpectralCoefficients",
    "analyze",
    "synthesize",
    "frac_apply",
    "two_term_solve_exact",
    "lambda_grid",
    "set_transform_backend",
    "get_transform_backend",
]

# sine transforms are exact direct summation by default; "fast" switches to
# scipy's DST-I behind the same interface
_TRANSFORM_BACKEND = "direct"


def set_transform_backend(name: str) -> None:
    global _TRANSFORM_BACKEND
    if name not in ("direct", "fast"):
        raise ValidationError(f"unknown transform backend {name!r}")
    _TRANSFORM_BACKEND = name


def get_transform_backend() -> str:
    return _TRANSFORM_BACKEND


@lru_cache(maxsize=32)
def _sine_matrix(n: int) -> np.ndarray:
    """S[a, b] = sin(pi*(a+1)*(b+1)/n), symmetric, S @ S = (n/2) I."""
    i = np.arange(1, n)
    return np.sin(np.pi * np.outer(i, i) / n)


@lru_cache(maxsize=32)
def _lambda_grid_cached(n1: int, n2: int, d: float) -> np.ndarray:
    l1 = eigenvalues_1d(n1, d / n1)
    l2 = eigenvalues_1d(n2, 1.0 / n2)
    lam = l1[:, None] + l2[None, :]
    lam.setflags(write=False)
    return lam


def lambda_grid(grid: Grid2D) -> np.ndarray:
    """Eigenvalues lambda[m1-1, m2-1] of A on the (n1-1)x(n2-1) mode grid."""
    return _lambda_grid_cached(grid.n1, grid.n2, grid.d)


def _sine_sandwich(values: np.ndarray, n1: int, n2: int) -> np.ndarray:
    """S1 @ values @ S2 with the symmetric sine matrices."""
    if _TRANSFORM_BACKEND == "fast":
        from scipy.fft import dst

        # DST-I returns 2*S @ x along the chosen axis
        return 0.25 * dst(dst(values, type=1, axis=0), type=1, axis=1)
    return _sine_matrix(n1) @ values @ _sine_matrix(n2)


@dataclass(frozen=True)
class SpectralCoefficients:
    """Sine-basis coefficients c[m1-1, m2-1] = (y, phi_{m1,m2}) of a field."""

    grid: Grid2D
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.coeffs, dtype=np.float64)
        if arr.shape != self.grid.shape:
            raise ValidationError(
                f"coefficient shape {arr.shape} does not match grid shape {self.grid.shape}"
            )
        object.__setattr__(self, "coeffs", arr)


def analyze(y: ScalarField) -> SpectralCoefficients:
    """Expand a field in the orthonormal eigenfunction basis."""
    g = y.grid
    scale = 2.0 / math.sqrt(g.d) * g.h1 * g.h2
    return SpectralCoefficients(g, scale * _sine_sandwich(y.values, g.n1, g.n2))


def synthesize(c: SpectralCoefficients) -> ScalarField:
    """Sum the eigenfunction expansion back to nodal values."""
    g = c.grid
    scale = 2.0 / math.sqrt(g.d)
    return ScalarField(g, scale * _sine_sandwich(c.coeffs, g.n1, g.n2))


def frac_apply(y: ScalarField, s: float) -> ScalarField:
    """Apply A^s spectrally; negative s gives the inverse power."""
    c = analyze(y)
    if s == 0.0:
        return synthesize(c)
    lam = lambda_grid(y.grid)
    # lambda >= delta > 0, so exp(s*log(lambda)) is always defined
    weights = np.exp(s * np.log(lam))
    return synthesize(SpectralCoefficients(y.grid, c.coeffs * weights))


def two_term_solve_exact(mu: float, alpha: float, rhs: ScalarField) -> ScalarField:
    """Closed-form solution of A y + mu*A^alpha y = rhs via eigen-expansion."""
    if mu < 0.0:
        raise ValidationError(f"mu must be nonnegative, got {mu}")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    lam = lambda_grid(rhs.grid)
    denom = lam + mu * np.exp(alpha * np.log(lam))
    c = analyze(rhs)
    return synthesize(SpectralCoefficients(rhs.grid, c.coeffs / denom))
