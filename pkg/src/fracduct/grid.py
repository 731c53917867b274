"""Uniform tensor-product grid on [0,d]x[0,1] and grid functions on it.

Grid functions store interior nodal values only; the homogeneous Dirichlet
boundary is implied and never stored.  The discrete inner product carries the
cell-area weight h1*h2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from .errors import ValidationError

__all__ = [
    "Grid2D",
    "ScalarField",
    "make_grid",
    "inner_product",
    "norm_E",
    "norm_D",
    "field_to_csv",
]

CSV_FLOAT_FMT = "%.15g"


@dataclass(frozen=True)
class Grid2D:
    """Uniform grid with n1 x n2 intervals on the rectangle [0,d] x [0,1]."""

    n1: int
    n2: int
    d: float

    def __post_init__(self):
        if int(self.n1) != self.n1 or int(self.n2) != self.n2:
            raise ValidationError("grid interval counts must be integers")
        if self.n1 < 2 or self.n2 < 2:
            raise ValidationError(
                f"need at least 2 intervals per direction, got n1={self.n1}, n2={self.n2}"
            )
        if not (self.d > 0.0 and math.isfinite(self.d)):
            raise ValidationError(f"domain width d must be positive, got d={self.d}")

    @property
    def h1(self) -> float:
        return self.d / self.n1

    @property
    def h2(self) -> float:
        return 1.0 / self.n2

    @property
    def shape(self) -> tuple[int, int]:
        """Interior array shape (n1-1, n2-1), axis 0 = i1, axis 1 = i2."""
        return (self.n1 - 1, self.n2 - 1)

    @property
    def num_interior(self) -> int:
        return (self.n1 - 1) * (self.n2 - 1)

    def interior_x1(self) -> np.ndarray:
        return self.h1 * np.arange(1, self.n1)

    def interior_x2(self) -> np.ndarray:
        return self.h2 * np.arange(1, self.n2)


def make_grid(n1: int, n2: int, d: float) -> Grid2D:
    """Create a validated grid with spacings h1 = d/n1, h2 = 1/n2."""
    return Grid2D(n1, n2, float(d))


@dataclass(frozen=True)
class ScalarField:
    """Grid function given by its interior nodal values, zero on the boundary.

    values[i1-1, i2-1] is the value at (i1*h1, i2*h2).  The array is stored
    C-contiguous float64 and frozen after construction.
    """

    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.shape != self.grid.shape:
            raise ValidationError(
                f"field shape {arr.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("field contains non-finite values")
        if arr is self.values:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid2D, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)


def _check_same_grid(y: ScalarField, w: ScalarField) -> None:
    if y.grid != w.grid:
        raise ValidationError(f"grid mismatch: {y.grid} vs {w.grid}")


def inner_product(y: ScalarField, w: ScalarField) -> float:
    """Discrete L2 scalar product sum(y*w)*h1*h2 over interior nodes."""
    _check_same_grid(y, w)
    g = y.grid
    return g.h1 * g.h2 * float(np.dot(y.values.ravel(), w.values.ravel()))


def norm_E(y: ScalarField) -> float:
    """Discrete L2 norm sqrt((y, y))."""
    g = y.grid
    return math.sqrt(g.h1 * g.h2) * float(np.linalg.norm(y.values.ravel()))


def norm_D(
    y: ScalarField,
    theta_delta: float,
    apply_a: Callable[[ScalarField], ScalarField],
    delta: float | None = None,
) -> float:
    """Energy norm sqrt((A y, y) - theta_delta*(y, y)) of the shifted operator.

    The shift theta_delta must stay strictly below the smallest eigenvalue of A
    or the quadratic form loses positive definiteness; pass `delta` to have
    that checked up front.
    """
    if theta_delta < 0.0:
        raise ValidationError(f"theta_delta must be nonnegative, got {theta_delta}")
    if delta is not None and theta_delta >= delta:
        raise ValidationError(
            f"theta_delta={theta_delta} >= delta={delta}: shifted operator not positive definite"
        )
    ay = apply_a(y)
    quad = inner_product(ay, y) - theta_delta * inner_product(y, y)
    a_energy = abs(inner_product(ay, y))
    if quad < -1e-10 * max(a_energy, 1e-300):
        raise ValidationError(
            f"theta_delta={theta_delta} too large: quadratic form is negative ({quad})"
        )
    return math.sqrt(max(quad, 0.0))


def field_to_csv(y: ScalarField, stream: TextIO) -> None:
    """Write `x1,x2,value` rows for every interior node, i1 outer, i2 inner."""
    g = y.grid
    x1 = g.interior_x1()
    x2 = g.interior_x2()
    stream.write("x1,x2,value\n")
    for i1 in range(g.n1 - 1):
        for i2 in range(g.n2 - 1):
            stream.write(
                f"{CSV_FLOAT_FMT % x1[i1]},{CSV_FLOAT_FMT % x2[i2]},"
                f"{CSV_FLOAT_FMT % y.values[i1, i2]}\n"
            )
