"""Duct-flow model layer: nondimensionalization, model solves, postprocessing.

The dimensionless longitudinal velocity solves -Lap(u) + mu*(-Lap)^alpha u = 1
on (0,d)x(0,1) with no-slip walls (two-term variant), or the purely fractional
one-term reduction mu*(-Lap)^alpha u = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TextIO

import numpy as np

from .errors import ValidationError
from .fracpower import FracPowerConfig, frac_power_solve
from .grid import CSV_FLOAT_FMT, Grid2D, ScalarField
from .laplacian import LaplacianOperator
from .multiterm import MultiTermProblem, pcg_solve
from . import spectral

__all__ = [
    "DuctModelParams",
    "PhysicalParams",
    "nondimensionalize",
    "solve_duct",
    "midline_profile",
    "field_max",
    "normalize_field",
    "profile_to_csv",
]

VARIANTS = ("two-term", "one-term")


@dataclass(frozen=True)
class DuctModelParams:
    """Governing dimensionless parameters: diffusivity ratio, power, aspect."""

    mu: float
    alpha: float
    d: float
    variant: str = "two-term"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.mu < 0.0:
            raise ValidationError(f"mu must be nonnegative, got {self.mu}")
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "one-term" and self.mu <= 0.0:
            raise ValidationError("one-term variant requires mu > 0")
        if self.d <= 0.0:
            raise ValidationError(f"aspect ratio d must be positive, got {self.d}")


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional inputs of the channel problem."""

    nu: float  # kinematic viscosity
    xi: float  # eddy diffusivity coefficient
    d2: float  # channel height
    chi: float  # driving force -(1/rho) dp/dx3
    rho: float = 1.0

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ValidationError(f"viscosity nu must be positive, got {self.nu}")
        if self.d2 <= 0.0:
            raise ValidationError(f"channel height d2 must be positive, got {self.d2}")


def nondimensionalize(phys: PhysicalParams, alpha: float) -> tuple[float, float]:
    """Return (mu, u0): mu = (xi/nu)*d2^(2(1-alpha)), u0 = (d2^2/nu)*chi."""
    mu = (phys.xi / phys.nu) * phys.d2 ** (2.0 * (1.0 - alpha))
    u0 = (phys.d2**2 / phys.nu) * phys.chi
    return mu, u0


def _default_frac_cfg(grid: Grid2D, gamma: float) -> FracPowerConfig:
    delta = LaplacianOperator(grid).min_eigenvalue()
    return FracPowerConfig(gamma=gamma, theta_delta=0.9 * delta, n0=100, inner_tol=1e-12)


def solve_duct(
    params: DuctModelParams,
    grid: Grid2D,
    method: str = "pcg",
    frac_cfg: FracPowerConfig | None = None,
    cg_tol: float = 1e-9,
    cg_max_iter: int = 500,
    inner_backend: str = "cg",
    precond_backend: str = "spectral",
) -> ScalarField:
    """Solve the duct model with unit right-hand side.

    method "pcg" is the production path (preconditioned CG for the two-term
    model, pseudo-parabolic stepping for the one-term model); "spectral" uses
    the exact eigen-expansion.  The gamma of frac_cfg is overridden to match
    the variant (1-alpha for two-term, alpha for one-term).
    """
    if abs(grid.d - params.d) > 1e-12 * max(1.0, abs(params.d)):
        raise ValidationError(f"grid width {grid.d} does not match model d={params.d}")
    if method not in ("pcg", "spectral"):
        raise ValidationError(f"method must be 'pcg' or 'spectral', got {method!r}")

    ones = ScalarField.constant(grid, 1.0)
    if params.variant == "two-term":
        if method == "spectral":
            return spectral.two_term_solve_exact(params.mu, params.alpha, ones)
        gamma = 1.0 - params.alpha
        cfg = _default_frac_cfg(grid, gamma) if frac_cfg is None else replace(frac_cfg, gamma=gamma)
        prob = MultiTermProblem(params.mu, params.alpha, grid, cfg, ones)
        y, report = pcg_solve(
            prob,
            tol=cg_tol,
            max_iter=cg_max_iter,
            precond_backend=precond_backend,
            inner_backend=inner_backend,
        )
        return y

    # one-term: u = (1/mu) * A^(-alpha) 1
    if method == "spectral":
        return (1.0 / params.mu) * spectral.frac_apply(ones, -params.alpha)
    cfg = (
        _default_frac_cfg(grid, params.alpha)
        if frac_cfg is None
        else replace(frac_cfg, gamma=params.alpha)
    )
    w = frac_power_solve(ones, params.alpha, cfg, inner_backend=inner_backend)
    return (1.0 / params.mu) * w


def midline_profile(field: ScalarField, x2: float) -> list[tuple[float, float]]:
    """Values along the grid row at height x2, boundary zeros included.

    x2 must coincide with a horizontal grid line (including the walls).
    """
    g = field.grid
    j_real = x2 / g.h2
    j = round(j_real)
    if abs(j_real - j) > 1e-9 or not 0 <= j <= g.n2:
        raise ValidationError(f"x2={x2} does not lie on a grid line (h2={g.h2})")
    out = [(0.0, 0.0)]
    for i1 in range(1, g.n1):
        val = 0.0 if j == 0 or j == g.n2 else float(field.values[i1 - 1, j - 1])
        out.append((i1 * g.h1, val))
    out.append((g.d, 0.0))
    return out


def field_max(field: ScalarField) -> tuple[float, float, float]:
    """Maximum interior value and its node position (ties: smallest i1, i2)."""
    g = field.grid
    flat = int(np.argmax(field.values))  # row-major, first occurrence
    i1, i2 = divmod(flat, g.n2 - 1)
    return float(field.values[i1, i2]), (i1 + 1) * g.h1, (i2 + 1) * g.h2


def normalize_field(field: ScalarField, mode: str = "max") -> ScalarField:
    """Scale the field so its maximum is 1 (mode "max") or leave it (mode "none")."""
    if mode == "none":
        return field
    if mode != "max":
        raise ValidationError(f"normalization mode must be 'max' or 'none', got {mode!r}")
    peak, _, _ = field_max(field)
    if peak <= 0.0:
        raise ValidationError(f"cannot max-normalize a field with maximum {peak}")
    return ScalarField(field.grid, field.values / peak)


def profile_to_csv(profile: list[tuple[float, float]], stream: TextIO) -> None:
    """Write `x1,value` rows."""
    stream.write("x1,value\n")
    for x1, val in profile:
        stream.write(f"{CSV_FLOAT_FMT % x1},{CSV_FLOAT_FMT % val}\n")
