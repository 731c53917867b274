"""Calibration of (mu, alpha) against measured mean-velocity profiles.

Measured points are compared with the computed field through bilinear
interpolation; the deviation for one parameter pair is
sigma = (1/L) * sqrt(sum of squared residuals), and the parameter plane is
explored by exhaustive lattice search.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .duct import DuctModelParams, normalize_field, solve_duct
from .errors import ProfileFormatError, SolverError, ValidationError
from .fracpower import FracPowerConfig
from .grid import CSV_FLOAT_FMT, Grid2D, ScalarField

__all__ = [
    "ExperimentalProfile",
    "CalibrationResult",
    "load_profile",
    "interpolate_at",
    "deviation",
    "grid_search",
    "surface_to_csv",
    "comparison_to_csv",
]


@dataclass(frozen=True)
class ExperimentalProfile:
    """Measurement points (x1, x2, u) of the normalized mean velocity."""

    points: np.ndarray = field(repr=False)  # shape (L, 3)
    label: str = ""

    def __post_init__(self):
        arr = np.ascontiguousarray(self.points, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 1:
            raise ValidationError(
                f"profile needs at least one (x1, x2, u) row, got shape {arr.shape}"
            )
        object.__setattr__(self, "points", arr)

    def __len__(self) -> int:
        return self.points.shape[0]


def load_profile(source, d: float, label: str = "") -> ExperimentalProfile:
    """Parse a `x1,x2,u_mean` CSV (comments start with #) into a profile.

    `source` is a text stream or a path.  Coordinates are validated against
    the domain [0,d]x[0,1]; every error message names the offending line.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_profile(fh, d, label=label or str(source))

    rows = []
    header_seen = False
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if not header_seen:
            if parts != ["x1", "x2", "u_mean"]:
                raise ProfileFormatError(
                    f"line {lineno}: expected header 'x1,x2,u_mean', got {line!r}"
                )
            header_seen = True
            continue
        if len(parts) != 3:
            raise ProfileFormatError(f"line {lineno}: expected 3 columns, got {len(parts)}")
        try:
            x1, x2, u = (float(p) for p in parts)
        except ValueError:
            raise ProfileFormatError(f"line {lineno}: non-numeric value in {line!r}") from None
        if not (0.0 <= x1 <= d and 0.0 <= x2 <= 1.0):
            raise ProfileFormatError(
                f"line {lineno}: point ({x1}, {x2}) outside the domain [0,{d}]x[0,1]"
            )
        rows.append((x1, x2, u))
    if not header_seen:
        raise ProfileFormatError("no header line 'x1,x2,u_mean' found")
    if not rows:
        raise ProfileFormatError("no measurement points")
    return ExperimentalProfile(np.array(rows), label=label)


def interpolate_at(f: ScalarField, x1: float, x2: float) -> float:
    """Bilinear interpolation at (x1, x2); boundary nodes contribute zero."""
    g = f.grid
    if not (0.0 <= x1 <= g.d and 0.0 <= x2 <= 1.0):
        raise ValidationError(f"point ({x1}, {x2}) outside the domain [0,{g.d}]x[0,1]")

    def node(i1: int, i2: int) -> float:
        if i1 <= 0 or i1 >= g.n1 or i2 <= 0 or i2 >= g.n2:
            return 0.0
        return float(f.values[i1 - 1, i2 - 1])

    s1 = min(x1 / g.h1, float(g.n1))
    s2 = min(x2 / g.h2, float(g.n2))
    i1 = min(int(math.floor(s1)), g.n1 - 1)
    i2 = min(int(math.floor(s2)), g.n2 - 1)
    t1 = s1 - i1
    t2 = s2 - i2
    return (
        (1 - t1) * (1 - t2) * node(i1, i2)
        + t1 * (1 - t2) * node(i1 + 1, i2)
        + (1 - t1) * t2 * node(i1, i2 + 1)
        + t1 * t2 * node(i1 + 1, i2 + 1)
    )


def deviation(f: ScalarField, profile: ExperimentalProfile) -> float:
    """sigma = (1/L) * sqrt(sum (predicted - measured)^2) over the points.

    Note the 1/L factor sits outside the square root.
    """
    res2 = 0.0
    for x1, x2, u in profile.points:
        res2 += (interpolate_at(f, x1, x2) - u) ** 2
    return math.sqrt(res2) / len(profile)


@dataclass
class CalibrationResult:
    """Full sigma surface over the lattice plus its minimizer."""

    best_mu: float
    best_alpha: float
    best_sigma: float
    surface: list[tuple[float, float, float]] = field(default_factory=list)
    failures: list[tuple[float, float, str]] = field(default_factory=list)


def grid_search(
    mu_values: Iterable[float],
    alpha_values: Iterable[float],
    profile: ExperimentalProfile,
    grid: Grid2D,
    variant: str = "one-term",
    normalization: str = "max",
    method: str = "pcg",
    frac_cfg: FracPowerConfig | None = None,
    cg_tol: float = 1e-9,
    cg_max_iter: int = 500,
    workers: int = 1,
) -> CalibrationResult:
    """Evaluate sigma on the (mu, alpha) lattice and return the minimizer.

    Solver failures do not abort the search: the lattice point is recorded
    with sigma = NaN and listed in `failures`.  Ties are broken toward the
    smaller mu, then the smaller alpha.
    """
    mus = [float(m) for m in mu_values]
    alphas = [float(a) for a in alpha_values]
    if not mus or not alphas:
        raise ValidationError("mu_values and alpha_values must be nonempty")

    lattice = [(mu, alpha) for mu in mus for alpha in alphas]

    def evaluate(point: tuple[float, float]):
        mu, alpha = point
        params = DuctModelParams(mu=mu, alpha=alpha, d=grid.d, variant=variant)
        f = solve_duct(
            params,
            grid,
            method=method,
            frac_cfg=frac_cfg,
            cg_tol=cg_tol,
            cg_max_iter=cg_max_iter,
        )
        return deviation(normalize_field(f, normalization), profile)

    results: list[tuple[float, float, float]] = []
    failures: list[tuple[float, float, str]] = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda pt: _try_eval(evaluate, pt), lattice))
    else:
        outcomes = [_try_eval(evaluate, pt) for pt in lattice]

    for (mu, alpha), (sigma, err) in zip(lattice, outcomes):
        results.append((mu, alpha, sigma))
        if err is not None:
            failures.append((mu, alpha, err))

    usable = [(s, mu, a) for (mu, a, s) in results if not math.isnan(s)]
    if not usable:
        raise SolverError("every lattice point failed; no calibration result")
    best_sigma, best_mu, best_alpha = min(usable)
    return CalibrationResult(best_mu, best_alpha, best_sigma, results, failures)


def _try_eval(evaluate, point):
    try:
        return evaluate(point), None
    except (SolverError, ValidationError) as exc:
        return math.nan, str(exc)


def surface_to_csv(result: CalibrationResult, stream: TextIO) -> None:
    """Write `mu,alpha,sigma` rows in lattice order (NaN marks failed points)."""
    stream.write("mu,alpha,sigma\n")
    for mu, alpha, sigma in result.surface:
        stream.write(
            f"{CSV_FLOAT_FMT % mu},{CSV_FLOAT_FMT % alpha},{CSV_FLOAT_FMT % sigma}\n"
        )


def comparison_to_csv(
    f: ScalarField,
    profile: ExperimentalProfile,
    stream: TextIO,
    x1_line: float | None = None,
    line_tol: float = 1e-9,
) -> int:
    """Write `x1,x2,u_measured,u_predicted` rows; optionally restrict to one
    cross-line x1 = const.  Returns the number of rows written."""
    stream.write("x1,x2,u_measured,u_predicted\n")
    count = 0
    for x1, x2, u in profile.points:
        if x1_line is not None and abs(x1 - x1_line) > line_tol:
            continue
        pred = interpolate_at(f, x1, x2)
        stream.write(
            f"{CSV_FLOAT_FMT % x1},{CSV_FLOAT_FMT % x2},"
            f"{CSV_FLOAT_FMT % u},{CSV_FLOAT_FMT % pred}\n"
        )
        count += 1
    return count
