"""Preconditioned conjugate gradients for A y + mu*A^alpha y = rhs.

The plain Laplacian A is the preconditioner; the fractional term is applied
through the pseudo-parabolic solver with a fixed configuration, so the whole
operator is a fixed SPD linear map and standard CG theory applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .errors import ConvergenceError, SolverError, ValidationError
from .fracpower import FracPowerConfig, _inv_frac_power_raw
from .grid import CSV_FLOAT_FMT, Grid2D, ScalarField
from .laplacian import LaplacianOperator

__all__ = [
    "MultiTermProblem",
    "CgReport",
    "make_problem",
    "apply_multiterm",
    "kappa_bound",
    "pcg_solve",
    "history_to_csv",
]

GAMMA_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class MultiTermProblem:
    """Discrete problem (A + mu*A^alpha) y = rhs on a tensor grid."""

    mu: float
    alpha: float
    grid: Grid2D
    frac_cfg: FracPowerConfig
    rhs: ScalarField

    def __post_init__(self):
        if self.mu < 0.0:
            raise ValidationError(f"mu must be nonnegative, got {self.mu}")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if abs(self.frac_cfg.gamma - (1.0 - self.alpha)) > GAMMA_MATCH_TOL:
            raise ValidationError(
                f"frac_cfg.gamma={self.frac_cfg.gamma} must equal 1-alpha={1.0 - self.alpha}"
            )
        if self.rhs.grid != self.grid:
            raise ValidationError("rhs grid does not match problem grid")


def make_problem(
    mu: float,
    alpha: float,
    grid: Grid2D,
    rhs: ScalarField,
    theta_delta: float | None = None,
    n0: int = 100,
    inner_tol: float = 1e-12,
) -> MultiTermProblem:
    """Build a problem with a matching fractional config (gamma = 1 - alpha).

    theta_delta defaults to 0.9*delta of the grid.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if theta_delta is None:
        theta_delta = 0.9 * LaplacianOperator(grid).min_eigenvalue()
    cfg = FracPowerConfig(
        gamma=1.0 - alpha, theta_delta=theta_delta, n0=n0, inner_tol=inner_tol
    )
    return MultiTermProblem(mu, alpha, grid, cfg, rhs)


@dataclass
class CgReport:
    """Outcome of a PCG run: epsilon_k = |r_k|/|r_0| per iteration."""

    iterations: int
    residual_history: list[float] = field(default_factory=list)
    kappa_bound: float = 0.0
    converged: bool = False
    iterates: list[np.ndarray] | None = None  # filled only on request


def kappa_bound(mu: float, alpha: float, delta: float) -> float:
    """Condition bound 1 + mu*delta^(alpha-1) of the preconditioned operator."""
    if delta <= 0.0:
        raise ValidationError(f"delta must be positive, got {delta}")
    if mu < 0.0:
        raise ValidationError(f"mu must be nonnegative, got {mu}")
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    return 1.0 + mu * delta ** (alpha - 1.0)


def _apply_multiterm_raw(
    p: np.ndarray,
    op: LaplacianOperator,
    prob: MultiTermProblem,
    inner_backend: str,
    out: np.ndarray | None = None,
) -> np.ndarray:
    if prob.mu == 0.0:
        return op.apply_raw(p, out=out)
    w = _inv_frac_power_raw(p, op, prob.frac_cfg, inner_backend=inner_backend)
    return op.apply_raw(p + prob.mu * w, out=out)


def apply_multiterm(
    p: ScalarField, prob: MultiTermProblem, inner_backend: str = "cg"
) -> ScalarField:
    """Apply A(p + mu*A^(alpha-1) p); for mu = 0 this is exactly A p."""
    if p.grid != prob.grid:
        raise ValidationError("field grid does not match problem grid")
    op = LaplacianOperator(prob.grid)
    return ScalarField(prob.grid, _apply_multiterm_raw(p.values, op, prob, inner_backend))


def pcg_solve(
    prob: MultiTermProblem,
    tol: float = 1e-9,
    max_iter: int = 500,
    precond_backend: str = "spectral",
    inner_backend: str = "cg",
    collect_iterates: bool = False,
) -> tuple[ScalarField, CgReport]:
    """Conjugate gradients with A as preconditioner, starting from y_0 = 0.

    Stops when the unpreconditioned relative residual drops to tol.  On
    non-convergence the iterate with the smallest residual is returned and
    the report is marked unconverged; a non-positive (A~p, p) is a hard
    error since it signals loss of positive definiteness.
    """
    if tol <= 0.0:
        raise ValidationError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")

    op = LaplacianOperator(prob.grid)
    delta = op.min_eigenvalue()
    kappa = kappa_bound(prob.mu, prob.alpha, delta)

    def precond(res: np.ndarray) -> np.ndarray:
        return op.shifted_solve(
            1.0, 0.0, ScalarField(prob.grid, res), tol=1e-12, backend=precond_backend
        ).values.copy()

    rhs = prob.rhs.values
    y = np.zeros_like(rhs)
    r = rhs.copy()
    r0_norm = float(np.linalg.norm(r))
    report = CgReport(iterations=0, residual_history=[1.0], kappa_bound=kappa)
    if collect_iterates:
        report.iterates = [y.copy()]
    if r0_norm == 0.0:
        report.converged = True
        return ScalarField(prob.grid, y), report

    z = precond(r)
    p = z
    zr = float(np.dot(z.ravel(), r.ravel()))
    best_y, best_eps = y.copy(), 1.0

    for k in range(1, max_iter + 1):
        q = _apply_multiterm_raw(p, op, prob, inner_backend)
        pq = float(np.dot(q.ravel(), p.ravel()))
        if pq <= 0.0:
            raise SolverError(
                f"PCG breakdown at iteration {k}: (A~p, p) = {pq} <= 0 "
                "(operator lost positive definiteness)"
            )
        step = zr / pq
        y = y + step * p
        r = r - step * q
        eps = float(np.linalg.norm(r)) / r0_norm
        report.residual_history.append(eps)
        report.iterations = k
        if collect_iterates:
            report.iterates.append(y.copy())
        if eps < best_eps:
            best_eps, best_y = eps, y.copy()
        if eps <= tol:
            report.converged = True
            return ScalarField(prob.grid, y), report
        z = precond(r)
        zr_next = float(np.dot(z.ravel(), r.ravel()))
        conj = zr_next / zr
        p = z + conj * p
        zr = zr_next

    report.converged = False
    return ScalarField(prob.grid, best_y), report


def history_to_csv(report: CgReport, stream: TextIO) -> None:
    """Write `k,epsilon` rows from k = 0."""
    stream.write("k,epsilon\n")
    for k, eps in enumerate(report.residual_history):
        stream.write(f"{k},{CSV_FLOAT_FMT % eps}\n")
