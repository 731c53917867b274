"""Pure-NumPy implementations of the hot kernels.

Same call signatures and semantics as the compiled module `_stencil`; used
when the extension is unavailable or FRACDUCT_PURE_PYTHON is set.
"""

import math

import numpy as np

CG_CONVERGED = 0
CG_MAXITER = 1
CG_BREAKDOWN = 2


def apply_laplacian(y, out, ih1, ih2):
    """out = A y: 5-point minus-Laplacian, zero Dirichlet neighbors outside."""
    np.multiply(y, 2.0 * (ih1 + ih2), out=out)
    out[1:, :] -= ih1 * y[:-1, :]
    out[:-1, :] -= ih1 * y[1:, :]
    out[:, 1:] -= ih2 * y[:, :-1]
    out[:, :-1] -= ih2 * y[:, 1:]
    return out


def apply_shifted(y, out, c1, c0, ih1, ih2):
    """out = c1*(A y) + c0*y."""
    apply_laplacian(y, out, ih1, ih2)
    out *= c1
    if c0 != 0.0:
        out += c0 * y
    return out


def shifted_cg(x, b, c1, c0, ih1, ih2, rel_tol, max_iter):
    """Conjugate gradients on (c1*A + c0*E) x = b.

    x carries the initial guess on entry and the solution on exit.
    Returns (status, iterations, relative_residual) with status one of
    CG_CONVERGED, CG_MAXITER, CG_BREAKDOWN.
    """
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        x[:] = 0.0
        return CG_CONVERGED, 0, 0.0

    q = np.empty_like(x)
    apply_shifted(x, q, c1, c0, ih1, ih2)
    r = b - q
    rr = float(np.dot(r.ravel(), r.ravel()))
    rel = math.sqrt(rr) / b_norm
    if rel <= rel_tol:
        return CG_CONVERGED, 0, rel

    p = r.copy()
    for k in range(1, max_iter + 1):
        apply_shifted(p, q, c1, c0, ih1, ih2)
        pq = float(np.dot(p.ravel(), q.ravel()))
        if pq <= 0.0:
            return CG_BREAKDOWN, k, rel
        alpha = rr / pq
        x += alpha * p
        r -= alpha * q
        rr_new = float(np.dot(r.ravel(), r.ravel()))
        rel = math.sqrt(rr_new) / b_norm
        if rel <= rel_tol:
            return CG_CONVERGED, k, rel
        p *= rr_new / rr
        p += r
        rr = rr_new
    return CG_MAXITER, max_iter, rel
