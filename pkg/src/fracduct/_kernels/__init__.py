"""Hot numerical kernels with backend selection at import time.

The compiled Cython extension `_stencil` is preferred; the pure-NumPy module
`_fallback` has identical signatures and is used when the extension is
missing or the FRACDUCT_PURE_PYTHON environment variable is set.
"""

import os

from . import _fallback

if os.environ.get("FRACDUCT_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from . import _stencil as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND = "fallback" if _impl is _fallback else "compiled"

CG_CONVERGED = _fallback.CG_CONVERGED
CG_MAXITER = _fallback.CG_MAXITER
CG_BREAKDOWN = _fallback.CG_BREAKDOWN

apply_laplacian = _impl.apply_laplacian
apply_shifted = _impl.apply_shifted
shifted_cg = _impl.shifted_cg


def available_backends():
    """Map of importable backend name -> module (at least the fallback)."""
    out = {"fallback": _fallback}
    try:
        from . import _stencil

        out["compiled"] = _stencil
    except ImportError:
        pass
    return out
