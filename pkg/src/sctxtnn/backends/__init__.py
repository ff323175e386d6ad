"""Kernel backend selection.

The hot training loops have two interchangeable implementations: a numba
@njit version and a pure-numpy fallback. The SCTXTNN_BACKEND environment
variable picks one at import time:

* unset or "auto": numba if importable, else numpy
* "numba": require numba (ImportError if missing)
* "numpy": force the fallback

``python -m sctxtnn.benchmark`` times the two against each other.
"""

from __future__ import annotations

import os

from . import numpy_backend

_requested = os.environ.get("SCTXTNN_BACKEND", "auto").strip().lower() or "auto"
if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"SCTXTNN_BACKEND must be 'auto', 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    active = numpy_backend
else:
    try:
        from . import numba_backend
        active = numba_backend
    except ImportError:
        if _requested == "numba":
            raise
        active = numpy_backend

BACKEND_NAME = active.NAME

sctxtnn_forward = active.sctxtnn_forward
sctxtnn_grad = active.sctxtnn_grad
sctxtnn_train = active.sctxtnn_train
ff_forward = active.ff_forward
ff_grad = active.ff_grad
ff_train = active.ff_train
