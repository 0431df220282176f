"""Backend selection for the simulation kernels.

The compiled extension is used when it imports; set ``REACTIVE_PATHS_PURE=1``
to force the numpy fallback.  ``REACTIVE_PATHS_THREADS`` caps the worker
threads used to fan out replicas (the kernels release the GIL).
"""
import os

from . import _kernels_py

try:
    if os.environ.get("REACTIVE_PATHS_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

backend = _compiled if _compiled is not None else _kernels_py
fallback = _kernels_py
compiled = _compiled
BACKEND_NAME = backend.NAME


def get_backend(name=None):
    """``"cython"``, ``"numpy"`` or ``None`` for the active backend."""
    if name is None:
        return backend
    if name == "numpy":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def max_workers():
    try:
        n = int(os.environ.get("REACTIVE_PATHS_THREADS", "0"))
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)
