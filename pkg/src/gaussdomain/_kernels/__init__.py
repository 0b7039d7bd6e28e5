"""Line-coverage kernels with a compiled fast path.

The Cython extension is optional; set GAUSSDOMAIN_PURE_PYTHON=1 to force the
numpy implementation even when the extension built.
"""

import os

from . import py_backend

_impl = py_backend
_COMPILED = False
if os.environ.get("GAUSSDOMAIN_PURE_PYTHON") != "1":
    try:
        from . import _quadray

        _impl = _quadray
        _COMPILED = True
    except ImportError:
        pass

quad_alpha_batch = _impl.quad_alpha_batch
quad_trace_batch = _impl.quad_trace_batch


def backend_name() -> str:
    return "compiled" if _COMPILED else "python"


def available_backends() -> list:
    names = ["python"]
    if _COMPILED:
        names.insert(0, "compiled")
    return names


__all__ = [
    "quad_alpha_batch",
    "quad_trace_batch",
    "backend_name",
    "available_backends",
    "py_backend",
]
