"""Backend selection for the hot loops.

The compiled ``_ckernels`` extension is used when it imports; otherwise,
or when ``UWBRT_PURE_PYTHON=1`` is set, the numpy versions in
``_pykernels`` are used.  Both expose the same five functions.
"""

import os

from . import _pykernels as python_backend

try:
    from . import _ckernels as compiled_backend
except ImportError:
    compiled_backend = None

if compiled_backend is None or os.environ.get("UWBRT_PURE_PYTHON") == "1":
    backend = python_backend
    BACKEND_NAME = "numpy"
else:
    backend = compiled_backend
    BACKEND_NAME = "cython"

trace_capture = backend.trace_capture
refine = backend.refine
diffract = backend.diffract
segments_clear = backend.segments_clear
reflection_dyadics = backend.reflection_dyadics

__all__ = [
    "BACKEND_NAME",
    "backend",
    "compiled_backend",
    "python_backend",
    "trace_capture",
    "refine",
    "diffract",
    "segments_clear",
    "reflection_dyadics",
]
