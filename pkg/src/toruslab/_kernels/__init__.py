"""Mode-wise propagation kernels with backend selection at import time.

The compiled Cython extension is preferred when present; otherwise the
vectorized NumPy implementation is used.  Set ``TORUSLAB_KERNELS=numpy`` to
force the fallback or ``TORUSLAB_KERNELS=compiled`` to require the extension
(import fails if it was not built).
"""

import os

_requested = os.environ.get("TORUSLAB_KERNELS", "auto").strip().lower()

if _requested in ("auto", ""):
    try:
        from . import _core as _impl
    except ImportError:
        from . import _numpy as _impl
elif _requested in ("compiled", "c", "cython"):
    from . import _core as _impl
elif _requested in ("numpy", "python"):
    from . import _numpy as _impl
else:
    raise ValueError(f"unknown TORUSLAB_KERNELS backend {_requested!r}")

BACKEND = _impl.BACKEND_NAME

free_phase = _impl.free_phase
free_phase_many = _impl.free_phase_many
segment_transform = _impl.segment_transform
segment_transform_batch = _impl.segment_transform_batch
prefix_transform_eval = _impl.prefix_transform_eval

__all__ = [
    "BACKEND",
    "free_phase",
    "free_phase_many",
    "segment_transform",
    "segment_transform_batch",
    "prefix_transform_eval",
]
