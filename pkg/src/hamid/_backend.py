"""Kernel lane selection: compiled extension if available, NumPy otherwise.

Set ``HAMID_PURE_PYTHON=1`` to force the pure lane (useful for
benchmark comparisons and debugging).
"""

import os

if os.environ.get("HAMID_PURE_PYTHON"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as kernels

BACKEND = kernels.BACKEND_NAME

__all__ = ["kernels", "BACKEND"]
