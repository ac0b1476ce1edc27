"""Select the kernel implementation at import time.

The compiled Cython module is used when it was built; otherwise, or when
``HEISURF_PURE_PYTHON=1`` is set, the numpy fallback is used. Both expose
the same functions.
"""

import os

if os.environ.get("HEISURF_PURE_PYTHON", "") not in ("", "0"):
    from heisurf import _pykernels as kernels
else:
    try:
        from heisurf import _ckernels as kernels
    except ImportError:  # extension not built
        from heisurf import _pykernels as kernels

BACKEND = kernels.NAME

__all__ = ["kernels", "BACKEND"]
