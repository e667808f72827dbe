"""Pick the optimizer kernels at import time.

The compiled ``_ckernels`` extension is used when it was built; otherwise,
or when ``RANDEBIAS_PURE_PYTHON`` is set to a non-empty value, the numpy
implementation in ``_pykernels`` is used.
"""
import os

from . import _pykernels

kernels = _pykernels
BACKEND = "python"

if not os.environ.get("RANDEBIAS_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"


def available_backends():
    """Name -> kernel module for every backend importable in this install."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        return out
    out["cython"] = _ckernels
    return out
