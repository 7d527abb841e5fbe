"""Hot quadrature kernels with a compiled core and a numpy fallback.

The compiled extension is used when it was built; setting the environment
variable ``DIPOLATT_PURE_PYTHON=1`` forces the fallback.  ``BACKEND`` names
the implementation in use.
"""
import os

from . import _pykernels

if os.environ.get("DIPOLATT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

axisym_moments = _impl.axisym_moments

__all__ = ["axisym_moments", "BACKEND"]
