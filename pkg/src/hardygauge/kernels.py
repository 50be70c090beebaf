"""Kernel backend selection.

The compiled extension is used when importable; set ``HARDY_GAUGE_PURE=1`` to
force the numpy fallback.  ``BACKEND`` names the active implementation.
"""
import os

from . import _kernels_py

if os.environ.get("HARDY_GAUGE_PURE") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

hardy_apply = _impl.hardy_apply
hardy_adjoint = _impl.hardy_adjoint
hardy_ratio_grad = _impl.hardy_ratio_grad
spectral_matvec = _impl.spectral_matvec
