"""Backend selection for the accumulation kernels.

The compiled core is used when it imported successfully; setting the
environment variable SCPKB_PURE_PYTHON to a non-empty value other than "0"
forces the NumPy fallback. The active backend is reported as BACKEND.
"""

import os

from . import _fallback

if os.environ.get("SCPKB_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND_NAME

location_stats = _impl.location_stats
sum_log_t = _impl.sum_log_t

__all__ = ["BACKEND", "location_stats", "sum_log_t"]
