"""Backend selection for the hot loops.

The compiled ``_kernels`` extension is used when it is importable; set
``THERMALINK_PURE=1`` to force the pure-Python fallback.
"""

import os

from . import _fallback

BACKEND = "python"
if not os.environ.get("THERMALINK_PURE"):
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _fallback
    else:
        BACKEND = "cython"
else:
    _impl = _fallback

integrate_node = _impl.integrate_node
couple = _impl.couple

__all__ = ["BACKEND", "integrate_node", "couple"]
