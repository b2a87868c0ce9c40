"""Backend selection for the simulation kernels.

The compiled extension is preferred when present; the numpy fallback is
used otherwise. Set ``SPIKELZ_PURE_PYTHON=1`` to force the fallback
(useful for the backend-comparison benchmark and for debugging).
"""

from __future__ import annotations

import os

from . import fallback

compiled = None
if os.environ.get("SPIKELZ_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled  # type: ignore[no-redef]
    except ImportError:
        compiled = None

_active = compiled if compiled is not None else fallback

BACKEND = _active.BACKEND_NAME

lz76_count = _active.lz76_count
lif_forward = _active.lif_forward
lb_forward = _active.lb_forward

__all__ = ["BACKEND", "compiled", "fallback", "lz76_count", "lif_forward", "lb_forward"]
