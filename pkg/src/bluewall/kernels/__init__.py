"""Value-network math kernels with a compiled core and a numpy fallback.

The compiled extension is preferred when it imported cleanly; setting
``BLUEWALL_NO_EXT=1`` forces the numpy path.  Both backends share one
contract: float64 in and out, ReLU derivative defined as 0 at 0.
"""

import os

from . import fallback as _np_impl

if os.environ.get("BLUEWALL_NO_EXT") == "1":
    _impl = _np_impl
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _np_impl

BACKEND = _impl.BACKEND
mlp_forward = _impl.mlp_forward
mlp_backward = _impl.mlp_backward

__all__ = ["BACKEND", "mlp_forward", "mlp_backward"]
