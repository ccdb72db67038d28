"""Hot-kernel backend selection.

The compiled extension (Cython) is preferred; the numpy fallback is used
when the extension was not built or when MIR_PURE_PY=1 is set. Both expose
the same three functions with identical semantics; the integer kernels are
bit-exact across backends.
"""

from __future__ import annotations

import os

if os.environ.get("MIR_PURE_PY") == "1":
    from . import _pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        from . import _pure as _impl  # type: ignore[no-redef]

        BACKEND = "pure"

quad_decode_batch = _impl.quad_decode_batch
encoder_edge_states = _impl.encoder_edge_states
raycast_scan = _impl.raycast_scan

__all__ = ["BACKEND", "quad_decode_batch", "encoder_edge_states", "raycast_scan"]
