"""Kernel backend selection.

The per-tick hot loops (raycasting, scan integration, distance transform,
particle scoring) exist twice: a compiled Cython extension and a numpy
reference. The extension is preferred when importable; set
FETCHBOT_KERNELS=reference|native to force a backend.
"""

from __future__ import annotations

import os

from . import reference

_requested = os.environ.get("FETCHBOT_KERNELS", "auto")

if _requested == "reference":
    _impl = reference
elif _requested == "native":
    from . import _native as _impl  # hard failure when explicitly requested
elif _requested == "auto":
    try:
        from . import _native as _impl
    except ImportError:
        _impl = reference
else:
    raise RuntimeError(f"FETCHBOT_KERNELS={_requested!r}: expected auto, native or reference")

BACKEND = _impl.BACKEND_NAME

raycast = _impl.raycast
integrate_scan_grid = _impl.integrate_scan_grid
edt_sq = _impl.edt_sq
likelihood_logsum = _impl.likelihood_logsum


def available_backends() -> dict[str, object]:
    """Importable backend modules keyed by name (for tests and benchmarks)."""
    found = {"reference": reference}
    try:
        from . import _native

        found["native"] = _native
    except ImportError:
        pass
    return found
