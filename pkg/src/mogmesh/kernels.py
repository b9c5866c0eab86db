"""Hot-loop kernels, compiled when available.

The Cython extension is used when it was built; otherwise the pure-Python
reference kernels are used.  Setting ``MOGMESH_PURE_PYTHON=1`` forces the
fallback.  ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("MOGMESH_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

geometric_edges = _impl.geometric_edges
all_pairs_routes = _impl.all_pairs_routes
fnv1a64 = _impl.fnv1a64

__all__ = ["BACKEND", "geometric_edges", "all_pairs_routes", "fnv1a64"]
