"""Kernel backend selection: compiled extension if present, numpy otherwise.

Set the environment variable ``VOLERR_PURE_PYTHON=1`` before import to
force the numpy reference implementation even when the extension built.
Both backends implement the same contracts (see ``_kernels_np``); within
one backend, results are independent of scheduling and thread counts.
"""

from __future__ import annotations

import os

from . import _kernels_np

if os.environ.get("VOLERR_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_np
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_np

BACKEND: str = _impl.IMPL

call_hedge_sums = _impl.call_hedge_sums
softplus_call_hedge_sums = _impl.softplus_call_hedge_sums
draw_stats = _impl.draw_stats


def using_compiled() -> bool:
    return BACKEND == "compiled"
