"""Import-time selection of the snapshot kernel.

The compiled Cython kernel is preferred; the numpy fallback is picked when
the extension is absent or when FERMISHADOW_BACKEND=python is set.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("FERMISHADOW_BACKEND", "").lower() == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

run_batch = _impl.run_batch


def available_backends() -> dict:
    """Name -> run_batch for every importable backend (for benchmarks)."""
    out = {"python": _kernels_py.run_batch}
    try:
        from . import _kernels
        out["cython"] = _kernels.run_batch
    except ImportError:
        pass
    return out
