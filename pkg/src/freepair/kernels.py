"""Selects the compiled kernels when built, else the pure-Python fallback.

Set FREEPAIR_PURE_PYTHON=1 to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("FREEPAIR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        pass

word_identity_scan = _impl.word_identity_scan
expand_layer = _impl.expand_layer
left_multiply_all = _impl.left_multiply_all

__all__ = ["BACKEND", "word_identity_scan", "expand_layer", "left_multiply_all"]
