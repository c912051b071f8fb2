"""Kernel backend selection.

The compiled extension is used when it imports; ``BETAREP_PURE=1`` forces the
numpy fallback.
"""

from __future__ import annotations

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)


def _load():
    if os.environ.get("BETAREP_PURE", "") not in ("", "0"):
        return _kernels_py
    try:
        from . import _kernels
    except ImportError:
        log.debug("compiled kernels unavailable, using numpy fallback")
        return _kernels_py
    return _kernels


kernels = _load()
python_kernels = _kernels_py


def compiled_kernels():
    """The compiled module, or ``None`` if it was not built."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels
