"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the
pure-Python kernels take over. Set ``PPGPEAKS_PURE_PYTHON=1`` to force the
fallback.
"""

import logging
import os

from . import _pykernels
from ._pykernels import SRMAC_STATE_SIZE, new_srmac_state  # noqa: F401

log = logging.getLogger(__name__)


def _load_compiled():
    if os.environ.get("PPGPEAKS_PURE_PYTHON", "").strip() not in ("", "0"):
        return None
    try:
        from . import _ckernels
    except ImportError as exc:
        log.debug("compiled kernels unavailable (%s); using pure Python", exc)
        return None
    return _ckernels


_compiled = _load_compiled()
BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _pykernels

ewma_filter = _impl.ewma_filter
sma_filter = _impl.sma_filter
srmac_scan = _impl.srmac_scan
segment_argmax = _impl.segment_argmax
match_events = _impl.match_events


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _pykernels}
    if _compiled is not None:
        found["cython"] = _compiled
    else:
        try:
            from . import _ckernels
        except ImportError:
            pass
        else:
            found["cython"] = _ckernels
    return found
