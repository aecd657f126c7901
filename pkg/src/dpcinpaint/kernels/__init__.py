"""Hot-kernel backend selection.

The compiled Cython kernel is preferred; the numpy/cKDTree reference
implementation is the fallback when the extension was not built or when
DPC_INPAINT_DISABLE_NATIVE=1 is set. `BACKEND` names the active one.
"""

import os

from . import reference

if os.environ.get("DPC_INPAINT_DISABLE_NATIVE"):
    BACKEND = "reference"
    window_vote_counts = reference.window_vote_counts
else:
    try:
        from . import _native

        BACKEND = "native"
        window_vote_counts = _native.window_vote_counts
    except ImportError:
        BACKEND = "reference"
        window_vote_counts = reference.window_vote_counts

__all__ = ["BACKEND", "window_vote_counts", "reference"]
