"""LSTM kernel backends.

The compiled extension is preferred when importable; set SEQTAB_KERNEL=numpy
to force the fallback or SEQTAB_KERNEL=cython to require the extension.
Float64 inputs always take the NumPy path, which keeps gradient checking in
double precision regardless of the selected backend.
"""

from __future__ import annotations

import os

import numpy as np

from . import lstm_numpy
from .lstm_numpy import LstmCache, LstmGrads

_requested = os.environ.get("SEQTAB_KERNEL", "auto").strip().lower() or "auto"
_cython = None
if _requested in ("auto", "cython"):
    try:
        from . import lstm_cython as _cython
    except ImportError:
        _cython = None
    if _requested == "cython" and _cython is None:
        raise ImportError("SEQTAB_KERNEL=cython but the compiled extension is not importable")
elif _requested != "numpy":
    raise ValueError(f"SEQTAB_KERNEL must be auto, cython, or numpy, not {_requested!r}")

backend_name = "cython" if _cython is not None else "numpy"


def lstm_forward(X, Wx, Wh, b, h0, c0):
    """Batched LSTM over (T, B, D) inputs; returns (Hout, cache)."""
    if _cython is not None and X.dtype == np.float32:
        return _cython.lstm_forward(X, Wx, Wh, b, h0, c0)
    return lstm_numpy.lstm_forward(X, Wx, Wh, b, h0, c0)


def lstm_backward(dh_last, cache: LstmCache) -> LstmGrads:
    """Gradient of the final hidden state back through the recurrence."""
    if _cython is not None and cache.X.dtype == np.float32:
        return _cython.lstm_backward(dh_last, cache)
    return lstm_numpy.lstm_backward(dh_last, cache)


__all__ = [
    "LstmCache",
    "LstmGrads",
    "backend_name",
    "lstm_backward",
    "lstm_forward",
]
