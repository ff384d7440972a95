"""Pure NumPy LSTM kernel: batched forward plus backward from the final state.

Gate layout along the last axis is [i, f, g, o]. The forward pass caches the
activated gates and cell states; the backward pass takes a gradient on the
final hidden state only, which is all the string encoder ever needs. The
code is dtype-generic so float64 graphs can run through it unchanged.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class LstmCache(NamedTuple):
    X: np.ndarray      # (T, B, D) inputs
    Wx: np.ndarray     # (D, 4H)
    Wh: np.ndarray     # (H, 4H)
    h0: np.ndarray     # (B, H)
    c0: np.ndarray     # (B, H)
    IFOGf: np.ndarray  # (T, B, 4H) activated gates
    C: np.ndarray      # (T, B, H) cell states
    Ct: np.ndarray     # (T, B, H) tanh of cell states
    Hout: np.ndarray   # (T, B, H) hidden states


class LstmGrads(NamedTuple):
    dX: np.ndarray
    dWx: np.ndarray
    dWh: np.ndarray
    db: np.ndarray
    dh0: np.ndarray
    dc0: np.ndarray


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # exp overflow saturates to inf and the quotient to exactly 0, the
    # correct limit, so suppress the uninformative warning
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def lstm_forward(X, Wx, Wh, b, h0, c0):
    """Run the recurrence over a (T, B, D) batch; returns (Hout, cache)."""
    T, B, D = X.shape
    H = Wh.shape[0]
    XW = X.reshape(T * B, D) @ Wx
    XW += b
    XW = XW.reshape(T, B, 4 * H)
    IFOGf = np.empty_like(XW)
    C = np.empty((T, B, H), dtype=X.dtype)
    Ct = np.empty_like(C)
    Hout = np.empty_like(C)
    h_prev, c_prev = h0, c0
    for t in range(T):
        z = XW[t] + h_prev @ Wh
        IFOGf[t, :, : 2 * H] = _sigmoid(z[:, : 2 * H])
        IFOGf[t, :, 2 * H : 3 * H] = np.tanh(z[:, 2 * H : 3 * H])
        IFOGf[t, :, 3 * H :] = _sigmoid(z[:, 3 * H :])
        i = IFOGf[t, :, :H]
        f = IFOGf[t, :, H : 2 * H]
        g = IFOGf[t, :, 2 * H : 3 * H]
        o = IFOGf[t, :, 3 * H :]
        C[t] = f * c_prev + i * g
        Ct[t] = np.tanh(C[t])
        Hout[t] = o * Ct[t]
        h_prev, c_prev = Hout[t], C[t]
    cache = LstmCache(X, Wx, Wh, h0, c0, IFOGf, C, Ct, Hout)
    return Hout, cache


def lstm_backward(dh_last, cache: LstmCache) -> LstmGrads:
    """Backpropagate a gradient on the final hidden state through time."""
    X, Wx, Wh, h0, c0, IFOGf, C, Ct, Hout = cache
    T, B, D = X.shape
    H = Wh.shape[0]
    dIFOG = np.empty((T, B, 4 * H), dtype=X.dtype)
    dWh = np.zeros_like(Wh)
    dh = np.array(dh_last, dtype=X.dtype, copy=True)
    dc = np.zeros((B, H), dtype=X.dtype)
    for t in range(T - 1, -1, -1):
        i = IFOGf[t, :, :H]
        f = IFOGf[t, :, H : 2 * H]
        g = IFOGf[t, :, 2 * H : 3 * H]
        o = IFOGf[t, :, 3 * H :]
        ct = Ct[t]
        c_prev = C[t - 1] if t > 0 else c0
        h_prev = Hout[t - 1] if t > 0 else h0
        dc = dc + dh * o * (1.0 - ct * ct)
        do = dh * ct
        dz = dIFOG[t]
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H :] = do * o * (1.0 - o)
        dWh += h_prev.T @ dz
        dh = dz @ Wh.T
        dc = dc * f
    flat = dIFOG.reshape(T * B, 4 * H)
    dX = (flat @ Wx.T).reshape(X.shape)
    dWx = X.reshape(T * B, D).T @ flat
    db = flat.sum(axis=0)
    return LstmGrads(dX, dWx, dWh, db, dh, dc)
