"""Thin wrapper giving the compiled recurrence the same interface as the
NumPy kernel. Float32 only; the dispatcher falls back for other dtypes."""

from __future__ import annotations

import numpy as np

from . import _lstm_cy
from .lstm_numpy import LstmCache, LstmGrads


def _c32(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float32)


def lstm_forward(X, Wx, Wh, b, h0, c0):
    T, B, D = X.shape
    H = Wh.shape[0]
    X = _c32(X)
    Wx = _c32(Wx)
    Wh = _c32(Wh)
    h0 = _c32(h0)
    c0 = _c32(c0)
    XW = X.reshape(T * B, D) @ Wx
    XW += b.astype(np.float32, copy=False)
    XW = np.ascontiguousarray(XW.reshape(T, B, 4 * H))
    IFOGf = np.empty((T, B, 4 * H), dtype=np.float32)
    C = np.empty((T, B, H), dtype=np.float32)
    Ct = np.empty((T, B, H), dtype=np.float32)
    Hout = np.empty((T, B, H), dtype=np.float32)
    _lstm_cy.recurrent_forward(XW, Wh, h0, c0, IFOGf, C, Ct, Hout)
    cache = LstmCache(X, Wx, Wh, h0, c0, IFOGf, C, Ct, Hout)
    return Hout, cache


def lstm_backward(dh_last, cache: LstmCache) -> LstmGrads:
    X, Wx, Wh, h0, c0, IFOGf, C, Ct, Hout = cache
    T, B, D = X.shape
    H = Wh.shape[0]
    dIFOG = np.empty((T, B, 4 * H), dtype=np.float32)
    dWh = np.zeros((H, 4 * H), dtype=np.float32)
    dh = np.ascontiguousarray(dh_last, dtype=np.float32).copy()
    dc = np.zeros((B, H), dtype=np.float32)
    _lstm_cy.recurrent_backward(Wh, h0, c0, IFOGf, C, Ct, Hout, dIFOG, dWh, dh, dc)
    flat = dIFOG.reshape(T * B, 4 * H)
    dX = (flat @ Wx.T).reshape(X.shape)
    dWx = X.reshape(T * B, D).T @ flat
    db = flat.sum(axis=0)
    return LstmGrads(dX, dWx, dWh, db, dh, dc)
