"""Numba-compiled kernels for the recurrent and convolutional hot loops.

Interface mirrors :mod:`eegattn.kernels_numpy` exactly. All kernels are
single-threaded (no prange) so results are deterministic for a given seed.
"""

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def _sigmoid_vec(x):
    out = np.empty_like(x)
    for n in range(x.shape[0]):
        v = x[n]
        if v >= 0.0:
            out[n] = 1.0 / (1.0 + np.exp(-v))
        else:
            e = np.exp(v)
            out[n] = e / (1.0 + e)
    return out


@njit(cache=True)
def lstm_forward(x, wx, wh, b, h0, c0):
    T = x.shape[0]
    H = h0.shape[0]
    hs = np.empty((T, H), dtype=x.dtype)
    gates = np.empty((T, 4 * H), dtype=x.dtype)
    cs = np.empty((T, H), dtype=x.dtype)
    xw = np.dot(x, wx)
    h = h0.copy()
    c = c0.copy()
    for t in range(T):
        pre = xw[t] + np.dot(h, wh) + b
        i = _sigmoid_vec(pre[:H])
        f = _sigmoid_vec(pre[H:2 * H])
        g = np.tanh(pre[2 * H:3 * H])
        o = _sigmoid_vec(pre[3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t, :H] = i
        gates[t, H:2 * H] = f
        gates[t, 2 * H:3 * H] = g
        gates[t, 3 * H:] = o
        cs[t] = c
        hs[t] = h
    return hs, gates, cs


@njit(cache=True)
def lstm_backward(dhs, x, wx, wh, hs, gates, cs, h0, c0):
    T = x.shape[0]
    H = h0.shape[0]
    dpre_all = np.empty((T, 4 * H), dtype=x.dtype)
    dh = np.zeros(H, dtype=x.dtype)
    dc = np.zeros(H, dtype=x.dtype)
    for t in range(T - 1, -1, -1):
        for n in range(H):
            dh[n] += dhs[t, n]
        for n in range(H):
            i = gates[t, n]
            f = gates[t, H + n]
            g = gates[t, 2 * H + n]
            o = gates[t, 3 * H + n]
            tc = np.tanh(cs[t, n])
            dcn = dc[n] + dh[n] * o * (1.0 - tc * tc)
            cprev = cs[t - 1, n] if t > 0 else c0[n]
            dpre_all[t, n] = dcn * g * i * (1.0 - i)
            dpre_all[t, H + n] = dcn * cprev * f * (1.0 - f)
            dpre_all[t, 2 * H + n] = dcn * i * (1.0 - g * g)
            dpre_all[t, 3 * H + n] = dh[n] * tc * o * (1.0 - o)
            dc[n] = dcn * f
        dh = np.dot(wh, dpre_all[t])
    dx = np.dot(dpre_all, wx.T)
    dwx = np.dot(x.T, dpre_all)
    hprev = np.empty_like(hs)
    hprev[0] = h0
    hprev[1:] = hs[:-1]
    dwh = np.dot(hprev.T, dpre_all)
    db = np.zeros(4 * H, dtype=x.dtype)
    for t in range(T):
        for n in range(4 * H):
            db[n] += dpre_all[t, n]
    return dx, dwx, dwh, db, dh, dc


@njit(cache=True)
def conv1d_forward(x, w, b):
    T, cin = x.shape
    k = w.shape[0]
    cout = w.shape[2]
    p = k // 2
    out = np.empty((T, cout), dtype=x.dtype)
    for t in range(T):
        for co in range(cout):
            out[t, co] = b[co]
    for t in range(T):
        for j in range(k):
            s = t + j - p
            if 0 <= s < T:
                for ci in range(cin):
                    xv = x[s, ci]
                    for co in range(cout):
                        out[t, co] += xv * w[j, ci, co]
    return out


@njit(cache=True)
def conv1d_backward(dout, x, w):
    T, cin = x.shape
    k = w.shape[0]
    cout = w.shape[2]
    p = k // 2
    dx = np.zeros((T, cin), dtype=x.dtype)
    dw = np.zeros_like(w)
    db = np.zeros(cout, dtype=x.dtype)
    for t in range(T):
        for co in range(cout):
            db[co] += dout[t, co]
    for t in range(T):
        for j in range(k):
            s = t + j - p
            if 0 <= s < T:
                for ci in range(cin):
                    xv = x[s, ci]
                    for co in range(cout):
                        d = dout[t, co]
                        dw[j, ci, co] += xv * d
                        dx[s, ci] += d * w[j, ci, co]
    return dx, dw, db
