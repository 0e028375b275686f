"""Pure-numpy reference kernels for the recurrent and convolutional hot loops.

Same call signatures as :mod:`eegattn.kernels_numba`; which module actually
runs is decided by :mod:`eegattn.backend`. These implementations lean on BLAS
matmuls and are the ground truth the numba kernels are checked against.
"""

import numpy as np

NAME = "numpy"


def _sigmoid(x):
    # piecewise form avoids overflow warnings for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(x, wx, wh, b, h0, c0):
    """Run the gated recurrence over a (T, D) sequence.

    Gate layout along the 4H axis is [input, forget, cell, output]. Returns
    the hidden sequence plus the activated gates and cell states needed for
    the backward pass.
    """
    T = x.shape[0]
    H = h0.shape[0]
    dt = x.dtype
    hs = np.empty((T, H), dtype=dt)
    gates = np.empty((T, 4 * H), dtype=dt)
    cs = np.empty((T, H), dtype=dt)
    xw = x @ wx + b  # input contribution for every step at once
    h = h0
    c = c0
    for t in range(T):
        pre = xw[t] + h @ wh
        i = _sigmoid(pre[:H])
        f = _sigmoid(pre[H:2 * H])
        g = np.tanh(pre[2 * H:3 * H])
        o = _sigmoid(pre[3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t, :H] = i
        gates[t, H:2 * H] = f
        gates[t, 2 * H:3 * H] = g
        gates[t, 3 * H:] = o
        cs[t] = c
        hs[t] = h
    return hs, gates, cs


def lstm_backward(dhs, x, wx, wh, hs, gates, cs, h0, c0):
    """Backpropagate through time. ``dhs`` is the gradient on every hidden state."""
    T, _ = x.shape
    H = h0.shape[0]
    dt = x.dtype
    dpre_all = np.empty((T, 4 * H), dtype=dt)
    dh = np.zeros(H, dtype=dt)
    dc = np.zeros(H, dtype=dt)
    for t in range(T - 1, -1, -1):
        dh = dh + dhs[t]
        i = gates[t, :H]
        f = gates[t, H:2 * H]
        g = gates[t, 2 * H:3 * H]
        o = gates[t, 3 * H:]
        tc = np.tanh(cs[t])
        dc = dc + dh * o * (1.0 - tc * tc)
        cprev = cs[t - 1] if t > 0 else c0
        di = dc * g
        df = dc * cprev
        dg = dc * i
        do = dh * tc
        dpre = dpre_all[t]
        dpre[:H] = di * i * (1.0 - i)
        dpre[H:2 * H] = df * f * (1.0 - f)
        dpre[2 * H:3 * H] = dg * (1.0 - g * g)
        dpre[3 * H:] = do * o * (1.0 - o)
        dh = wh @ dpre
        dc = dc * f
    dx = dpre_all @ wx.T
    dwx = x.T @ dpre_all
    hprev = np.vstack((h0[None, :], hs[:-1]))
    dwh = hprev.T @ dpre_all
    db = dpre_all.sum(axis=0)
    return dx, dwx, dwh, db, dh, dc


def conv1d_forward(x, w, b):
    """Same-padded cross-correlation along time; x (T, Cin), w (k, Cin, Cout)."""
    T, cin = x.shape
    k = w.shape[0]
    p = k // 2
    xp = np.zeros((T + 2 * p, cin), dtype=x.dtype)
    xp[p:p + T] = x
    out = np.empty((T, w.shape[2]), dtype=x.dtype)
    out[:] = b
    for j in range(k):
        out += xp[j:j + T] @ w[j]
    return out


def conv1d_backward(dout, x, w):
    T, cin = x.shape
    k = w.shape[0]
    p = k // 2
    xp = np.zeros((T + 2 * p, cin), dtype=x.dtype)
    xp[p:p + T] = x
    dw = np.empty_like(w)
    dxp = np.zeros_like(xp)
    for j in range(k):
        dw[j] = xp[j:j + T].T @ dout
        dxp[j:j + T] += dout @ w[j].T
    db = dout.sum(axis=0)
    return dxp[p:p + T], dw, db
