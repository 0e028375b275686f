"""Layer zoo: LSTM, the two attention variants, 1-D conv, instance norm,
PReLU, dropout, max pooling, dense and the highway block.

Every layer is a pure function of (params, input, rng): it builds onto the
caller's autodiff graph and returns a Tensor. Parameter containers are plain
dataclasses of Tensors so they can be iterated for the optimizer and the
checkpoint writer.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, from_op, softmax
from .backend import kernels
from .errors import ConfigError, ShapeError


# -- parameter containers and initialisation -----------------------------------


@dataclass
class DenseParams:
    w: Tensor  # (fan_in, fan_out)
    b: Tensor  # (fan_out,)

    def tensors(self):
        return [self.w, self.b]


@dataclass
class LstmParams:
    """Gate-stacked LSTM weights; gate order [input, forget, cell, output]."""
    wx: Tensor  # (input_dim, 4H)
    wh: Tensor  # (H, 4H)
    b: Tensor   # (4H,)

    @property
    def hidden_size(self):
        return self.wh.shape[0]

    @property
    def input_size(self):
        return self.wx.shape[0]

    def tensors(self):
        return [self.wx, self.wh, self.b]


@dataclass
class AttentionParams:
    w: Tensor  # (feature_dim,)

    def tensors(self):
        return [self.w]


@dataclass
class Conv1dParams:
    w: Tensor  # (kernel, c_in, c_out)
    b: Tensor  # (c_out,)

    def tensors(self):
        return [self.w, self.b]


@dataclass
class HighwayParams:
    transform: DenseParams
    gate: DenseParams
    eta: Tensor  # PReLU slope of the transform path, shape (1,)

    def tensors(self):
        return self.transform.tensors() + self.gate.tensors() + [self.eta]


def glorot_uniform(rng, shape, fan_in, fan_out, dtype=np.float32):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape).astype(dtype),
                  requires_grad=True)


def init_dense(rng, fan_in, fan_out, dtype=np.float32):
    return DenseParams(
        w=glorot_uniform(rng, (fan_in, fan_out), fan_in, fan_out, dtype),
        b=Tensor(np.zeros(fan_out, dtype=dtype), requires_grad=True))


def init_lstm(rng, input_dim, hidden, dtype=np.float32, forget_bias=1.0):
    b = np.zeros(4 * hidden, dtype=dtype)
    b[hidden:2 * hidden] = forget_bias
    return LstmParams(
        wx=glorot_uniform(rng, (input_dim, 4 * hidden), input_dim, 4 * hidden, dtype),
        wh=glorot_uniform(rng, (hidden, 4 * hidden), hidden, 4 * hidden, dtype),
        b=Tensor(b, requires_grad=True))


def init_attention(rng, dim, dtype=np.float32):
    return AttentionParams(
        w=glorot_uniform(rng, (dim,), dim, 1, dtype))


def init_conv1d(rng, kernel, c_in, c_out, dtype=np.float32):
    if kernel % 2 == 0:
        raise ConfigError(f"conv kernel must be odd for symmetric padding, got {kernel}")
    fan_in = kernel * c_in
    fan_out = kernel * c_out
    return Conv1dParams(
        w=glorot_uniform(rng, (kernel, c_in, c_out), fan_in, fan_out, dtype),
        b=Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True))


def init_prelu(dtype=np.float32, slope=0.25):
    return Tensor(np.full(1, slope, dtype=dtype), requires_grad=True)


def init_highway(rng, features, dtype=np.float32, gate_bias=-1.0):
    transform = init_dense(rng, features, features, dtype)
    gate = init_dense(rng, features, features, dtype)
    gate.b.data[:] = gate_bias  # favour the carry path early in training
    return HighwayParams(transform=transform, gate=gate, eta=init_prelu(dtype))


# -- layers ---------------------------------------------------------------------


def dense(x, params):
    if x.shape[-1] != params.w.shape[0]:
        raise ShapeError(
            f"dense expects {params.w.shape[0]} input features, got {x.shape}")
    return x @ params.w + params.b


def lstm_forward(x, params, h0=None, c0=None):
    """Run the recurrence over a (T, D) sequence; returns all hidden states (T, H)."""
    if x.ndim != 2:
        raise ShapeError(f"lstm input must be (T, D), got {x.shape}")
    T, d = x.shape
    if T < 1:
        raise ShapeError("lstm needs at least one timestep")
    if d != params.input_size:
        raise ShapeError(f"lstm expects input dim {params.input_size}, got {d}")
    h = params.hidden_size
    dt = x.dtype
    h0 = np.zeros(h, dtype=dt) if h0 is None else np.asarray(h0, dtype=dt)
    c0 = np.zeros(h, dtype=dt) if c0 is None else np.asarray(c0, dtype=dt)
    if h0.shape != (h,) or c0.shape != (h,):
        raise ShapeError(f"initial states must have shape ({h},)")

    wx, wh, b = params.wx, params.wh, params.b
    hs, gates, cs = kernels.lstm_forward(x.data, wx.data, wh.data, b.data, h0, c0)

    def vjp(g):
        dx, dwx, dwh, db, _, _ = kernels.lstm_backward(
            np.ascontiguousarray(g), x.data, wx.data, wh.data, hs, gates, cs, h0, c0)
        return dx, dwx, dwh, db

    return from_op(hs, (x, wx, wh, b), vjp)


def attention_context(h, params):
    """Collapse (T, D) hidden states into a single context vector (D,).

    Per-timestep scalar scores are the dot product of the hidden state and
    the weight vector, softmax-normalised over time; the context is the
    weighted sum of hidden states.
    """
    if h.ndim != 2:
        raise ShapeError(f"attention input must be (T, D), got {h.shape}")
    if h.shape[1] != params.w.shape[0]:
        raise ShapeError(
            f"attention weight length {params.w.shape[0]} != feature dim {h.shape[1]}")
    scores = h @ params.w            # (T,)
    alpha = softmax(scores, axis=0)  # (T,)
    return alpha @ h                 # (D,)


def channel_attention(h, params):
    """Reweight each timestep's features, keeping the time dimension.

    Scores are the elementwise product of the hidden state with the weight
    vector; the softmax runs over the feature axis independently per
    timestep, and the summation over time is deliberately omitted so the
    output stays (T, D).
    """
    if h.ndim != 2:
        raise ShapeError(f"attention input must be (T, D), got {h.shape}")
    if h.shape[1] != params.w.shape[0]:
        raise ShapeError(
            f"attention weight length {params.w.shape[0]} != feature dim {h.shape[1]}")
    beta = h * params.w
    alpha = softmax(beta, axis=1)
    return alpha * h


def conv1d(x, params):
    """Same-padded cross-correlation along time: (T, C_in) -> (T, C_out)."""
    k = params.w.shape[0]
    if k % 2 == 0:
        raise ConfigError(f"conv kernel must be odd, got {k}")
    if x.ndim != 2 or x.shape[1] != params.w.shape[1]:
        raise ShapeError(
            f"conv expects (T, {params.w.shape[1]}), got {x.shape}")
    w, b = params.w, params.b
    out = kernels.conv1d_forward(x.data, w.data, b.data)

    def vjp(g):
        dx, dw, db = kernels.conv1d_backward(np.ascontiguousarray(g), x.data, w.data)
        return dx, dw, db

    return from_op(out, (x, w, b), vjp)


def instance_norm(x, eps=1e-5):
    """Standardise each channel over the time axis: (x - mean) / sqrt(var + eps)."""
    mu = x.mean(axis=0, keepdims=True)
    var = x.variance(axis=0, keepdims=True)
    return (x - mu) / (var + eps).sqrt()


def prelu(x, eta):
    """x if x >= 0 else eta * x, with a learnable per-layer slope."""
    data = x.data
    neg = data < 0
    eta_val = eta.data.reshape(-1)[0]
    out = np.where(neg, eta_val * data, data)

    def vjp(g):
        dx = np.where(neg, eta_val, data.dtype.type(1.0)) * g
        deta = np.array([(g * data * neg).sum()], dtype=eta.data.dtype)
        return dx, deta

    return from_op(out, (x, eta), vjp)


def dropout(x, p, training, rng=None):
    """Inverted dropout; identity when not training or p == 0."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ConfigError("training-mode dropout needs an explicit rng")
    keep = (rng.random(x.shape) >= p).astype(x.dtype)
    mask = keep / x.dtype.type(1.0 - p)
    return x * mask


def maxpool1d(x, pool=2):
    """Max over non-overlapping windows along time; odd tails padded with -inf."""
    if x.ndim != 2:
        raise ShapeError(f"maxpool input must be (T, C), got {x.shape}")
    T, c = x.shape
    t_out = (T + pool - 1) // pool
    data = x.data
    if T % pool:
        padded = np.full((t_out * pool, c), -np.inf, dtype=data.dtype)
        padded[:T] = data
        data = padded
    windows = data.reshape(t_out, pool, c)
    idx = windows.argmax(axis=1)  # (t_out, c)
    out = np.take_along_axis(windows, idx[:, None, :], axis=1)[:, 0, :]

    def vjp(g):
        dwin = np.zeros((t_out, pool, c), dtype=g.dtype)
        np.put_along_axis(dwin, idx[:, None, :], g[:, None, :], axis=1)
        return (dwin.reshape(t_out * pool, c)[:T],)

    return from_op(np.ascontiguousarray(out), (x,), vjp)


def highway_block(x, params):
    """Gated mix of a PReLU transform path and the identity carry path."""
    if x.shape[-1] != params.transform.w.shape[0]:
        raise ShapeError(
            f"highway expects {params.transform.w.shape[0]} features, got {x.shape}")
    g = dense(x, params.gate).sigmoid()
    h = prelu(dense(x, params.transform), params.eta)
    return g * h + (1.0 - g) * x


def split_time_attention(h):
    """Halve the feature axis: first half scores, second half values.

    Scores are softmax-normalised over time independently per feature
    column, then scale the value half elementwise. Output is (T, F/2).
    """
    if h.ndim != 2:
        raise ShapeError(f"attention input must be (T, F), got {h.shape}")
    f2 = h.shape[1]
    if f2 % 2:
        raise ShapeError(f"feature dimension must be even to split, got {f2}")
    f = f2 // 2
    scores = h[:, :f]
    values = h[:, f:]
    a = softmax(scores, axis=0)
    return values * a


def softmax_cross_entropy(logits, label):
    """Cross entropy of softmax(logits) against an integer class label."""
    data = logits.data
    if data.ndim != 1:
        raise ShapeError(f"logits must be a vector, got {data.shape}")
    k = data.shape[0]
    if not 0 <= label < k:
        raise ShapeError(f"label {label} out of range for {k} classes")
    shifted = data - data.max()
    lse = np.log(np.exp(shifted).sum())
    loss = lse - shifted[label]
    probs = np.exp(shifted - lse)

    def vjp(g):
        d = probs.copy()
        d[label] -= 1.0
        return (d * g,)

    return from_op(np.asarray(loss, dtype=data.dtype), (logits,), vjp)


def count_parameters(tensors):
    return int(sum(t.data.size for t in tensors))
