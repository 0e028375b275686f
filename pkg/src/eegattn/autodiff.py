"""Dense tensors with reverse-mode automatic differentiation.

A :class:`Tensor` wraps a contiguous row-major numpy array (float32 for
training, float64 for gradient checking) and, when it participates in a
tracked computation, a node of a dynamically built graph. Calling
``backward()`` on a scalar result walks the graph once in reverse
topological order, accumulates ``grad`` on every tracked ancestor, and then
frees the graph so no persistent tape survives the pass.

Only the operations the model zoo actually needs are provided: arithmetic
with numpy-style broadcasting, matmul, the pointwise nonlinearities,
reductions, softmax, concatenation, slicing, transpose and reshape. Fused
layer kernels (LSTM, conv) register themselves through :func:`from_op`.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, ShapeError

_FLOAT_DTYPES = (np.float32, np.float64)


class Tensor:
    """N-dimensional float array, optionally a node in an autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data = np.ascontiguousarray(arr)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._vjp = None

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{flag})"

    def item(self):
        return float(self.data.reshape(-1)[0])

    def detach(self):
        return Tensor(self.data.copy())

    def zero_grad(self):
        self.grad = None

    # -- graph machinery -----------------------------------------------------

    def backward(self):
        """Populate ``grad`` on all tracked ancestors of this scalar."""
        if self.data.size != 1:
            raise ContractError(
                f"backward root must be scalar, got shape {self.data.shape}")
        if not self.requires_grad:
            raise ContractError("backward root is not part of a computation graph")

        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))

        self.grad = _accum(self.grad, np.ones_like(self.data))
        for node in reversed(topo):
            if node._vjp is None:
                continue
            grads = node._vjp(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                parent.grad = _accum(parent.grad, g)
            # free the graph: nodes are single-use
            node._parents = ()
            node._vjp = None

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = _lift(other, self)
        out_data = self.data + other.data
        return from_op(out_data, (self, other), lambda g: (
            _unbroadcast(g, self.data.shape),
            _unbroadcast(g, other.data.shape)))

    __radd__ = __add__

    def __sub__(self, other):
        other = _lift(other, self)
        out_data = self.data - other.data
        return from_op(out_data, (self, other), lambda g: (
            _unbroadcast(g, self.data.shape),
            _unbroadcast(-g, other.data.shape)))

    def __rsub__(self, other):
        return _lift(other, self).__sub__(self)

    def __mul__(self, other):
        other = _lift(other, self)
        out_data = self.data * other.data
        return from_op(out_data, (self, other), lambda g: (
            _unbroadcast(g * other.data, self.data.shape),
            _unbroadcast(g * self.data, other.data.shape)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _lift(other, self)
        out_data = self.data / other.data
        return from_op(out_data, (self, other), lambda g: (
            _unbroadcast(g / other.data, self.data.shape),
            _unbroadcast(-g * self.data / (other.data * other.data),
                         other.data.shape)))

    def __rtruediv__(self, other):
        return _lift(other, self).__truediv__(self)

    def __neg__(self):
        return from_op(-self.data, (self,), lambda g: (-g,))

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only constant exponents are supported")
        out_data = self.data ** exponent
        return from_op(out_data, (self,), lambda g: (
            g * exponent * self.data ** (exponent - 1),))

    def __matmul__(self, other):
        other = _lift(other, self)
        return matmul(self, other)

    # -- pointwise nonlinearities ---------------------------------------------

    def exp(self):
        out_data = np.exp(self.data)
        return from_op(out_data, (self,), lambda g: (g * out_data,))

    def log(self):
        return from_op(np.log(self.data), (self,), lambda g: (g / self.data,))

    def sqrt(self):
        out_data = np.sqrt(self.data)
        return from_op(out_data, (self,), lambda g: (g * 0.5 / out_data,))

    def tanh(self):
        out_data = np.tanh(self.data)
        return from_op(out_data, (self,),
                       lambda g: (g * (1.0 - out_data * out_data),))

    def sigmoid(self):
        out_data = _sigmoid(self.data)
        return from_op(out_data, (self,),
                       lambda g: (g * out_data * (1.0 - out_data),))

    # -- reductions ------------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out_data = self.data.sum(axis=axis, keepdims=keepdims)
        shape = self.data.shape

        def vjp(g):
            if axis is None:
                return (np.broadcast_to(g, shape).astype(g.dtype, copy=False),)
            gg = g if keepdims else np.expand_dims(g, axis)
            return (np.broadcast_to(gg, shape).copy(),)

        return from_op(out_data, (self,), vjp)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def variance(self, axis=None, keepdims=False):
        """Population variance along ``axis``."""
        n = self.data.size if axis is None else self.data.shape[axis]
        mu = self.data.mean(axis=axis, keepdims=True)
        centered = self.data - mu
        out_data = (centered * centered).mean(axis=axis, keepdims=keepdims)

        def vjp(g):
            gg = g if (keepdims or axis is None) else np.expand_dims(g, axis)
            return (2.0 / n * centered * gg,)

        return from_op(out_data, (self,), vjp)

    # -- shape manipulation ------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.data.shape
        return from_op(self.data.reshape(shape), (self,),
                       lambda g: (g.reshape(old),))

    def transpose(self, axes=None):
        out_data = np.ascontiguousarray(self.data.transpose(axes))
        if axes is None:
            inv = None
        else:
            inv = np.argsort(axes)
        return from_op(out_data, (self,),
                       lambda g: (np.ascontiguousarray(g.transpose(inv)),))

    @property
    def T(self):
        return self.transpose()

    def __getitem__(self, key):
        out_data = np.ascontiguousarray(self.data[key])
        shape = self.data.shape

        def vjp(g):
            full = np.zeros(shape, dtype=g.dtype)
            full[key] = g
            return (full,)

        return from_op(out_data, (self,), vjp)


# -- free functions ------------------------------------------------------------


def from_op(out_data, parents, vjp):
    """Wrap a forward result; register a graph node iff a parent is tracked.

    ``vjp(out_grad)`` must return one gradient array (or None) per parent,
    in order.
    """
    out = Tensor(out_data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def matmul(a, b):
    """Matrix product for 2-D x 2-D, 2-D x 1-D and 1-D x 2-D operands."""
    ad, bd = a.data, b.data
    if ad.ndim == 0 or bd.ndim == 0 or ad.ndim > 2 or bd.ndim > 2:
        raise ShapeError(f"matmul needs 1-D/2-D operands, got {ad.shape} @ {bd.shape}")
    inner_a = ad.shape[-1]
    inner_b = bd.shape[0]
    if inner_a != inner_b:
        raise ShapeError(f"matmul inner dimensions disagree: {ad.shape} @ {bd.shape}")
    out_data = ad @ bd

    def vjp(g):
        if ad.ndim == 2 and bd.ndim == 2:
            return g @ bd.T, ad.T @ g
        if ad.ndim == 2 and bd.ndim == 1:
            return np.outer(g, bd), ad.T @ g
        # 1-D @ 2-D
        return g @ bd.T, np.outer(ad, g)

    return from_op(out_data, (a, b), vjp)


def softmax(t, axis):
    """Exp-normalize along ``axis``; slices along the axis sum to one."""
    data = t.data
    if data.ndim == 0 or axis >= data.ndim or axis < -data.ndim:
        raise ShapeError(f"softmax axis {axis} invalid for shape {data.shape}")
    if data.shape[axis] == 0:
        raise ShapeError("softmax along an empty axis")
    shifted = data - data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * out_data).sum(axis=axis, keepdims=True)
        return (out_data * (g - dot),)

    return from_op(out_data, (t,), vjp)


def concatenate(tensors, axis=0):
    if not tensors:
        raise ShapeError("concatenate of an empty list")
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        pieces = []
        for i in range(len(sizes)):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offsets[i], offsets[i + 1])
            pieces.append(np.ascontiguousarray(g[tuple(sl)]))
        return tuple(pieces)

    return from_op(out_data, tuple(tensors), vjp)


def broadcast_to(t, shape):
    out_data = np.broadcast_to(t.data, shape).copy()
    orig = t.data.shape
    return from_op(out_data, (t,), lambda g: (_unbroadcast(g, orig),))


# -- helpers ---------------------------------------------------------------------


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _lift(x, like):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.data.dtype))


def _accum(current, update):
    # always copy the first contribution: vjps may hand back the consumer's
    # own grad array (identity pass-through), which must not be mutated by
    # later += accumulations from sibling consumers
    if current is None:
        return np.array(update, copy=True)
    current += update
    return current


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape``, undoing numpy broadcasting."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g
