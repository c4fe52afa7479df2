"""Dense tensors with reverse-mode gradient accumulation.

Data lives in row-major numpy arrays, float32 by default. A float64 shadow
mode (``precision("float64")``) exists for finite-difference gradient checks.
Every op records a backward closure on its output; ``Tensor.backward()``
topologically replays them.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from contextvars import ContextVar

import numpy as np

# context-local so concurrent inference threads cannot leak state into each other
_DTYPE = ContextVar("scenegen_default_dtype", default=np.float32)
_GRAD = ContextVar("scenegen_grad_enabled", default=True)

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


def default_dtype():
    return _DTYPE.get()


@contextmanager
def precision(dtype):
    """Temporarily switch the dtype newly created tensors use ("float64" for shadow mode)."""
    token = _DTYPE.set(np.dtype(dtype).type)
    try:
        yield
    finally:
        _DTYPE.reset(token)


@contextmanager
def no_grad():
    """Disable graph recording (inference mode)."""
    token = _GRAD.set(False)
    try:
        yield
    finally:
        _GRAD.reset(token)


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=_DTYPE.get())
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = ()
        self._backward = None

    @classmethod
    def _from_op(cls, data, parents, backward):
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        if _GRAD.get() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out.requires_grad = False
            out._parents = ()
            out._backward = None
        return out

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

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype)
        else:
            self.grad = self.grad + g

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into .grad of every reachable tensor that
        requires grad. Non-leaf grads are consumed as they propagate, so a
        shared subgraph can serve several backward passes without
        double-counting. `grad` seeds non-scalar roots."""
        if grad is None:
            if self.data.ndim != 0:
                raise ValueError("backward() requires a scalar tensor (or an explicit seed grad)")
            grad = np.ones((), dtype=self.data.dtype)
        elif np.shape(grad) != self.data.shape:
            raise ValueError(f"seed grad shape {np.shape(grad)} != tensor shape {self.data.shape}")
        topo, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(grad)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)
                node.grad = None  # consumed; leaves keep accumulating

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("tensor/tensor division is not part of the op set")
        return mul(self, 1.0 / other)

    def reshape(self, *shape):
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def _as_tensor(x):
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _unbroadcast(grad, shape):
    """Sum grad down to `shape` after numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return Tensor._from_op(out_data, (a, b), backward)


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return Tensor._from_op(out_data, (a, b), backward)


def matmul(a, b):
    """Batched matrix product; leading dims broadcast per numpy rules."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise ValueError(f"matmul inner dims differ: {a.shape} @ {b.shape}")
    out_data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            ga = g @ np.swapaxes(b.data, -1, -2) if b.ndim > 1 else np.expand_dims(g, -1) * b.data
            a._accumulate(_unbroadcast(ga, a.shape))
        if b.requires_grad:
            if a.ndim > 1:
                gb = np.swapaxes(a.data, -1, -2) @ g
            else:
                gb = np.expand_dims(a.data, -1) * g
            b._accumulate(_unbroadcast(gb, b.shape))

    return Tensor._from_op(out_data, (a, b), backward)


def reshape(a, shape):
    a = _as_tensor(a)
    old_shape = a.shape
    out_data = a.data.reshape(shape)

    def backward(g):
        a._accumulate(g.reshape(old_shape))

    return Tensor._from_op(out_data, (a,), backward)


def transpose(a, axes):
    a = _as_tensor(a)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out_data = a.data.transpose(axes)

    def backward(g):
        a._accumulate(g.transpose(inv))

    return Tensor._from_op(out_data, (a,), backward)


def tsum(a, axis=None, keepdims=False):
    a = _as_tensor(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.shape))

    return Tensor._from_op(out_data, (a,), backward)


def tmean(a, axis=None, keepdims=False):
    a = _as_tensor(a)
    n = a.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def gelu(a):
    """Smooth gated nonlinearity (tanh form)."""
    a = _as_tensor(a)
    x = a.data
    inner = _GELU_C * (x + _GELU_A * (x * x * x))
    t = np.tanh(inner)
    out_data = 0.5 * x * (1.0 + t)

    def backward(g):
        dt = (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
        a._accumulate(g * (0.5 * (1.0 + t) + 0.5 * x * dt))

    return Tensor._from_op(out_data, (a,), backward)


def layer_norm(a, gain, bias, eps=1e-5):
    """Normalize over the last axis, then scale and shift."""
    a, gain, bias = _as_tensor(a), _as_tensor(gain), _as_tensor(bias)
    x = a.data
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    out_data = xhat * gain.data + bias.data

    def backward(g):
        if gain.requires_grad:
            gain._accumulate((g * xhat).reshape(-1, x.shape[-1]).sum(axis=0))
        if bias.requires_grad:
            bias._accumulate(g.reshape(-1, x.shape[-1]).sum(axis=0))
        if a.requires_grad:
            dxhat = g * gain.data
            m1 = dxhat.mean(axis=-1, keepdims=True)
            m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
            a._accumulate((dxhat - m1 - xhat * m2) * inv)

    return Tensor._from_op(out_data, (a, gain, bias), backward)


def embedding(table, ids):
    """Row gather: out[..., :] = table[ids[...], :]."""
    table = _as_tensor(table)
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ValueError(f"embedding ids out of range [0, {table.shape[0]})")
    out_data = table.data[ids]

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, table.shape[-1]))
        table._accumulate(gt)

    return Tensor._from_op(out_data, (table,), backward)


def masked_softmax(scores, mask=None):
    """Softmax over the last axis; False mask entries get -inf bias.

    Rows with no attendable entry come out all-zero instead of NaN.
    """
    scores = _as_tensor(scores)
    s = scores.data
    if mask is None:
        mask_b = np.ones(s.shape, dtype=bool)
    else:
        mask_b = np.broadcast_to(np.asarray(mask.data if isinstance(mask, Tensor) else mask, dtype=bool), s.shape)
    filled = np.where(mask_b, s, -np.inf)
    rowmax = filled.max(axis=-1, keepdims=True)
    rowmax = np.where(np.isfinite(rowmax), rowmax, 0.0)
    e = np.exp(np.where(mask_b, s - rowmax, -np.inf))
    denom = e.sum(axis=-1, keepdims=True)
    y = e / np.where(denom == 0.0, 1.0, denom)

    def backward(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        scores._accumulate(y * (g - dot))

    return Tensor._from_op(y.astype(s.dtype, copy=False), (scores,), backward)


def scaled_dot_product_attention(q, k, v, mask=None, return_weights=False):
    """Attention over the last two axes: q [..., Tq, Dh], k/v [..., Tk, Dh].

    True mask entries mark attendable positions. Fully masked query rows
    yield zero output.
    """
    q, k, v = _as_tensor(q), _as_tensor(k), _as_tensor(v)
    if q.shape[-1] != k.shape[-1]:
        raise ValueError(f"q/k head dims differ: {q.shape} vs {k.shape}")
    if k.shape[:-1] != v.shape[:-1]:
        raise ValueError(f"k/v key counts differ: {k.shape} vs {v.shape}")
    dh = q.shape[-1]
    scores = mul(matmul(q, transpose(k, tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2))), 1.0 / math.sqrt(dh))
    weights = masked_softmax(scores, mask)
    out = matmul(weights, v)
    if return_weights:
        return out, weights
    return out


def cross_entropy(logits, targets, ignore_id=None):
    """Mean of -log softmax(logits)[target] over positions whose target != ignore_id.

    logits [N, V], targets length-N int array.
    """
    logits = _as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ValueError(f"cross_entropy expects logits [N,V] and targets [N], got {logits.shape} / {targets.shape}")
    valid = np.ones(targets.shape, dtype=bool) if ignore_id is None else targets != ignore_id
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise ValueError("cross_entropy: every position is ignored")
    x = logits.data
    m = x.max(axis=-1, keepdims=True)
    lse = m + np.log(np.exp(x - m).sum(axis=-1, keepdims=True))
    safe_targets = np.where(valid, targets, 0)
    picked = x[np.arange(x.shape[0]), safe_targets][:, None]
    nll = (lse - picked)[:, 0]
    out_data = np.asarray((nll * valid).sum() / n_valid, dtype=x.dtype)

    def backward(g):
        p = np.exp(x - lse)
        p[np.arange(x.shape[0]), safe_targets] -= 1.0
        p *= (valid / n_valid)[:, None]
        logits._accumulate(p * g)

    return Tensor._from_op(out_data, (logits,), backward)


def dropout(a, rate, rng):
    """Inverted dropout; rate 0 is the identity (the default everywhere)."""
    a = _as_tensor(a)
    if rate <= 0.0:
        return a
    keep = (rng.random(a.shape) >= rate).astype(a.data.dtype) / (1.0 - rate)
    return mul(a, Tensor(keep))


def conv2d(x, w, stride=1, padding=0):
    """2D convolution via im2col. x [B, C, H, W], w [O, C, kh, kw] -> [B, O, H', W']."""
    x, w = _as_tensor(x), _as_tensor(w)
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ValueError(f"conv2d expects x [B,C,H,W], w [O,C,kh,kw]; got {x.shape}, {w.shape}")
    b, c, h, wd = x.shape
    o, _, kh, kw = w.shape
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    h_out = (h + 2 * padding - kh) // stride + 1
    w_out = (wd + 2 * padding - kw) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]  # [B, C, H', W', kh, kw]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(b * h_out * w_out, c * kh * kw)
    wmat = w.data.reshape(o, c * kh * kw)
    out_data = (cols @ wmat.T).reshape(b, h_out, w_out, o).transpose(0, 3, 1, 2)
    out_data = np.ascontiguousarray(out_data)

    def backward(g):
        g_rows = g.transpose(0, 2, 3, 1).reshape(b * h_out * w_out, o)
        if w.requires_grad:
            w._accumulate((g_rows.T @ cols).reshape(o, c, kh, kw))
        if x.requires_grad:
            dcols = (g_rows @ wmat).reshape(b, h_out, w_out, c, kh, kw)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, :, i:i + h_out * stride:stride, j:j + w_out * stride:stride] += \
                        dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            if padding:
                dxp = dxp[:, :, padding:-padding, padding:-padding]
            x._accumulate(dxp)

    return Tensor._from_op(out_data, (x, w), backward)
