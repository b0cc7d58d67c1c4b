"""Reverse-mode autodiff on numpy buffers.

Deliberately minimal: only the primitives the gesture classifier needs,
with broadcasting limited to the (batch, time, feature) patterns it uses.
Graphs are built eagerly; ``backward`` walks them in reverse topological
order exactly once.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """A numpy buffer plus the bookkeeping for reverse-mode differentiation."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64) if not isinstance(data, np.ndarray) else data
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor values must be finite")
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.data.astype(dtype), self.requires_grad)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # Convenience arithmetic used by model code.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def _from_op(data: np.ndarray, parents, backward_fn) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    else:
        out._parents = ()
        out._backward_fn = None
    return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` over the axes that were broadcast to reach its shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _accumulate(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = g.astype(t.data.dtype, copy=True)
    else:
        t.grad += g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data + b.data

    def bw(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g, b.data.shape))

    return _from_op(out_data, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data - b.data

    def bw(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-g, b.data.shape))

    return _from_op(out_data, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out_data = a.data * b.data

    def bw(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _from_op(out_data, (a, b), bw)


def scale(a, s: float) -> Tensor:
    a = as_tensor(a)
    s = float(s)
    out_data = a.data * s

    def bw(g):
        if a.requires_grad:
            _accumulate(a, g * s)

    return _from_op(out_data, (a,), bw)


def matmul(a, b) -> Tensor:
    """Batched matrix product on the trailing two axes."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ValueError(
            f"matmul needs >= 2-D operands, got shapes {a.data.shape} and {b.data.shape}"
        )
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    out_data = a.data @ b.data

    def bw(g):
        if a.requires_grad:
            ga = g @ np.swapaxes(b.data, -1, -2)
            _accumulate(a, _unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            gb = np.swapaxes(a.data, -1, -2) @ g
            _accumulate(b, _unbroadcast(gb, b.data.shape))

    return _from_op(out_data, (a, b), bw)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    in_shape = a.data.shape
    out_data = a.data.reshape(shape)

    def bw(g):
        if a.requires_grad:
            _accumulate(a, g.reshape(in_shape))

    return _from_op(out_data, (a,), bw)


def transpose(a, axes) -> Tensor:
    a = as_tensor(a)
    axes = tuple(ax % a.data.ndim for ax in axes)
    inverse = tuple(np.argsort(axes))
    out_data = np.ascontiguousarray(a.data.transpose(axes))

    def bw(g):
        if a.requires_grad:
            _accumulate(a, g.transpose(inverse))

    return _from_op(out_data, (a,), bw)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                _accumulate(t, g[tuple(idx)])

    return _from_op(out_data, tuple(tensors), bw)


def take(a, index: int) -> Tensor:
    """Scalar element of a 1-D tensor, kept in the graph."""
    a = as_tensor(a)
    if a.data.ndim != 1:
        raise ValueError(f"take expects a 1-D tensor, got shape {a.data.shape}")
    index = int(index)
    out_data = np.asarray(a.data[index])

    def bw(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[index] = g
            _accumulate(a, full)

    return _from_op(out_data, (a,), bw)


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        if a.requires_grad:
            if axis is None:
                _accumulate(a, np.broadcast_to(g, a.data.shape).copy())
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                _accumulate(a, np.broadcast_to(gg, a.data.shape).copy())

    return _from_op(out_data, (a,), bw)


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        n = a.data.size
    elif isinstance(axis, tuple):
        n = int(np.prod([a.data.shape[ax] for ax in axis]))
    else:
        n = a.data.shape[axis]
    return scale(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def relu(a) -> Tensor:
    a = as_tensor(a)
    out_data = np.maximum(a.data, 0)

    def bw(g):
        if a.requires_grad:
            _accumulate(a, g * (a.data > 0))

    return _from_op(out_data, (a,), bw)


_GELU_C = 0.7978845608028654  # sqrt(2/pi)
_GELU_A = 0.044715


def gelu(a) -> Tensor:
    """tanh-approximation GELU; its analytic gradient matches the approximation."""
    a = as_tensor(a)
    x = a.data
    inner = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(inner)
    out_data = 0.5 * x * (1.0 + t)

    def bw(g):
        if a.requires_grad:
            dinner = _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
            local = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * dinner
            _accumulate(a, g * local)

    return _from_op(out_data, (a,), bw)


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        if a.requires_grad:
            dot = (g * out_data).sum(axis=axis, keepdims=True)
            _accumulate(a, out_data * (g - dot))

    return _from_op(out_data, (a,), bw)


def layernorm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis, then apply learnable scale and shift."""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    f = x.data.shape[-1]
    if gain.data.shape != (f,) or bias.data.shape != (f,):
        raise ValueError(
            f"layernorm gain/bias must have shape ({f},), got {gain.data.shape} "
            f"and {bias.data.shape}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc**2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out_data = xhat * gain.data + bias.data

    def bw(g):
        if gain.requires_grad:
            _accumulate(gain, (g * xhat).reshape(-1, f).sum(axis=0))
        if bias.requires_grad:
            _accumulate(bias, g.reshape(-1, f).sum(axis=0))
        if x.requires_grad:
            gx = g * gain.data
            gsum = gx.sum(axis=-1, keepdims=True)
            gdot = (gx * xhat).sum(axis=-1, keepdims=True)
            _accumulate(x, inv * (gx - gsum / f - xhat * gdot / f))

    return _from_op(out_data, (x, gain, bias), bw)


def dropout(a, p: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: scales kept activations by 1/(1-p); identity in eval mode."""
    a = as_tensor(a)
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {p}")
    if not train or p == 0.0:
        return a
    if rng is None:
        raise ValueError("dropout in train mode needs an rng")
    mask = (rng.random(a.data.shape) >= p) / (1.0 - p)
    mask = mask.astype(a.data.dtype)
    out_data = a.data * mask

    def bw(g):
        if a.requires_grad:
            _accumulate(a, g * mask)

    return _from_op(out_data, (a,), bw)


def conv1d(x, w, b=None, stride: int = 1) -> Tensor:
    """1-D convolution with "same" zero padding.

    x: (N, T, C_in); w: (k, C_in, C_out); b: (C_out,) or None.
    Output length is ceil(T / stride). Realized as k shifted matmuls, which
    beats im2col at these sizes.
    """
    x, w = as_tensor(x), as_tensor(w)
    if x.data.ndim != 3 or w.data.ndim != 3:
        raise ValueError(
            f"conv1d expects x (N,T,C_in) and w (k,C_in,C_out), got "
            f"{x.data.shape} and {w.data.shape}"
        )
    n, t, c_in = x.data.shape
    k, wc_in, c_out = w.data.shape
    if wc_in != c_in:
        raise ValueError(f"conv1d channel mismatch: x has {c_in}, w expects {wc_in}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    pad_left = (k - 1) // 2
    pad_right = k - 1 - pad_left
    xp = np.pad(x.data, ((0, 0), (pad_left, pad_right), (0, 0)))
    positions = np.arange(0, t, stride)
    t_out = positions.shape[0]
    out_data = np.zeros((n, t_out, c_out), dtype=x.data.dtype)
    if stride == 1:
        for j in range(k):
            out_data += xp[:, j : j + t, :] @ w.data[j]
    else:
        for j in range(k):
            out_data += xp[:, positions + j, :] @ w.data[j]
    bias = None
    if b is not None:
        bias = as_tensor(b)
        if bias.data.shape != (c_out,):
            raise ValueError(f"conv1d bias must have shape ({c_out},), got {bias.data.shape}")
        out_data = out_data + bias.data

    def bw(g):
        if bias is not None and bias.requires_grad:
            _accumulate(bias, g.reshape(-1, c_out).sum(axis=0))
        gf = g.reshape(-1, c_out)
        if w.requires_grad:
            gw = np.empty_like(w.data)
            for j in range(k):
                sl = xp[:, j : j + t, :] if stride == 1 else xp[:, positions + j, :]
                gw[j] = sl.reshape(-1, c_in).T @ gf
            _accumulate(w, gw)
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for j in range(k):
                contrib = g @ w.data[j].T
                if stride == 1:
                    gxp[:, j : j + t, :] += contrib
                else:
                    gxp[:, positions + j, :] += contrib
            _accumulate(x, gxp[:, pad_left : pad_left + t, :])

    parents = (x, w, bias) if bias is not None else (x, w)
    return _from_op(out_data, parents, bw)


def dense(x, w, b=None) -> Tensor:
    """Affine map on the last axis: x @ w (+ b)."""
    out = matmul(x, w)
    if b is not None:
        out = add(out, b)
    return out


def global_mean_pool(x) -> Tensor:
    """Mean over the time axis of a (N, T, C) tensor."""
    x = as_tensor(x)
    if x.data.ndim != 3:
        raise ValueError(f"global_mean_pool expects (N,T,C), got {x.data.shape}")
    return tmean(x, axis=1)


def scaled_dot_product_attention(q, k, v) -> tuple[Tensor, Tensor]:
    """softmax(q kᵀ / sqrt(d)) v over the trailing two axes.

    Returns (output, attention weights); both stay in the graph.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    d = q.data.shape[-1]
    scores = scale(matmul(q, transpose(k, tuple(range(k.data.ndim - 2)) + (-1, -2))), 1.0 / np.sqrt(d))
    weights = softmax(scores, axis=-1)
    return matmul(weights, v), weights


def cross_entropy(logits, targets, class_weights=None) -> Tensor:
    """Class-weighted cross entropy averaged over the batch.

    Per-sample losses are multiplied by the weight of their target class,
    then the plain mean over samples is taken.
    """
    logits = as_tensor(logits)
    if logits.data.ndim != 2:
        raise ValueError(f"cross_entropy expects (B,K) logits, got {logits.data.shape}")
    t = np.asarray(targets, dtype=np.int64)
    b, n_classes = logits.data.shape
    if t.shape != (b,):
        raise ValueError(f"targets must have shape ({b},), got {t.shape}")
    if np.any((t < 0) | (t >= n_classes)):
        raise ValueError("target outside the class range")
    if class_weights is None:
        wt = np.ones(b, dtype=np.float64)
    else:
        cw = np.asarray(class_weights, dtype=np.float64)
        if cw.shape != (n_classes,):
            raise ValueError(f"class_weights must have shape ({n_classes},), got {cw.shape}")
        wt = cw[t]
    z = logits.data.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1))
    nll = logsumexp - z[np.arange(b), t]
    out_data = np.asarray((wt * nll).mean())

    def bw(g):
        if logits.requires_grad:
            p = np.exp(z - logsumexp[:, None])
            p[np.arange(b), t] -= 1.0
            _accumulate(logits, (float(g) / b) * wt[:, None] * p)

    return _from_op(out_data.astype(logits.data.dtype), (logits,), bw)


def backward(loss: Tensor):
    """Accumulate gradients of a scalar loss into every requires_grad tensor."""
    if loss.data.ndim != 0:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    # Iterative DFS topological sort; graphs can be deep.
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward_fn is not None and node.grad is not None:
            node._backward_fn(node.grad)
