"""Tape-style reverse-mode differentiation over dense numpy arrays.

Every operation on a :class:`Tensor` that requires gradients records its
parents and a closure mapping the output gradient to parent gradients.
:func:`backward` walks the recorded graph once in reverse topological
order, accumulates gradients into leaf tensors and then releases the
graph. Calling :func:`backward` a second time on the same root raises.

Gradient accumulation: leaf ``.grad`` arrays are summed across backward
passes until cleared with :meth:`Tensor.zero_grad` (or
``ParameterSet.zero_grad``).
"""

import contextlib

import numpy as np

__all__ = [
    "Tensor",
    "ShapeError",
    "as_tensor",
    "checked_mode",
    "is_checked",
    "no_grad",
    "backward",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "power",
    "square",
    "matmul",
    "sum",
    "mean",
    "reshape",
    "transpose",
    "swapaxes",
    "take",
    "concat",
    "exp",
    "log",
    "tanh",
    "relu",
    "gelu",
    "softmax_lastdim",
    "layer_norm",
    "dropout",
]

_CHECKED = False
_GRAD_ENABLED = True


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


@contextlib.contextmanager
def checked_mode(enabled=True):
    """Raise ``FloatingPointError`` whenever an op produces NaN or Inf."""
    global _CHECKED
    previous = _CHECKED
    _CHECKED = enabled
    try:
        yield
    finally:
        _CHECKED = previous


def is_checked():
    return _CHECKED


@contextlib.contextmanager
def no_grad():
    """Evaluate ops without recording a tape (outputs never require grad)."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


class Tensor:
    """A dense array node in a differentiable computation graph.

    Parameters
    ----------
    data : array_like
        Forward value. Converted to float64 unless already float32.
    requires_grad : bool, default=False
        Leaf tensors with ``requires_grad=True`` accumulate gradients in
        ``.grad`` during :func:`backward`.
    """

    __array_priority__ = 1000
    __slots__ = ("data", "grad", "requires_grad", "op", "_parents",
                 "_backward", "_released", "_leaf")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data)
        if dtype is None:
            dtype = np.float32 if arr.dtype == np.float32 else np.float64
        self.data = np.asarray(arr, dtype=dtype, order="C")
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.op = "leaf"
        self._parents = ()
        self._backward = None
        self._released = False
        self._leaf = True

    # -- basic properties -------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        return self.data.item()

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data, requires_grad=False)

    def __repr__(self):
        return (f"Tensor(shape={self.shape}, op={self.op!r}, "
                f"requires_grad={self.requires_grad})")

    # -- operator sugar ---------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def sum(self, axis=None, keepdims=False):
        return sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def swapaxes(self, a, b):
        return swapaxes(self, a, b)


def as_tensor(value, dtype=None):
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


def _check_finite(arr, op):
    if _CHECKED and not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values produced by {op!r}")


def _make(data, parents, backward_fn, op):
    """Wrap ``data`` as the output of ``op``; record the tape if needed."""
    _check_finite(data, op)
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.op = op
    out._released = False
    out._leaf = False
    for p in parents:
        if p._released:
            raise RuntimeError(
                f"{op!r}: input belongs to a graph that was already "
                "released by backward()")
    out.requires_grad = _GRAD_ENABLED and any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward_fn
    else:
        out._parents = ()
        out._backward = None
    return out


def _pair(a, b):
    """Wrap raw operands, giving constants the dtype of the tensor side."""
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return a, Tensor(b, dtype=a.dtype)
    if isinstance(b, Tensor) and not isinstance(a, Tensor):
        return Tensor(a, dtype=b.dtype), b
    return as_tensor(a), as_tensor(b)


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape)
                 if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _topological_order(root):
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(root, params=None):
    """Back-propagate from a scalar ``root``.

    Parameters
    ----------
    root : Tensor
        Scalar output of the graph.
    params : ParameterSet or mapping of name to Tensor, optional
        If given, returns ``{name: gradient}`` for every entry; parameters
        the root does not depend on get an all-zero gradient.

    Returns
    -------
    dict or None
    """
    if root.data.size != 1:
        raise ValueError(
            f"backward() needs a scalar root, got shape {root.shape}")
    if root._released:
        raise RuntimeError(
            "backward() already ran on this graph; rebuild the forward "
            "pass (gradients on leaves accumulate until zero_grad())")
    if root.requires_grad:
        pending = {id(root): np.ones_like(root.data)}
        for node in reversed(_topological_order(root)):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._leaf:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = pg if key not in pending else pending[key] + pg
            node._parents = ()
            node._backward = None
            node._released = True
    root._released = True
    if params is None:
        return None
    items = params.items() if hasattr(params, "items") else params
    return {name: (p.grad.copy() if p.grad is not None
                   else np.zeros_like(p.data))
            for name, p in items}


# -- elementwise arithmetic ---------------------------------------------------

def add(a, b):
    a, b = _pair(a, b)

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), bw, "add")


def sub(a, b):
    a, b = _pair(a, b)

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(a.data - b.data, (a, b), bw, "sub")


def mul(a, b):
    a, b = _pair(a, b)

    def bw(g):
        ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return _make(a.data * b.data, (a, b), bw, "mul")


def div(a, b):
    a, b = _pair(a, b)
    out = a.data / b.data

    def bw(g):
        ga = _unbroadcast(g / b.data, a.shape) if a.requires_grad else None
        gb = (_unbroadcast(-g * out / b.data, b.shape)
              if b.requires_grad else None)
        return ga, gb

    return _make(out, (a, b), bw, "div")


def neg(a):
    a = as_tensor(a)
    return _make(-a.data, (a,), lambda g: (-g,), "neg")


def power(a, exponent):
    """Elementwise ``a ** exponent`` for a constant real exponent."""
    a = as_tensor(a)
    p = float(exponent)

    def bw(g):
        return (g * p * a.data ** (p - 1.0),)

    return _make(a.data ** p, (a,), bw, "pow")


def square(a):
    a = as_tensor(a)
    return _make(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,),
                 "square")


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,), "exp")


def log(a):
    a = as_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def relu(a):
    a = as_tensor(a)
    on = a.data > 0
    return _make(np.where(on, a.data, 0.0).astype(a.dtype), (a,),
                 lambda g: (g * on,), "relu")


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(a):
    """GELU, tanh approximation."""
    a = as_tensor(a)
    x = a.data
    x2 = x * x
    t = np.tanh(_GELU_C * x * (1.0 + 0.044715 * x2))
    half = 0.5 * (1.0 + t)
    out = x * half

    def bw(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * x2)
        return (g * (half + 0.5 * x * (1.0 - t * t) * dinner),)

    return _make(out, (a,), bw, "gelu")


# -- linear algebra and shape -------------------------------------------------

def matmul(a, b):
    """Matrix product over the last two axes.

    ``b`` may be 2-D (shared weight applied to every leading index of
    ``a``) or carry the same leading axes as ``a``.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(
            f"matmul needs at least 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(
            f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    k, n = b.shape[-2], b.shape[-1]
    if b.ndim == 2:
        a2 = a.data.reshape(-1, k)
        out = (a2 @ b.data).reshape(a.shape[:-1] + (n,))

        def bw(g):
            g2 = g.reshape(-1, n)
            ga = (g2 @ b.data.T).reshape(a.shape) if a.requires_grad else None
            gb = a2.T @ g2 if b.requires_grad else None
            return ga, gb

        return _make(out, (a, b), bw, "matmul")

    if a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(
            f"matmul batch axes differ: {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def bw_batched(g):
        ga = g @ np.swapaxes(b.data, -1, -2) if a.requires_grad else None
        gb = np.swapaxes(a.data, -1, -2) @ g if b.requires_grad else None
        return ga, gb

    return _make(out, (a, b), bw_batched, "matmul")


def _normalize_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(ax % ndim for ax in axis))


def sum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def bw(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(np.asarray(out), (a,), bw, "sum")


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    out = a.data.sum(axis=axes, keepdims=keepdims) / count

    def bw(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return _make(np.asarray(out), (a,), bw, "mean")


def reshape(a, shape):
    a = as_tensor(a)
    return _make(a.data.reshape(shape), (a,),
                 lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes=None):
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return _make(np.ascontiguousarray(a.data.transpose(axes)), (a,),
                 lambda g: (g.transpose(inverse),), "transpose")


def swapaxes(a, axis1, axis2):
    a = as_tensor(a)
    return _make(np.ascontiguousarray(np.swapaxes(a.data, axis1, axis2)),
                 (a,), lambda g: (np.swapaxes(g, axis1, axis2),), "swapaxes")


def take(a, indices, axis=-1):
    """Select ``indices`` along ``axis`` (gradient scatters back)."""
    a = as_tensor(a)
    idx = np.asarray(indices, dtype=np.intp)
    ax = axis % a.ndim
    out = np.take(a.data, idx, axis=ax)

    def bw(g):
        full = np.zeros_like(a.data)
        moved = np.moveaxis(full, ax, 0)
        np.add.at(moved, idx, np.moveaxis(g, ax, 0))
        return (full,)

    return _make(out, (a,), bw, "take")


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    ax = axis % tensors[0].ndim
    out = np.concatenate([t.data for t in tensors], axis=ax)
    bounds = np.cumsum([t.shape[ax] for t in tensors])[:-1]

    def bw(g):
        return tuple(np.split(g, bounds, axis=ax))

    return _make(out, tuple(tensors), bw, "concat")


# -- normalisation and attention pieces ---------------------------------------

def softmax_lastdim(x, mask=None):
    """Softmax over the last axis with optional additive mask.

    ``mask`` holds 0 for visible positions and ``-inf`` for hidden ones and
    must broadcast against ``x``. Hidden positions get exactly zero weight.
    """
    x = as_tensor(x)
    if x.shape[-1] < 1:
        raise ShapeError("softmax over an empty last axis")
    if mask is not None and np.any(np.all(np.isneginf(mask), axis=-1)):
        raise ValueError("softmax over a fully masked slice is undefined")
    z = x.data if mask is None else x.data + mask
    top = z.max(axis=-1, keepdims=True)
    out = z - top
    np.exp(out, out=out)
    out /= out.sum(axis=-1, keepdims=True)

    def bw(g):
        gx = g * out
        gx -= out * gx.sum(axis=-1, keepdims=True)
        return (gx,)

    return _make(out, (x,), bw, "softmax")


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalise the last axis to zero mean / unit variance, then scale."""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    width = x.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise ShapeError(
            f"layer_norm gain/bias must have shape ({width},), got "
            f"{gain.shape} and {bias.shape}")
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gain.data + bias.data

    def bw(g):
        lead = tuple(range(x.ndim - 1))
        ggain = (g * xhat).sum(axis=lead) if gain.requires_grad else None
        gbias = g.sum(axis=lead) if bias.requires_grad else None
        gx = None
        if x.requires_grad:
            dxhat = g * gain.data
            gx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return gx, ggain, gbias

    return _make(out, (x, gain, bias), bw, "layer_norm")


def dropout(x, rate, rng, training=True):
    """Inverted dropout; identity when not training or ``rate == 0``."""
    x = as_tensor(x)
    if not training or rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return mul(x, Tensor(keep, dtype=x.dtype))
