"""Reverse-mode automatic differentiation over dense float64 arrays.

Every op records a vector-Jacobian closure expressed in terms of the same
primitive ops, so gradients are themselves differentiable: calling
``grad(..., create_graph=True)`` on a first-order gradient yields a tape that
supports a second backward pass (needed for input-gradient penalties).
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "ShapeMismatch",
    "no_grad",
    "tensor",
    "zeros",
    "ones",
    "concat",
    "grad",
]


class ShapeMismatch(ValueError):
    """Raised when an op receives tensors with incompatible shapes."""

    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {' vs '.join(map(str, self.shapes))}")


_GRAD_ENABLED = True


class no_grad:
    """Context manager that disables tape recording (forward values only)."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    __slots__ = ("data", "requires_grad", "_parents", "_vjp", "_op")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._vjp = None
        self._op = "leaf"

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op}, grad={self.requires_grad})"

    # -- operators -----------------------------------------------------------

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _coerce(other))

    def __pow__(self, p):
        return power(self, float(p))

    def __getitem__(self, key):
        return take(self, key)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)

    @property
    def T(self):
        return transpose(self, None)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def zeros(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=requires_grad)


def ones(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=requires_grad)


def _coerce(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _node(data: np.ndarray, parents: Sequence[Tensor], vjp, op: str) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    else:
        out.requires_grad = False
        out._parents = ()
        out._vjp = None
    out._op = op
    return out


# -- broadcasting helper -----------------------------------------------------


def _unbroadcast(g: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Reduce a broadcast gradient back to ``shape`` (sum over expanded axes)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = tsum(g, axis=tuple(range(extra)), keepdims=False)
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = tsum(g, axis=axes, keepdims=True)
    if g.shape != shape:
        g = reshape(g, shape)
    return g


def _check_broadcast(op: str, a: Tensor, b: Tensor):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatch(op, a.shape, b.shape) from None


# -- arithmetic primitives ----------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("add", a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(a.data + b.data, (a, b), vjp, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("sub", a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(neg(g), b.shape)

    return _node(a.data - b.data, (a, b), vjp, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("mul", a, b)

    def vjp(g):
        return _unbroadcast(mul(g, b), a.shape), _unbroadcast(mul(g, a), b.shape)

    return _node(a.data * b.data, (a, b), vjp, "mul")


def div(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("div", a, b)

    def vjp(g):
        da = div(g, b)
        db = neg(div(mul(g, a), mul(b, b)))
        return _unbroadcast(da, a.shape), _unbroadcast(db, b.shape)

    return _node(a.data / b.data, (a, b), vjp, "div")


def neg(a: Tensor) -> Tensor:
    def vjp(g):
        return (neg(g),)

    return _node(-a.data, (a,), vjp, "neg")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    if ad.ndim == 0 or bd.ndim == 0 or ad.shape[-1] != bd.shape[0] or bd.ndim > 2 or ad.ndim > 2:
        raise ShapeMismatch("matmul", a.shape, b.shape)

    def vjp(g):
        if ad.ndim == 1 and bd.ndim == 1:  # dot -> scalar
            return mul(g, b), mul(g, a)
        if ad.ndim == 1:  # (n,) @ (n,m) -> (m,)
            return matmul(b, g), outer(a, g)
        if bd.ndim == 1:  # (n,m) @ (m,) -> (n,)
            return outer(g, b), matmul(transpose(a, None), g)
        return matmul(g, transpose(b, None)), matmul(transpose(a, None), g)

    return _node(ad @ bd, (a, b), vjp, "matmul")


def outer(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 1 or b.ndim != 1:
        raise ShapeMismatch("outer", a.shape, b.shape)

    def vjp(g):
        return matmul(g, b), matmul(transpose(g, None), a)

    return _node(np.outer(a.data, b.data), (a, b), vjp, "outer")


def power(a: Tensor, p: float) -> Tensor:
    def vjp(g):
        return (mul(g, mul(Tensor(np.float64(p)), power(a, p - 1.0))),)

    return _node(a.data**p, (a,), vjp, f"pow{p}")


def square(a: Tensor) -> Tensor:
    def vjp(g):
        return (mul(g, mul(Tensor(np.float64(2.0)), a)),)

    return _node(a.data * a.data, (a,), vjp, "square")


def sqrt(a: Tensor) -> Tensor:
    out = _node(np.sqrt(a.data), (a,), None, "sqrt")
    if out.requires_grad:
        out._vjp = lambda g: (div(g, mul(Tensor(np.float64(2.0)), out)),)
    return out


def exp(a: Tensor) -> Tensor:
    out = _node(np.exp(a.data), (a,), None, "exp")
    if out.requires_grad:
        out._vjp = lambda g: (mul(g, out),)
    return out


def log(a: Tensor) -> Tensor:
    def vjp(g):
        return (div(g, a),)

    return _node(np.log(a.data), (a,), vjp, "log")


def tanh(a: Tensor) -> Tensor:
    out = _node(np.tanh(a.data), (a,), None, "tanh")
    if out.requires_grad:
        out._vjp = lambda g: (mul(g, sub(Tensor(np.float64(1.0)), square(out))),)
    return out


def sigmoid(a: Tensor) -> Tensor:
    out = _node(1.0 / (1.0 + np.exp(-a.data)), (a,), None, "sigmoid")
    if out.requires_grad:
        out._vjp = lambda g: (mul(g, mul(out, sub(Tensor(np.float64(1.0)), out))),)
    return out


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0.0

    def vjp(g):
        return (mul(g, Tensor(mask.astype(np.float64))),)

    return _node(np.where(mask, a.data, 0.0), (a,), vjp, "relu")


# -- reductions and shaping ----------------------------------------------------


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    in_shape = a.shape

    def vjp(g):
        gd = g
        if axis is not None and not keepdims:
            ax = axis if isinstance(axis, tuple) else (axis,)
            ax = tuple(i % len(in_shape) for i in ax)
            kshape = tuple(1 if i in ax else n for i, n in enumerate(in_shape))
            gd = reshape(gd, kshape)
        elif axis is None and not keepdims:
            gd = reshape(gd, (1,) * len(in_shape)) if in_shape else gd
        return (broadcast_to(gd, in_shape),)

    return _node(a.data.sum(axis=axis, keepdims=keepdims), (a,), vjp, "sum")


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = a.data.size if axis is None else np.prod(
        [a.shape[i % a.ndim] for i in (axis if isinstance(axis, tuple) else (axis,))]
    )
    return mul(tsum(a, axis=axis, keepdims=keepdims), Tensor(np.float64(1.0 / n)))


def broadcast_to(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)

    def vjp(g):
        return (_unbroadcast(g, a.shape),)

    return _node(np.broadcast_to(a.data, shape).copy(), (a,), vjp, "broadcast")


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    in_shape = a.shape

    def vjp(g):
        return (reshape(g, in_shape),)

    return _node(a.data.reshape(shape), (a,), vjp, "reshape")


def transpose(a: Tensor, axes) -> Tensor:
    if axes is None:
        inv = None
    else:
        axes = tuple(axes)
        inv = tuple(np.argsort(axes))

    def vjp(g):
        return (transpose(g, inv),)

    return _node(np.transpose(a.data, axes), (a,), vjp, "transpose")


def take(a: Tensor, key) -> Tensor:
    """Basic (slice/int/tuple) indexing; gradient scatters back into zeros."""
    in_shape = a.shape

    def vjp(g):
        return (embed(g, key, in_shape),)

    return _node(a.data[key], (a,), vjp, "take")


def embed(g: Tensor, key, shape) -> Tensor:
    """Place ``g`` into a zero tensor of ``shape`` at ``key`` (adjoint of take)."""

    def vjp(gg):
        return (take(gg, key),)

    buf = np.zeros(shape)
    buf[key] = g.data
    return _node(buf, (g,), vjp, "embed")


def concat(parts: Iterable[Tensor], axis: int = -1) -> Tensor:
    parts = [(_coerce(p)) for p in parts]
    ax = axis % parts[0].ndim
    sizes = [p.shape[ax] for p in parts]
    offs = np.concatenate([[0], np.cumsum(sizes)])

    def vjp(g):
        outs = []
        for p, o, s in zip(parts, offs[:-1], sizes):
            key = tuple(slice(None) if i != ax else slice(int(o), int(o + s)) for i in range(p.ndim))
            outs.append(take(g, key))
        return tuple(outs)

    return _node(np.concatenate([p.data for p in parts], axis=ax), parts, vjp, "concat")


# -- gradient driver -----------------------------------------------------------


def _topo(output: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(output, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def grad(
    output: Tensor,
    wrt: Sequence[Tensor],
    cotangent: Tensor | None = None,
    create_graph: bool = False,
) -> list[Tensor]:
    """Gradients of ``output`` w.r.t. each tensor in ``wrt``.

    Unused leaves get zero gradients. With ``create_graph`` the returned
    tensors carry their own tape, enabling differentiation of the gradient.
    """
    if cotangent is None:
        if output.size != 1:
            raise ShapeMismatch("grad(seed)", output.shape, (1,))
        cotangent = Tensor(np.ones_like(output.data))

    ctx = no_grad() if not create_graph else _NullCtx()
    with ctx:
        cot: dict[int, Tensor] = {id(output): cotangent}
        for node in reversed(_topo(output)):
            g = cot.pop(id(node), None)
            if g is None or node._vjp is None:
                if g is not None:
                    cot[id(node)] = g
                continue
            cot[id(node)] = g  # keep for wrt lookup
            parent_grads = node._vjp(g)
            for p, pg in zip(node._parents, parent_grads):
                if pg is None or not p.requires_grad:
                    continue
                prev = cot.get(id(p))
                cot[id(p)] = pg if prev is None else add(prev, pg)
        out = []
        for w in wrt:
            g = cot.get(id(w))
            out.append(g if g is not None else Tensor(np.zeros(w.shape)))
    if not create_graph:
        out = [Tensor(g.data) for g in out]
    return out


class _NullCtx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


LOG_2PI = math.log(2.0 * math.pi)
