"""Define-by-run reverse-mode autodiff over numpy arrays.

Every op records vector-Jacobian closures that are themselves written in terms
of tape ops, so calling grad() with create_graph=True yields a differentiable
graph — second derivatives (the gradient-penalty double backprop) fall out of
the same machinery instead of hand-derived second-order rules.

ReLU's backward multiplies by a constant (non-differentiable) mask, which makes
its second derivative identically zero: the standard subgradient convention.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_grad_enabled = [True]


@contextmanager
def no_grad():
    _grad_enabled.append(False)
    try:
        yield
    finally:
        _grad_enabled.pop()


class Tensor:
    __slots__ = ("data", "parents", "vjps", "requires_grad")

    def __init__(self, data, parents=(), vjps=(), requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        if _grad_enabled[-1]:
            self.parents = parents
            self.vjps = vjps
            self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        else:
            self.parents = ()
            self.vjps = ()
            self.requires_grad = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __truediv__(self, other): return div(self, other)
    def __rtruediv__(self, other): return div(other, self)
    def __neg__(self): return neg(self)
    def __matmul__(self, other): return matmul(self, other)
    def __getitem__(self, idx): return getitem(self, idx)

    @property
    def T(self): return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def param(data) -> Tensor:
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)


def _unbroadcast(g: Tensor, shape: tuple) -> Tensor:
    """Sum g down to `shape` (the reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = len(g.shape) - len(shape)
    if extra > 0:
        g = sum_(g, axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    if axes:
        g = sum_(g, axis=axes, keepdims=True)
    if g.shape != shape:
        g = reshape(g, shape)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data + b.data, (a, b),
                  (lambda g: _unbroadcast(g, a.shape), lambda g: _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data - b.data, (a, b),
                  (lambda g: _unbroadcast(g, a.shape),
                   lambda g: _unbroadcast(neg(g), b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data * b.data, (a, b),
                  (lambda g: _unbroadcast(mul(g, b), a.shape),
                   lambda g: _unbroadcast(mul(g, a), b.shape)))


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data / b.data, (a, b),
                  (lambda g: _unbroadcast(div(g, b), a.shape),
                   lambda g: _unbroadcast(neg(div(mul(g, a), square(b))), b.shape)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(-a.data, (a,), (lambda g: neg(g),))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data @ b.data, (a, b),
                  (lambda g: matmul(g, transpose(b)),
                   lambda g: matmul(transpose(a), g)))


def transpose(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.data.T, (a,), (lambda g: transpose(g),))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return Tensor(a.data.reshape(shape), (a,), (lambda g: reshape(g, old),))


def broadcast_to(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return Tensor(np.broadcast_to(a.data, shape).copy(), (a,),
                  (lambda g: _unbroadcast(g, old),))


def sum_(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    old = a.shape

    def vjp(g):
        if axis is None:
            return broadcast_to(reshape(g, (1,) * len(old)), old)
        axes = axis if isinstance(axis, tuple) else (axis,)
        axes = tuple(ax % len(old) for ax in axes)
        if keepdims:
            gk = g
        else:
            kshape = tuple(1 if i in axes else s for i, s in enumerate(old))
            gk = reshape(g, kshape)
        return broadcast_to(gk, old)

    return Tensor(a.data.sum(axis=axis, keepdims=keepdims), (a,), (vjp,))


def mean_(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    n = a.size if axis is None else np.prod([a.shape[ax] for ax in
                                             (axis if isinstance(axis, tuple) else (axis,))])
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


def getitem(a, idx) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return Tensor(a.data[idx], (a,), (lambda g: _scatter(g, idx, old),))


def _scatter(g, idx, shape) -> Tensor:
    g = as_tensor(g)
    out = np.zeros(shape)
    np.add.at(out, idx, g.data)
    return Tensor(out, (g,), (lambda gg: getitem(gg, idx),))


def concat(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    def make_vjp(i):
        def vjp(g):
            sl = [slice(None)] * len(g.shape)
            sl[axis] = slice(int(offsets[i]), int(offsets[i + 1]))
            return getitem(g, tuple(sl))
        return vjp

    return Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                  tuple(tensors), tuple(make_vjp(i) for i in range(len(tensors))))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    y = Tensor(1.0 / (1.0 + np.exp(-np.clip(a.data, -500, 500))), (a,), ())
    y.vjps = (lambda g: mul(g, mul(y, sub(1.0, y))),)
    return y


def tanh_(a) -> Tensor:
    a = as_tensor(a)
    y = Tensor(np.tanh(a.data), (a,), ())
    y.vjps = (lambda g: mul(g, sub(1.0, square(y))),)
    return y


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = (a.data > 0).astype(np.float64)  # constant: second derivative is zero
    return Tensor(a.data * mask, (a,), (lambda g: mul(g, Tensor(mask)),))


def exp_(a) -> Tensor:
    a = as_tensor(a)
    y = Tensor(np.exp(a.data), (a,), ())
    y.vjps = (lambda g: mul(g, y),)
    return y


def log_(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(np.log(a.data), (a,), (lambda g: div(g, a),))


def sqrt_(a) -> Tensor:
    a = as_tensor(a)
    y = Tensor(np.sqrt(a.data), (a,), ())
    y.vjps = (lambda g: div(mul(g, 0.5), y),)
    return y


def square(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.data * a.data, (a,), (lambda g: mul(g, mul(a, 2.0)),))


def softplus(a) -> Tensor:
    a = as_tensor(a)
    d = a.data
    val = np.maximum(d, 0.0) + np.log1p(np.exp(-np.abs(d)))
    return Tensor(val, (a,), (lambda g: mul(g, sigmoid(a)),))


def _topo(root: Tensor) -> list[Tensor]:
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    return order


def grad(output: Tensor, sources: list[Tensor], create_graph: bool = False,
         seed=None) -> list[Tensor]:
    """Gradients of a scalar output with respect to sources.

    With create_graph=True the returned tensors stay on the tape and can be
    differentiated again; otherwise the backward pass runs grad-free.
    """
    if seed is None:
        if output.size != 1:
            raise ValueError("grad() needs a scalar output or an explicit seed")
        seed = np.ones_like(output.data)

    def run():
        grads: dict[int, Tensor] = {id(output): as_tensor(seed)}
        for node in reversed(_topo(output)):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            for parent, vjp in zip(node.parents, node.vjps):
                if not parent.requires_grad:
                    continue
                contrib = vjp(g)
                prev = grads.get(id(parent))
                grads[id(parent)] = contrib if prev is None else add(prev, contrib)
            # keep source gradients even though sources may appear mid-graph
            if any(node is s for s in sources):
                grads[id(node)] = g
        return [grads.get(id(s), Tensor(np.zeros(s.shape))) for s in sources]

    if create_graph:
        return run()
    with no_grad():
        return run()
