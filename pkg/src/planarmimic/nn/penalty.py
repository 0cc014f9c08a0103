"""Differentiating an input-gradient norm with respect to parameters.

This is the double-backprop primitive behind the discriminator gradient
penalty: P(theta) = mean_b (|| d/dx f_theta(x_b) ||_2 - 1)^2.  The exact mode
differentiates the backward pass itself (the tape supports higher-order
gradients); the finite-difference mode re-evaluates P under parameter
perturbations and exists as an independent cross-check.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .layers import Network
from .tensor import Tensor, grad


def _selected_sum(net: Network, x: Tensor, head) -> Tensor:
    out = net.traced(x)
    if out.data.ndim == 2 and out.data.shape[1] > 1:
        if head is None:
            raise ValueError("multi-output network needs a head selector")
        out = out[:, head]
    return T.sum_(out)


def input_gradient(net: Network, x: np.ndarray, head: int | None = None,
                   create_graph: bool = False) -> Tensor:
    """d(sum_b f(x_b)) / dx, shape like x (batched rows are independent)."""
    xt = Tensor(np.asarray(x, dtype=np.float64), requires_grad=True)
    s = _selected_sum(net, xt, head)
    return grad(s, [xt], create_graph=create_graph)[0]


def penalty_value(net: Network, x: np.ndarray, head: int | None = None) -> float:
    g = input_gradient(net, x, head).data
    norms = np.sqrt((g.reshape(g.shape[0], -1) ** 2).sum(axis=1))
    return float(np.mean((norms - 1.0) ** 2))


def grad_norm_penalty_backward(net: Network, x: np.ndarray, head: int | None = None,
                               mode: str = "exact", fd_eps: float = 1e-6
                               ) -> tuple[float, dict[str, np.ndarray]]:
    """Penalty value and its parameter gradients.

    mode="exact" uses double backprop; mode="fd" central-differences every
    parameter element (slow; meant for verification on small networks).
    """
    if mode == "fd":
        grads = {}
        for name, p in net.params().items():
            g = np.zeros_like(p.data)
            for idx in np.ndindex(p.data.shape):
                keep = p.data[idx]
                p.data[idx] = keep + fd_eps
                hi = penalty_value(net, x, head)
                p.data[idx] = keep - fd_eps
                lo = penalty_value(net, x, head)
                p.data[idx] = keep
                g[idx] = (hi - lo) / (2.0 * fd_eps)
            grads[name] = g
        return penalty_value(net, x, head), grads

    if mode != "exact":
        raise ValueError(f"unknown gradient-penalty mode '{mode}'")
    xt = Tensor(np.asarray(x, dtype=np.float64), requires_grad=True)
    s = _selected_sum(net, xt, head)
    gx = grad(s, [xt], create_graph=True)[0]
    B = gx.data.shape[0]
    flat = T.reshape(gx, (B, -1))
    norms = T.sqrt_(T.sum_(T.square(flat), axis=1))
    penalty = T.mean_(T.square(T.sub(norms, 1.0)))
    names = list(net.params().keys())
    tensors = [net.params()[n] for n in names]
    gs = grad(penalty, tensors)
    return float(penalty.data), {n: g.data for n, g in zip(names, gs)}
