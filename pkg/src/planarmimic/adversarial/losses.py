"""Discriminator objectives: hinge / BCE per head, gradient penalty, and the
ensemble update step.

Hinge (per head i, batch means):
    L_i = E[max(0, 1 + D_i(agent))] + E[max(0, 1 - D_i(reference))]
so margin-satisfied samples (agent <= -1, reference >= +1) contribute exactly
zero gradient.  The gradient penalty interpolates each (agent, reference) pair
with its own uniform alpha and pushes the per-head input-gradient norm to 1.
The ensemble loss averages heads: L = (1/N) sum_i (L_i + lambda_gp * GP_i).
"""

from __future__ import annotations

import numpy as np

from ..errors import ModelError
from ..nn import Adam
from ..nn import tensor as T
from ..nn.tensor import Tensor, grad
from .ensemble import DiscriminatorEnsemble, GanConfig


def hinge_loss(agent_scores, ref_scores):
    """Per-head hinge losses; works on tape tensors (traced) or numpy arrays."""
    if isinstance(agent_scores, Tensor):
        a = T.mean_(T.relu(T.add(1.0, agent_scores)), axis=0)
        r = T.mean_(T.relu(T.sub(1.0, ref_scores)), axis=0)
        return T.add(a, r)
    a = np.mean(np.maximum(0.0, 1.0 + np.asarray(agent_scores)), axis=0)
    r = np.mean(np.maximum(0.0, 1.0 - np.asarray(ref_scores)), axis=0)
    return a + r


def bce_loss(agent_scores, ref_scores):
    """Per-head binary cross entropy with reference labeled 1, agent 0.

    Scores are logits through a logistic squash; computed in softplus form:
    E[softplus(agent)] + E[softplus(-reference)].
    """
    if isinstance(agent_scores, Tensor):
        a = T.mean_(T.softplus(agent_scores), axis=0)
        r = T.mean_(T.softplus(T.neg(ref_scores)), axis=0)
        return T.add(a, r)
    def sp(x):
        return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    return (np.mean(sp(np.asarray(agent_scores)), axis=0)
            + np.mean(sp(-np.asarray(ref_scores)), axis=0))


def interpolate_windows(agent: np.ndarray, ref: np.ndarray,
                        rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair alpha in U[0,1): x_hat = alpha*ref + (1-alpha)*agent."""
    if agent.shape[0] != ref.shape[0]:
        raise ModelError(f"gradient penalty needs equal batch sizes, "
                         f"got {agent.shape[0]} and {ref.shape[0]}")
    alpha = rng.uniform(0.0, 1.0, (agent.shape[0], 1))
    return alpha * ref + (1.0 - alpha) * agent, alpha


def _per_head_penalties(ens: DiscriminatorEnsemble, x_hat_normed: np.ndarray,
                        create_graph: bool) -> list[Tensor]:
    """(||grad_x D_i(x_hat)|| - 1)^2 batch means, one tape scalar per head."""
    B = x_hat_normed.shape[0]
    xt = Tensor(x_hat_normed.reshape(B, ens.window, ens.block_dim), requires_grad=True)
    scores = ens.scores_traced(xt)
    penalties = []
    for i in range(ens.n_heads):
        seed = np.zeros_like(scores.data)
        seed[:, i] = 1.0
        gx = grad(scores, [xt], create_graph=create_graph, seed=seed)[0]
        flat = T.reshape(gx, (B, -1))
        norms = T.sqrt_(T.add(T.sum_(T.square(flat), axis=1), 1e-12))
        penalties.append(T.mean_(T.square(T.sub(norms, 1.0))))
    return penalties


def gradient_penalty(ens: DiscriminatorEnsemble, agent_windows: np.ndarray,
                     ref_windows: np.ndarray, rng: np.random.Generator
                     ) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Per-head penalties and the parameter gradients of their head-average."""
    xa = ens.normalizer.transform(np.asarray(agent_windows, dtype=np.float64))
    xr = ens.normalizer.transform(np.asarray(ref_windows, dtype=np.float64))
    x_hat, _ = interpolate_windows(xa, xr, rng)
    pens = _per_head_penalties(ens, x_hat, create_graph=True)
    total = T.mul(pens[0], 1.0 / ens.n_heads)
    for p in pens[1:]:
        total = T.add(total, T.mul(p, 1.0 / ens.n_heads))
    names = list(ens.net.params().keys())
    gs = grad(total, [ens.net.params()[n] for n in names])
    return (np.array([float(p.data) for p in pens]),
            {n: g.data for n, g in zip(names, gs)})


def ensemble_loss(ens: DiscriminatorEnsemble, agent_windows: np.ndarray,
                  ref_windows: np.ndarray, cfg: GanConfig, rng: np.random.Generator,
                  optimizer: Adam | None = None) -> dict:
    """One optimizer step on L = (1/N) sum_i (L_i + lambda_gp GP_i).

    Returns metrics; when optimizer is None the loss is evaluated without
    stepping (gradients still computed).
    """
    xa = ens.normalizer.transform(np.asarray(agent_windows, dtype=np.float64))
    xr = ens.normalizer.transform(np.asarray(ref_windows, dtype=np.float64))
    B = xa.shape[0]
    sa = ens.scores_traced(Tensor(xa.reshape(B, ens.window, ens.block_dim)))
    sr = ens.scores_traced(Tensor(xr.reshape(xr.shape[0], ens.window, ens.block_dim)))
    per_head = hinge_loss(sa, sr) if cfg.loss == "hinge" else bce_loss(sa, sr)
    loss = T.mean_(per_head)

    pen_values = np.zeros(ens.n_heads)
    if cfg.lambda_gp > 0.0:
        x_hat, _ = interpolate_windows(xa, xr, rng)
        pens = _per_head_penalties(ens, x_hat, create_graph=True)
        pen_values = np.array([float(p.data) for p in pens])
        gp_total = pens[0]
        for p in pens[1:]:
            gp_total = T.add(gp_total, p)
        loss = T.add(loss, T.mul(gp_total, cfg.lambda_gp / ens.n_heads))

    names = list(ens.net.params().keys())
    gs = grad(loss, [ens.net.params()[n] for n in names])
    grads = {n: g.data for n, g in zip(names, gs)}
    if optimizer is not None:
        optimizer.step(grads)
    gnorm = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    return {
        "loss": float(loss.data),
        "per_head_loss": np.array(per_head.data, dtype=np.float64),
        "penalty_mean": float(pen_values.mean()),
        "grad_norm": gnorm,
        "agent_score_mean": float(sa.data.mean()),
        "ref_score_mean": float(sr.data.mean()),
    }
