"""Ensemble discriminator: shared GRU/FC trunk with N independently
initialized scalar heads, plus the clipped-mean reward.

The heads are the columns of one final linear layer over the 128-feature trunk
output, so trunk gradients sum across heads naturally while each head scores
independently.  Raw scores are unbounded; rewards and switch gates clip each
head to [-1, 1] before averaging, losses see raw scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ModelError
from ..nn import GRU, Linear, Network, ReLU, RunningNormalizer
from ..nn.tensor import Tensor


@dataclass
class GanConfig:
    loss: str = "hinge"              # "hinge" or "bce"
    lambda_gp: float = 10.0
    learning_rate: float = 1e-5
    batch_size: int = 512            # windows per minibatch, both classes combined
    buffer_size: int = 8192          # windows per outer iteration, both classes
    n_discriminators: int = 32
    gru_hidden: int = 256
    fc_sizes: tuple[int, int] = (256, 128)

    def __post_init__(self):
        if self.loss not in ("hinge", "bce"):
            raise ModelError(f"unknown discriminator loss '{self.loss}'")
        if self.lambda_gp < 0:
            raise ModelError("lambda_gp must be >= 0")
        if self.n_discriminators < 1:
            raise ModelError("need at least one discriminator head")

    @property
    def update_steps(self) -> int:
        """Minibatch steps per outer iteration: cover the buffer once."""
        return -(-self.buffer_size // self.batch_size)


class DiscriminatorEnsemble:
    def __init__(self, block_dim: int, window: int, cfg: GanConfig,
                 rng: np.random.Generator, name: str = "disc"):
        self.block_dim = int(block_dim)
        self.window = int(window)
        self.n_heads = cfg.n_discriminators
        f0, f1 = cfg.fc_sizes
        layers = [
            GRU(block_dim, cfg.gru_hidden, "orthogonal", rng),
            Linear(cfg.gru_hidden, f0, "orthogonal", rng), ReLU(),
            Linear(f0, f1, "orthogonal", rng), ReLU(),
            Linear(f1, self.n_heads, "orthogonal", rng),
        ]
        self.net = Network(layers, name=name)
        self.normalizer = RunningNormalizer(self.window * self.block_dim)

    @property
    def input_dim(self) -> int:
        return self.window * self.block_dim

    def _prep(self, windows: np.ndarray) -> np.ndarray:
        w = np.asarray(windows, dtype=np.float64)
        squeeze = w.ndim == 1
        if squeeze:
            w = w[None]
        if w.shape[-1] != self.input_dim:
            raise ModelError(f"window dim {w.shape[-1]} != expected {self.input_dim}")
        normed = self.normalizer.transform(w)
        return normed.reshape(-1, self.window, self.block_dim), squeeze

    def scores(self, windows: np.ndarray) -> np.ndarray:
        """Raw per-head scores: (N,) for one window, (B, N) for a batch."""
        x, squeeze = self._prep(windows)
        out = self.net.forward(x)
        return out[0] if squeeze else out

    def scores_traced(self, x_normed: Tensor) -> Tensor:
        """Traced scores on an already-normalized (B, window, block) tensor."""
        return self.net.traced(x_normed)

    def reward(self, windows: np.ndarray) -> float | np.ndarray:
        """Clipped-mean ensemble score, bounded in [-1, 1] exactly."""
        s = self.scores(windows)
        return np.mean(np.clip(s, -1.0, 1.0), axis=-1)

    def head_distances(self) -> np.ndarray:
        """Pairwise L2 distances between head parameter vectors."""
        W = self.net.layers[-1].W.data
        b = self.net.layers[-1].b.data
        heads = np.concatenate([W, b[None, :]], axis=0).T  # (N, f1+1)
        d = np.linalg.norm(heads[:, None, :] - heads[None, :, :], axis=-1)
        return d

    def state_dict(self) -> dict:
        out = {f"net.{k}": v for k, v in self.net.state_dict().items()}
        for k, v in self.normalizer.state_dict().items():
            out[f"norm.{k}"] = v
        return out

    def load_state_dict(self, state: dict) -> None:
        self.net.load_state_dict({k[4:]: v for k, v in state.items() if k.startswith("net.")})
        self.normalizer.load_state_dict(
            {k[5:]: v for k, v in state.items() if k.startswith("norm.")})
