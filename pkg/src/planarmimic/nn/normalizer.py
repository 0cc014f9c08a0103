"""Streaming feature normalizer with an associative merge.

Running mean/variance use the Chan et al. parallel update, so merging partial
normalizers built by independent workers equals sequential updates to 1e-10,
which is what makes multi-worker training reproducible.
"""

from __future__ import annotations

import numpy as np

STD_FLOOR = 1e-6


class RunningNormalizer:
    def __init__(self, dim: int):
        self.dim = int(dim)
        self.count = 0.0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def partial_fit(self, batch: np.ndarray) -> "RunningNormalizer":
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim == 1:
            batch = batch[None]
        n = batch.shape[0]
        if n == 0:
            return self
        b_mean = batch.mean(axis=0)
        b_m2 = ((batch - b_mean) ** 2).sum(axis=0)
        self._merge_stats(float(n), b_mean, b_m2)
        return self

    def merge(self, other: "RunningNormalizer") -> "RunningNormalizer":
        self._merge_stats(other.count, other.mean, other.m2)
        return self

    def _merge_stats(self, n: float, mean: np.ndarray, m2: np.ndarray) -> None:
        if n == 0.0:
            return
        total = self.count + n
        delta = mean - self.mean
        self.mean = self.mean + delta * (n / total)
        self.m2 = self.m2 + m2 + delta * delta * (self.count * n / total)
        self.count = total

    @property
    def var(self) -> np.ndarray:
        if self.count < 1.0:
            return np.ones(self.dim)
        return self.m2 / self.count

    @property
    def std(self) -> np.ndarray:
        return np.maximum(np.sqrt(self.var), STD_FLOOR)

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.count < 1.0:
            return x.copy()
        return (x - self.mean) / self.std

    def copy(self) -> "RunningNormalizer":
        out = RunningNormalizer(self.dim)
        out.count = self.count
        out.mean = self.mean.copy()
        out.m2 = self.m2.copy()
        return out

    def state_dict(self) -> dict:
        return {"count": np.array([self.count]), "mean": self.mean.copy(), "m2": self.m2.copy()}

    def load_state_dict(self, state: dict) -> None:
        self.count = float(np.asarray(state["count"]).reshape(-1)[0])
        self.mean = np.asarray(state["mean"], dtype=np.float64).copy()
        self.m2 = np.asarray(state["m2"], dtype=np.float64).copy()
        self.dim = self.mean.shape[0]
