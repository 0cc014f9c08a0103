"""Network layers: fully connected, ReLU, and a GRU for short windows.

Each layer exposes a traced path (tape Tensors, for training) and a fast path
(plain numpy, for rollouts); both compute identical values.  The GRU is the
three-gate formulation with sigmoid gates and tanh candidate:

    r = sig(x Wr + h Ur + br)
    z = sig(x Wz + h Uz + bz)
    c = tanh(x Wc + (r * h) Uc + bc)
    h' = (1 - z) * h + z * c
"""

from __future__ import annotations

import numpy as np

from ..errors import ModelError
from . import tensor as T
from .init import init_orthogonal, init_truncated_normal
from .tensor import Tensor


def _sig(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


class Linear:
    def __init__(self, n_in: int, n_out: int, init: str, rng: np.random.Generator,
                 std: float = 0.05, gain: float = 1.0):
        if init == "orthogonal":
            w = init_orthogonal((n_in, n_out), gain, rng)
        elif init == "truncated_normal":
            w = init_truncated_normal((n_in, n_out), std, rng)
        else:
            raise ModelError(f"unknown initializer '{init}'")
        self.W = T.param(w)
        self.b = T.param(np.zeros(n_out))

    def params(self):
        return {"W": self.W, "b": self.b}

    def fast(self, x: np.ndarray) -> np.ndarray:
        return x @ self.W.data + self.b.data

    def traced(self, x: Tensor) -> Tensor:
        return T.add(T.matmul(x, self.W), self.b)


class ReLU:
    def params(self):
        return {}

    def fast(self, x):
        return np.maximum(x, 0.0)

    def traced(self, x):
        return T.relu(x)


class GRU:
    def __init__(self, n_in: int, hidden: int, init: str, rng: np.random.Generator,
                 std: float = 0.05):
        def make(shape):
            if init == "orthogonal":
                return init_orthogonal(shape, 1.0, rng)
            return init_truncated_normal(shape, std, rng)

        self.hidden = hidden
        self.Wr, self.Wz, self.Wc = (T.param(make((n_in, hidden))) for _ in range(3))
        self.Ur, self.Uz, self.Uc = (T.param(make((hidden, hidden))) for _ in range(3))
        self.br, self.bz, self.bc = (T.param(np.zeros(hidden)) for _ in range(3))

    def params(self):
        return {"Wr": self.Wr, "Wz": self.Wz, "Wc": self.Wc,
                "Ur": self.Ur, "Uz": self.Uz, "Uc": self.Uc,
                "br": self.br, "bz": self.bz, "bc": self.bc}

    def fast(self, x: np.ndarray) -> np.ndarray:
        """x: (B, T, D) -> final hidden (B, H); zero initial hidden state."""
        B = x.shape[0]
        h = np.zeros((B, self.hidden))
        for t in range(x.shape[1]):
            xt = x[:, t, :]
            r = _sig(xt @ self.Wr.data + h @ self.Ur.data + self.br.data)
            z = _sig(xt @ self.Wz.data + h @ self.Uz.data + self.bz.data)
            c = np.tanh(xt @ self.Wc.data + (r * h) @ self.Uc.data + self.bc.data)
            h = (1.0 - z) * h + z * c
        return h

    def traced(self, x: Tensor) -> Tensor:
        B, steps = x.shape[0], x.shape[1]
        h = Tensor(np.zeros((B, self.hidden)))
        for t in range(steps):
            xt = x[:, t, :]
            r = T.sigmoid(T.add(T.add(T.matmul(xt, self.Wr), T.matmul(h, self.Ur)), self.br))
            z = T.sigmoid(T.add(T.add(T.matmul(xt, self.Wz), T.matmul(h, self.Uz)), self.bz))
            c = T.tanh_(T.add(T.add(T.matmul(xt, self.Wc), T.matmul(T.mul(r, h), self.Uc)), self.bc))
            h = T.add(T.mul(T.sub(1.0, z), h), T.mul(z, c))
        return h


class Network:
    """Ordered layers with a unique named-parameter map.

    Inputs are (B, T, D) windows when the first layer is a GRU, else (B, D).
    """

    def __init__(self, layers: list, name: str = "net"):
        self.name = name
        self.layers = layers
        self._params: dict[str, Tensor] = {}
        for i, layer in enumerate(layers):
            for pname, p in layer.params().items():
                key = f"{type(layer).__name__.lower()}{i}.{pname}"
                if key in self._params:
                    raise ModelError(f"duplicate parameter name '{key}'")
                self._params[key] = p

    def params(self) -> dict[str, Tensor]:
        return self._params

    def param_count(self) -> int:
        return int(sum(p.size for p in self._params.values()))

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Fast numpy path; accepts unbatched input and squeezes it back."""
        x = np.asarray(x, dtype=np.float64)
        unbatched = (x.ndim == 2 and isinstance(self.layers[0], GRU)) or \
                    (x.ndim == 1 and not isinstance(self.layers[0], GRU))
        if unbatched:
            x = x[None]
        self._check_input(x)
        for layer in self.layers:
            x = layer.fast(x)
        return x[0] if unbatched else x

    def traced(self, x: Tensor) -> Tensor:
        self._check_input(x.data)
        for layer in self.layers:
            x = layer.traced(x)
        return x

    def _check_input(self, x: np.ndarray) -> None:
        if isinstance(self.layers[0], GRU):
            if x.ndim != 3 or x.shape[2] != self.layers[0].Wr.shape[0]:
                raise ModelError(
                    f"{self.name}: expected (B, T, {self.layers[0].Wr.shape[0]}) input, "
                    f"got {x.shape}"
                )
        elif x.ndim != 2 or x.shape[1] != self.layers[0].W.shape[0]:
            raise ModelError(f"{self.name}: expected (B, {self.layers[0].W.shape[0]}) "
                             f"input, got {x.shape}")

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self._params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(state)
        extra = set(state) - set(self._params)
        if missing or extra:
            raise ModelError(f"{self.name}: parameter mismatch "
                             f"(missing={sorted(missing)}, extra={sorted(extra)})")
        for k, p in self._params.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ModelError(f"{self.name}: shape mismatch for '{k}': "
                                 f"{arr.shape} != {p.data.shape}")
            p.data = arr.copy()

    def clone(self) -> "Network":
        import copy
        dup = copy.copy(self)
        # parameters are shared on purpose for read-only snapshots; training
        # code replaces .data wholesale so cloned readers stay consistent
        return dup


def recurrent_net(n_in: int, gru_hidden: int, fc: list[int], n_out: int,
                  init: str, rng: np.random.Generator, name: str = "net",
                  std: float = 0.05) -> Network:
    layers: list = [GRU(n_in, gru_hidden, init, rng, std)]
    prev = gru_hidden
    for h in fc:
        layers.append(Linear(prev, h, init, rng, std))
        layers.append(ReLU())
        prev = h
    layers.append(Linear(prev, n_out, init, rng, std))
    return Network(layers, name=name)
