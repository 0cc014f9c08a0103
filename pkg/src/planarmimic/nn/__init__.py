from . import tensor
from .init import init_orthogonal, init_truncated_normal
from .layers import GRU, Linear, Network, ReLU, recurrent_net
from .normalizer import RunningNormalizer
from .optim import Adam
from .penalty import grad_norm_penalty_backward, input_gradient, penalty_value
from .tensor import Tensor, as_tensor, grad, no_grad, param

__all__ = [
    "tensor", "init_orthogonal", "init_truncated_normal",
    "GRU", "Linear", "Network", "ReLU", "recurrent_net",
    "RunningNormalizer", "Adam",
    "grad_norm_penalty_backward", "input_gradient", "penalty_value",
    "Tensor", "as_tensor", "grad", "no_grad", "param",
]
