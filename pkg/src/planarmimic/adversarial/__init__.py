from .ensemble import DiscriminatorEnsemble, GanConfig
from .losses import bce_loss, ensemble_loss, gradient_penalty, hinge_loss, interpolate_windows

__all__ = [
    "DiscriminatorEnsemble", "GanConfig",
    "bce_loss", "ensemble_loss", "gradient_penalty", "hinge_loss", "interpolate_windows",
]
