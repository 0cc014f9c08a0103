from .model import CharacterModel, JointSpec, LinkSpec, default_biped, load_model, save_model
from .sim import (
    DEFAULT_PARAMS,
    Perturbation,
    SimParams,
    SimState,
    check_early_termination,
    default_state,
    foot_penetration,
    forward_kinematics,
    linear_momentum,
    link_world_state,
    mechanical_energy,
    stable_pd_torques,
    step,
)

__all__ = [
    "CharacterModel", "JointSpec", "LinkSpec", "default_biped", "load_model", "save_model",
    "DEFAULT_PARAMS", "Perturbation", "SimParams", "SimState", "check_early_termination",
    "default_state", "foot_penetration", "forward_kinematics", "linear_momentum",
    "link_world_state", "mechanical_energy", "stable_pd_torques", "step",
]
