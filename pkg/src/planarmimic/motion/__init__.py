from .clip import CLIP_FORMAT, MotionClip, Pose, load_clip, save_clip, wrap_angle
from .interpolate import (
    InitNoise,
    InitSample,
    apply_noise,
    interpolate_pose,
    sample_init_pose,
    sample_reference_window,
    window_eligible,
)
from .procedural import generate_procedural_clips, stand_pose
from .windows import (
    OBS_WINDOW,
    STATE_WINDOW,
    ObservationVariant,
    block_dim,
    build_observation_window,
    build_state_window,
    observation_dim,
    pose_from_state,
    state_dim,
)

__all__ = [
    "CLIP_FORMAT", "MotionClip", "Pose", "load_clip", "save_clip", "wrap_angle",
    "InitNoise", "InitSample", "apply_noise", "interpolate_pose", "sample_init_pose",
    "sample_reference_window", "window_eligible", "generate_procedural_clips", "stand_pose",
    "OBS_WINDOW", "STATE_WINDOW", "ObservationVariant", "block_dim",
    "build_observation_window", "build_state_window", "observation_dim",
    "pose_from_state", "state_dim",
]
