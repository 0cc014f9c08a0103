"""Root-relative multi-frame feature windows.

The discriminator consumes a 5-frame pose window; the policy a 4-frame
velocity-augmented window.  All features are expressed relative to the root
position and root heading of the window's LAST frame, which makes windows
exactly invariant to global translation and global heading rotation of the
input trajectory.

Feature blocks per frame, per variant:
  link       per link: (x, z, cos, sin) relative         -> 4 |B|
  link_vel   link block + per link (vx, vz, omega)       -> 7 |B|
  joint      root (x, z, cos, sin) + per joint (cos, sin)-> 4 + 2 nj
  joint_vel  joint block + root (vx, vz, w) + qdot       -> 7 + 3 nj
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from ..errors import ClipError
from ..physics import CharacterModel, SimState, link_world_state
from .clip import Pose, wrap_angle


class ObservationVariant(str, Enum):
    LINK = "link"
    LINK_VEL = "link_vel"
    JOINT = "joint"
    JOINT_VEL = "joint_vel"


OBS_WINDOW = 5   # frames per discriminator window
STATE_WINDOW = 4  # frames per policy state window


def block_dim(model: CharacterModel, variant: ObservationVariant) -> int:
    L, nj = model.n_links, model.n_joints
    return {
        ObservationVariant.LINK: 4 * L,
        ObservationVariant.LINK_VEL: 7 * L,
        ObservationVariant.JOINT: 4 + 2 * nj,
        ObservationVariant.JOINT_VEL: 7 + 3 * nj,
    }[variant]


def observation_dim(model: CharacterModel, variant: ObservationVariant = ObservationVariant.LINK) -> int:
    return OBS_WINDOW * block_dim(model, variant)


def state_dim(model: CharacterModel) -> int:
    return STATE_WINDOW * block_dim(model, ObservationVariant.LINK_VEL)


def _pose_to_state(model: CharacterModel, pose: Pose) -> SimState:
    nj = model.n_joints
    return SimState(
        root_pos=np.asarray(pose.root_pos, dtype=float),
        root_theta=float(pose.root_theta),
        root_vel=np.zeros(2) if pose.root_vel is None else np.asarray(pose.root_vel, dtype=float),
        root_ang_vel=0.0 if pose.root_ang_vel is None else float(pose.root_ang_vel),
        q=np.asarray(pose.q, dtype=float),
        qdot=np.zeros(nj) if pose.qdot is None else np.asarray(pose.qdot, dtype=float),
    )


def _rot_rows(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])  # R(-theta)


def _frame_block(model, pose, variant, ref_pos, ref_theta, Rinv) -> np.ndarray:
    if variant in (ObservationVariant.LINK, ObservationVariant.LINK_VEL):
        pos, theta, vel, omega = link_world_state(model, _pose_to_state(model, pose))
        rel = (pos - ref_pos) @ Rinv.T
        ang = theta - ref_theta
        parts = [rel, np.cos(ang)[:, None], np.sin(ang)[:, None]]
        if variant is ObservationVariant.LINK_VEL:
            parts += [vel @ Rinv.T, omega[:, None]]
        return np.concatenate(parts, axis=1).reshape(-1)
    # joint variants: root pose + joint angles (cos/sin to dodge wraparound)
    rel = Rinv @ (np.asarray(pose.root_pos, dtype=float) - ref_pos)
    ang = pose.root_theta - ref_theta
    parts = [rel, [np.cos(ang), np.sin(ang)], np.cos(pose.q), np.sin(pose.q)]
    if variant is ObservationVariant.JOINT_VEL:
        st = _pose_to_state(model, pose)
        parts += [Rinv @ st.root_vel, [st.root_ang_vel], st.qdot]
    return np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in parts])


def build_observation_window(poses: list[Pose], model: CharacterModel,
                             variant: ObservationVariant = ObservationVariant.LINK) -> np.ndarray:
    """Flatten a 5-frame pose window, oldest first, relative to the last frame's root."""
    if len(poses) != OBS_WINDOW:
        raise ClipError(f"observation window needs exactly {OBS_WINDOW} frames, got {len(poses)}")
    ref = poses[-1]
    ref_pos = np.asarray(ref.root_pos, dtype=float)
    ref_theta = float(ref.root_theta)
    Rinv = _rot_rows(ref_theta)
    return np.concatenate([_frame_block(model, p, variant, ref_pos, ref_theta, Rinv)
                           for p in poses])


def build_state_window(poses: list[Pose], model: CharacterModel) -> np.ndarray:
    """Flatten a 4-frame velocity-augmented window for the policy/value networks."""
    if len(poses) != STATE_WINDOW:
        raise ClipError(f"state window needs exactly {STATE_WINDOW} frames, got {len(poses)}")
    for i, p in enumerate(poses):
        if not p.has_velocities:
            raise ClipError(f"state window frame {i} is missing velocities")
    ref = poses[-1]
    ref_pos = np.asarray(ref.root_pos, dtype=float)
    ref_theta = float(ref.root_theta)
    Rinv = _rot_rows(ref_theta)
    return np.concatenate([
        _frame_block(model, p, ObservationVariant.LINK_VEL, ref_pos, ref_theta, Rinv)
        for p in poses
    ])


def pose_from_state(state: SimState) -> Pose:
    return Pose(
        root_pos=state.root_pos.copy(), root_theta=float(state.root_theta),
        q=state.q.copy(), root_vel=state.root_vel.copy(),
        root_ang_vel=float(state.root_ang_vel), qdot=state.qdot.copy(),
    )
