"""Procedurally generated reference clips for the default biped.

Replaces motion-capture acquisition at desk scale: clips are built from smooth
root/foot trajectories with closed-form two-link leg IK, so stance feet stay
planted and poses are kinematically consistent.  Templates: stand, walk, hop,
crouch_to_stand, lean.
"""

from __future__ import annotations

import numpy as np

from ..errors import ClipError
from ..physics import CharacterModel, default_biped
from .clip import MotionClip, Pose

FPS = 30.0

# default-biped leg geometry (meters)
_HIP_DROP = 0.37      # torso COM to hip pivot
_L1 = 0.40            # hip to knee
_L2 = 0.40            # knee to ankle
_ANKLE_H = 0.06       # ankle pivot height with the foot flat on the ground
_STAND_ROOT = 1.21    # slightly flexed stance


def _leg_ik(hip: np.ndarray, ankle: np.ndarray, torso_theta: float,
            foot_theta: float = 0.0) -> tuple[float, float, float]:
    """(q_hip, q_knee, q_ankle) for a hip->knee->ankle chain, knee bending forward."""
    d = ankle - hip
    r = float(np.hypot(d[0], d[1]))
    r = min(max(r, 1e-6), _L1 + _L2 - 1e-9)
    cos_inner = (_L1**2 + _L2**2 - r**2) / (2.0 * _L1 * _L2)
    inner = float(np.arccos(np.clip(cos_inner, -1.0, 1.0)))
    gamma = float(np.arctan2(d[0], -d[1]))          # from straight down
    cos_beta = (_L1**2 + r**2 - _L2**2) / (2.0 * _L1 * r)
    beta = float(np.arccos(np.clip(cos_beta, -1.0, 1.0)))
    theta1 = gamma + beta
    q_knee = -(np.pi - inner)
    theta2 = theta1 + q_knee
    return theta1 - torso_theta, q_knee, foot_theta - theta2


def _make_pose(model: CharacterModel, root: np.ndarray, theta: float,
               ankle_l: np.ndarray, ankle_r: np.ndarray) -> Pose:
    hip = root + np.array([_HIP_DROP * np.sin(theta), -_HIP_DROP * np.cos(theta)])
    hl, kl, al = _leg_ik(hip, ankle_l, theta)
    hr, kr, ar = _leg_ik(hip, ankle_r, theta)
    return Pose(root_pos=np.asarray(root, dtype=float), root_theta=float(theta),
                q=np.array([hl, kl, al, hr, kr, ar]))


def stand_pose(model: CharacterModel | None = None, root_height: float = _STAND_ROOT) -> Pose:
    model = model or default_biped()
    root = np.array([0.0, root_height])
    ankle = np.array([0.0, _ANKLE_H])
    return _make_pose(model, root, 0.0, ankle, ankle)


def _stand(model, duration=2.0, root_height=_STAND_ROOT, **_):
    n = max(2, round(duration * FPS))
    base = stand_pose(model, root_height)
    frames = [base.copy() for _ in range(n)]
    return MotionClip(name="stand", frames=frames, cyclic=True, joints=model.joint_names,
                      fps=FPS, category="stand", loop_tolerance=0.01,
                      cycle_root_offset=np.zeros(2))


def _swing_rel(s: float, A: float) -> float:
    # C1 Hermite from -A to +A matching the stance sweep slope at both ends
    m = -2.0 * A / 0.6 * 0.4
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * (-A) + h10 * m + h01 * A + h11 * m


def _walk(model, period=1.0, speed=0.4, step_height=0.06, root_height=1.20, **_):
    n = max(2, round(period * FPS))
    A = 0.3 * speed * period  # half of the stance sweep
    frames = []
    for k in range(n):
        t = k / FPS
        rx = speed * t
        ankles = []
        for leg_phase in (0.0, 0.5):
            phi = (k / n + leg_phase) % 1.0
            if phi < 0.6:  # stance: world-fixed foot
                rel = A * (1.0 - 2.0 * phi / 0.6)
                lift = 0.0
            else:
                s = (phi - 0.6) / 0.4
                rel = _swing_rel(s, A)
                lift = step_height * np.sin(np.pi * s)
            ankles.append(np.array([rx + rel, _ANKLE_H + lift]))
        frames.append(_make_pose(model, np.array([rx, root_height]), 0.0, ankles[0], ankles[1]))
    return MotionClip(name="walk", frames=frames, cyclic=True, joints=model.joint_names,
                      fps=FPS, category="locomotion", loop_tolerance=0.35,
                      cycle_root_offset=np.array([speed * period, 0.0]))


def _hop(model, period=0.8, amplitude=0.12, root_height=_STAND_ROOT, **_):
    n = max(2, round(period * FPS))
    frames = []
    for k in range(n):
        phi = k / n
        if phi < 0.5:   # crouch down and back up
            dz = -amplitude * 0.5 * (1.0 - np.cos(2.0 * np.pi * phi))
            lift = 0.0
        else:           # airborne rise with legs extended
            s = (phi - 0.5) / 0.5
            dz = amplitude * 0.8 * np.sin(np.pi * s)
            lift = dz
        root = np.array([0.0, root_height + dz])
        ankle = np.array([0.0, _ANKLE_H + lift])
        frames.append(_make_pose(model, root, 0.0, ankle, ankle))
    return MotionClip(name="hop", frames=frames, cyclic=True, joints=model.joint_names,
                      fps=FPS, category="jump", loop_tolerance=0.35,
                      cycle_root_offset=np.zeros(2))


def _crouch_to_stand(model, duration=1.5, crouch_height=0.95, crouch_pitch=0.35, **_):
    n = max(2, round(duration * FPS))
    ankle = np.array([0.0, _ANKLE_H])
    frames = []
    for k in range(n):
        u = k / (n - 1)
        s = 3 * u**2 - 2 * u**3
        root = np.array([0.0, crouch_height + (_STAND_ROOT - crouch_height) * s])
        theta = crouch_pitch * (1.0 - s)
        frames.append(_make_pose(model, root, theta, ankle, ankle))
    return MotionClip(name="crouch_to_stand", frames=frames, cyclic=False,
                      joints=model.joint_names, fps=FPS, category="recovery")


def _lean(model, period=2.0, amplitude=0.2, root_height=_STAND_ROOT, **_):
    n = max(2, round(period * FPS))
    ankle = np.array([0.0, _ANKLE_H])
    frames = []
    for k in range(n):
        theta = amplitude * np.sin(2.0 * np.pi * k / n)
        frames.append(_make_pose(model, np.array([0.0, root_height]), theta, ankle, ankle))
    return MotionClip(name="lean", frames=frames, cyclic=True, joints=model.joint_names,
                      fps=FPS, category="stand", loop_tolerance=0.35,
                      cycle_root_offset=np.zeros(2))


_TEMPLATES = {
    "stand": _stand,
    "walk": _walk,
    "hop": _hop,
    "crouch_to_stand": _crouch_to_stand,
    "lean": _lean,
}


def generate_procedural_clips(spec, model: CharacterModel | None = None) -> list[MotionClip]:
    """Build clips from template specs: a dict or list of dicts like
    {"template": "walk", "period": 1.0, "speed": 0.4, "name": "walk-slow"}."""
    model = model or default_biped()
    if isinstance(spec, dict):
        spec = [spec]
    clips = []
    for item in spec:
        item = dict(item)
        template = item.pop("template", None)
        name = item.pop("name", template)
        key = str(template).replace("-", "_") if template else ""
        if key not in _TEMPLATES:
            raise ClipError(f"unknown procedural template {template!r}; "
                            f"known: {sorted(_TEMPLATES)}")
        clip = _TEMPLATES[key](model, **item)
        clip.name = name
        clips.append(clip)
    return clips
