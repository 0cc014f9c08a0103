"""Keyframe interpolation and episode/window sampling from reference clips."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ClipError
from .clip import MotionClip, Pose, wrap_angle

_VEL_DELTA = 0.5  # finite-difference half-step for velocities, in frames


def _lerp_angles(a, b, f):
    return a + wrap_angle(b - a) * f


def _pose_at(clip: MotionClip, t: float) -> Pose:
    """Positions/angles only; cyclic wrap handled by the caller."""
    n = clip.n_frames
    k = int(np.floor(t))
    f = t - k
    if f == 0.0:
        src = clip.frames[k]
        return Pose(src.root_pos.copy(), float(src.root_theta), src.q.copy())
    a = clip.frames[k]
    if k + 1 < n:
        b = clip.frames[k + 1]
        offset = np.zeros(2)
    else:
        # cyclic: the frame after the last is the first, shifted by one cycle
        b = clip.frames[0]
        offset = clip.cycle_root_offset
    return Pose(
        root_pos=a.root_pos + (b.root_pos + offset - a.root_pos) * f,
        root_theta=float(_lerp_angles(a.root_theta, b.root_theta, f)),
        q=_lerp_angles(a.q, b.q, f),
    )


def _unwrap_time(clip: MotionClip, t: float) -> tuple[float, np.ndarray]:
    """Map t onto [0, period) for cyclic clips; returns (local t, root offset)."""
    if not clip.cyclic:
        if t < 0.0 or t > clip.n_frames - 1:
            raise ClipError(
                f"clip '{clip.name}': index {t} out of range [0, {clip.n_frames - 1}] "
                "(non-cyclic clips do not wrap)"
            )
        return t, np.zeros(2)
    period = float(clip.period_frames)
    wraps = np.floor(t / period)
    return t - wraps * period, wraps * clip.cycle_root_offset


def interpolate_pose(clip: MotionClip, t: float, velocities: bool = True) -> Pose:
    """Linear pose interpolation at fractional frame index t.

    Angles interpolate along the shortest arc; velocities come from central
    finite differences of the interpolated trajectory (one-sided at non-cyclic
    clip boundaries).
    """
    local_t, offset = _unwrap_time(clip, float(t))
    pose = _pose_at(clip, local_t)
    pose.root_pos = pose.root_pos + offset
    if not velocities:
        return pose

    last = clip.n_frames - 1
    d = _VEL_DELTA
    if clip.cyclic:
        t0, t1 = t - d, t + d
    else:
        t0, t1 = max(0.0, t - d), min(float(last), t + d)
    p0 = interpolate_pose(clip, t0, velocities=False)
    p1 = interpolate_pose(clip, t1, velocities=False)
    scale = clip.fps / (t1 - t0) if t1 > t0 else 0.0
    pose.root_vel = (p1.root_pos - p0.root_pos) * scale
    pose.root_ang_vel = float(wrap_angle(p1.root_theta - p0.root_theta) * scale)
    pose.qdot = wrap_angle(p1.q - p0.q) * scale
    return pose


@dataclass
class InitNoise:
    theta: float
    q: np.ndarray
    height: float

    @classmethod
    def zero(cls, nj: int) -> "InitNoise":
        return cls(0.0, np.zeros(nj), 0.0)


def apply_noise(pose: Pose, noise: InitNoise) -> Pose:
    out = pose.copy()
    out.root_theta = float(out.root_theta + noise.theta)
    out.q = out.q + noise.q
    out.root_pos = out.root_pos + np.array([0.0, noise.height])
    return out


@dataclass
class InitSample:
    pose: Pose
    clip_index: int
    start_index: float
    noise: InitNoise


def sample_init_pose(clips: list[MotionClip], noise_scale: float,
                     rng: np.random.Generator) -> InitSample:
    """Uniform clip choice, uniform fractional start index, Gaussian pose noise.

    The noise draw is recorded so reference frames around the start can be
    noised identically when bootstrapping the first observation window.
    """
    if not clips:
        raise ClipError("sample_init_pose: empty clip list")
    ci = int(rng.integers(len(clips)))
    clip = clips[ci]
    hi = float(clip.period_frames) if clip.cyclic else float(clip.n_frames - 1)
    t = float(rng.uniform(0.0, hi))
    nj = len(clip.joints)
    if noise_scale > 0.0:
        noise = InitNoise(
            theta=float(rng.normal(0.0, noise_scale)),
            q=rng.normal(0.0, noise_scale, nj),
            height=float(rng.normal(0.0, 0.05 * noise_scale)),
        )
    else:
        noise = InitNoise.zero(nj)
    pose = apply_noise(interpolate_pose(clip, t), noise)
    return InitSample(pose=pose, clip_index=ci, start_index=t, noise=noise)


def window_eligible(clips: list[MotionClip], window: int = 5) -> list[int]:
    """Indices of clips long enough to supply a full observation window."""
    return [i for i, c in enumerate(clips) if c.cyclic or c.n_frames >= window]


def sample_reference_window(clips: list[MotionClip], rng: np.random.Generator,
                            noise_scale: float = 0.0, window: int = 5) -> list[Pose]:
    """Draw one observation window from the dataset: uniform eligible clip,
    uniform fractional start, frames at 1-frame spacing via interpolation.

    Interpolated (rather than keyframe-aligned) starts keep the discriminators
    from memorizing keyframes.  When noise_scale > 0, one shared pose-noise
    draw is applied to every frame of the window, mirroring episode-init noise.
    """
    eligible = window_eligible(clips, window)
    if not eligible:
        raise ClipError(f"no clip is long enough for a {window}-frame window")
    ci = eligible[int(rng.integers(len(eligible)))]
    clip = clips[ci]
    if clip.cyclic:
        start = float(rng.uniform(0.0, clip.period_frames))
    else:
        start = float(rng.uniform(0.0, clip.n_frames - window))
    noise = InitNoise.zero(len(clip.joints))
    if noise_scale > 0.0:
        noise = InitNoise(
            theta=float(rng.normal(0.0, noise_scale)),
            q=rng.normal(0.0, noise_scale, len(clip.joints)),
            height=float(rng.normal(0.0, 0.05 * noise_scale)),
        )
    return [apply_noise(interpolate_pose(clip, start + k), noise) for k in range(window)]
