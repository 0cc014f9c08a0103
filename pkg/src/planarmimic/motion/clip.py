"""Reference motion clips: keyframed poses at the 30 Hz control rate.

Clip JSON schema (format 1):

    {
      "format": 1, "name": str, "fps": 30, "cyclic": bool, "category": str,
      "loop_tolerance": float,            # rad, cyclic loop-closure bound
      "cycle_root_offset": [dx, dz],      # root travel per cycle (cyclic only)
      "joints": [joint names...],
      "frames": [{"root": [x, z, theta], "q": [...],
                  "root_vel": [vx, vz], "root_ang_vel": w, "qdot": [...]}]
    }

Velocity fields are optional; consumers recompute them by finite differences
of the interpolated trajectory when absent.  Cyclic clips store one period of
n frames (n whole-frame intervals); the stored last frame sits one frame
before the loop point and must match the first within ``loop_tolerance``
(root position excluded).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ClipError

CLIP_FORMAT = 1


@dataclass
class Pose:
    root_pos: np.ndarray      # (2,)
    root_theta: float
    q: np.ndarray             # (nj,)
    root_vel: np.ndarray | None = None
    root_ang_vel: float | None = None
    qdot: np.ndarray | None = None

    @property
    def has_velocities(self) -> bool:
        return self.root_vel is not None and self.qdot is not None and self.root_ang_vel is not None

    def copy(self) -> "Pose":
        return Pose(
            self.root_pos.copy(), float(self.root_theta), self.q.copy(),
            None if self.root_vel is None else self.root_vel.copy(),
            self.root_ang_vel,
            None if self.qdot is None else self.qdot.copy(),
        )


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    return np.arctan2(np.sin(a), np.cos(a))


@dataclass
class MotionClip:
    name: str
    frames: list[Pose]
    cyclic: bool
    joints: list[str]
    fps: float = 30.0
    category: str = ""
    loop_tolerance: float = 0.25
    cycle_root_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        if len(self.frames) < 2:
            raise ClipError(f"clip '{self.name}': needs at least 2 frames")
        for i, f in enumerate(self.frames):
            vals = np.concatenate([f.root_pos, [f.root_theta], f.q])
            if not np.all(np.isfinite(vals)):
                raise ClipError(f"clip '{self.name}': non-finite values at frame {i}")
            if f.q.shape[0] != len(self.joints):
                raise ClipError(f"clip '{self.name}': frame {i} has {f.q.shape[0]} joints, "
                                f"expected {len(self.joints)}")
        if self.cyclic:
            gap = self.loop_gap()
            if gap > self.loop_tolerance:
                raise ClipError(f"clip '{self.name}': loop gap {gap:.4f} rad exceeds "
                                f"tolerance {self.loop_tolerance}")

    def loop_gap(self) -> float:
        """Largest angular mismatch between the last and first frame (root position excluded)."""
        a, b = self.frames[0], self.frames[-1]
        diffs = np.abs(wrap_angle(np.concatenate([[b.root_theta - a.root_theta], b.q - a.q])))
        return float(np.max(diffs))

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def period_frames(self) -> int:
        """Cycle length in whole-frame intervals (cyclic clips only)."""
        return len(self.frames)

    @property
    def duration(self) -> float:
        return len(self.frames) / self.fps


def save_clip(clip: MotionClip, path: str | Path) -> None:
    doc = {
        "format": CLIP_FORMAT,
        "name": clip.name,
        "fps": clip.fps,
        "cyclic": clip.cyclic,
        "category": clip.category,
        "loop_tolerance": clip.loop_tolerance,
        "cycle_root_offset": list(map(float, clip.cycle_root_offset)),
        "joints": clip.joints,
        "frames": [_frame_doc(f) for f in clip.frames],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def _frame_doc(f: Pose) -> dict:
    d = {"root": [float(f.root_pos[0]), float(f.root_pos[1]), float(f.root_theta)],
         "q": [float(v) for v in f.q]}
    if f.has_velocities:
        d["root_vel"] = [float(v) for v in f.root_vel]
        d["root_ang_vel"] = float(f.root_ang_vel)
        d["qdot"] = [float(v) for v in f.qdot]
    return d


def load_clip(path: str | Path) -> MotionClip:
    path = Path(path)
    if not path.exists():
        raise ClipError(f"clip file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ClipError(f"clip file {path} is not valid JSON: {e}") from e
    if doc.get("format") != CLIP_FORMAT:
        raise ClipError(f"clip file {path}: unsupported format {doc.get('format')!r}")
    frames = []
    for fd in doc["frames"]:
        x, z, theta = fd["root"]
        pose = Pose(np.array([x, z], dtype=float), float(theta), np.asarray(fd["q"], dtype=float))
        if "root_vel" in fd:
            pose.root_vel = np.asarray(fd["root_vel"], dtype=float)
            pose.root_ang_vel = float(fd.get("root_ang_vel", 0.0))
            pose.qdot = np.asarray(fd.get("qdot", np.zeros_like(pose.q)), dtype=float)
        frames.append(pose)
    return MotionClip(
        name=doc["name"],
        frames=frames,
        cyclic=bool(doc["cyclic"]),
        joints=list(doc["joints"]),
        fps=float(doc.get("fps", 30.0)),
        category=doc.get("category", ""),
        loop_tolerance=float(doc.get("loop_tolerance", 0.25)),
        cycle_root_offset=np.asarray(doc.get("cycle_root_offset", [0.0, 0.0]), dtype=float),
    )
