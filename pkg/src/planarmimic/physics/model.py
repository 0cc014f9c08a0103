"""Planar articulated character model: a tree of box links joined by revolute joints.

Conventions: the plane is (x, z) with z up, gravity along -z.  Angles are CCW,
``R(theta) @ v`` rotates a link-frame vector into the world.  Link frames sit at
the link's center of mass; joint anchors are offsets from the COM.  Link 0 is
the root (torso); every other link has exactly one inbound joint, and joints
are stored sorted by child index so joint ``j`` drives link ``j + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..errors import ModelError


@dataclass(frozen=True)
class LinkSpec:
    name: str
    mass: float            # kg
    inertia: float         # kg m^2 about the COM
    half_extents: tuple[float, float]   # (hx, hz) m
    parent: int | None     # link index, None for the root


@dataclass(frozen=True)
class JointSpec:
    name: str
    parent: int            # parent link index
    child: int             # child link index
    anchor_parent: tuple[float, float]  # m, in the parent frame
    anchor_child: tuple[float, float]   # m, in the child frame
    limits: tuple[float, float]         # rad, (low, high)
    kp: float              # N m / rad
    kd: float              # N m s / rad
    damping: float         # N m s / rad, always-on viscous friction
    torque_limit: float    # N m


@dataclass(frozen=True)
class CharacterModel:
    name: str
    links: tuple[LinkSpec, ...]
    joints: tuple[JointSpec, ...]
    contact_links: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        _validate(self)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def total_mass(self) -> float:
        return sum(l.mass for l in self.links)

    def link_index(self, name: str) -> int:
        for i, l in enumerate(self.links):
            if l.name == name:
                return i
        raise ModelError(f"unknown link '{name}'")

    @property
    def link_names(self) -> list[str]:
        return [l.name for l in self.links]

    @property
    def joint_names(self) -> list[str]:
        return [j.name for j in self.joints]

    @property
    def allowed_contact_indices(self) -> frozenset[int]:
        return frozenset(self.link_index(n) for n in self.contact_links)


def _validate(m: CharacterModel) -> None:
    if not m.links:
        raise ModelError("model has no links")
    if m.links[0].parent is not None:
        raise ModelError("link 0 must be the root (parent=None)")
    for i, l in enumerate(m.links[1:], start=1):
        if l.parent is None or not (0 <= l.parent < i):
            raise ModelError(f"link '{l.name}': parent must be an earlier link index")
    if len(m.joints) != len(m.links) - 1:
        raise ModelError("joint count must be link count - 1 (tree)")
    for j, js in enumerate(m.joints):
        if js.child != j + 1:
            raise ModelError(f"joint '{js.name}': joints must be sorted so joint j drives link j+1")
        if js.parent != m.links[js.child].parent:
            raise ModelError(f"joint '{js.name}': parent link disagrees with the link tree")
        if js.limits[0] >= js.limits[1]:
            raise ModelError(f"joint '{js.name}': limits low must be < high")
        if js.kp <= 0 or js.kd <= 0 or js.torque_limit <= 0 or js.damping < 0:
            raise ModelError(f"joint '{js.name}': gains and torque limit must be positive")
    for l in m.links:
        if l.mass <= 0 or l.inertia <= 0:
            raise ModelError(f"link '{l.name}': mass and inertia must be strictly positive")
        if min(l.half_extents) <= 0:
            raise ModelError(f"link '{l.name}': half extents must be positive")
    names = m.link_names
    if len(set(names)) != len(names):
        raise ModelError("duplicate link names")
    unknown = set(m.contact_links) - set(names)
    if unknown:
        raise ModelError(f"contact_links reference unknown links: {sorted(unknown)}")


class ModelArrays:
    """Flat ndarray view of a model for the simulation kernels.

    Precomputes the ancestry matrix S (S[l, 0] = 1 for the root pitch; S[l, 1+j] = 1
    iff joint j lies on the path from the root to link l) and the per-link contact
    sample points (box corners).
    """

    def __init__(self, model: CharacterModel):
        L = model.n_links
        nj = model.n_joints
        self.model = model
        self.parents = np.array([-1] + [l.parent for l in model.links[1:]], dtype=np.int64)
        self.masses = np.array([l.mass for l in model.links])
        self.inertias = np.array([l.inertia for l in model.links])
        self.total_mass = float(self.masses.sum())
        self.anchor_p = np.array([j.anchor_parent for j in model.joints]).reshape(nj, 2)
        self.anchor_c = np.array([j.anchor_child for j in model.joints]).reshape(nj, 2)
        self.lim_lo = np.array([j.limits[0] for j in model.joints])
        self.lim_hi = np.array([j.limits[1] for j in model.joints])
        self.kp = np.array([j.kp for j in model.joints])
        self.kd = np.array([j.kd for j in model.joints])
        self.damping = np.array([j.damping for j in model.joints])
        self.torque_limit = np.array([j.torque_limit for j in model.joints])

        S = np.zeros((L, 1 + nj))
        S[:, 0] = 1.0
        for l in range(1, L):
            k = l
            while k > 0:
                S[l, k] = 1.0      # joint k-1 drives link k
                k = int(self.parents[k])
        self.S = S

        pts_link: list[int] = []
        pts_local: list[tuple[float, float]] = []
        for i, l in enumerate(model.links):
            hx, hz = l.half_extents
            for sx in (-1.0, 1.0):
                for sz in (-1.0, 1.0):
                    pts_link.append(i)
                    pts_local.append((sx * hx, sz * hz))
        self.cp_link = np.array(pts_link, dtype=np.int64)
        self.cp_local = np.array(pts_local)
        self.allowed_contact = np.zeros(L, dtype=np.bool_)
        for idx in model.allowed_contact_indices:
            self.allowed_contact[idx] = True


_FORMAT = 1


def save_model(model: CharacterModel, path: str | Path) -> None:
    doc = {
        "format": _FORMAT,
        "name": model.name,
        "links": [
            {
                "name": l.name,
                "mass": l.mass,
                "inertia": l.inertia,
                "half_extents": list(l.half_extents),
                "parent": None if l.parent is None else model.links[l.parent].name,
            }
            for l in model.links
        ],
        "joints": [
            {
                "name": j.name,
                "parent": model.links[j.parent].name,
                "child": model.links[j.child].name,
                "anchor_parent": list(j.anchor_parent),
                "anchor_child": list(j.anchor_child),
                "limits": list(j.limits),
                "kp": j.kp,
                "kd": j.kd,
                "damping": j.damping,
                "torque_limit": j.torque_limit,
            }
            for j in model.joints
        ],
        "contact_links": sorted(model.contact_links),
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


def load_model(path: str | Path) -> CharacterModel:
    path = Path(path)
    if not path.exists():
        raise ModelError(f"character model file not found: {path}")
    doc = yaml.safe_load(path.read_text())
    if not isinstance(doc, dict) or doc.get("format") != _FORMAT:
        raise ModelError(f"unsupported character model format in {path}")
    name_to_idx = {l["name"]: i for i, l in enumerate(doc["links"])}
    links = tuple(
        LinkSpec(
            name=l["name"],
            mass=float(l["mass"]),
            inertia=float(l["inertia"]),
            half_extents=tuple(float(v) for v in l["half_extents"]),
            parent=None if l["parent"] is None else name_to_idx[l["parent"]],
        )
        for l in doc["links"]
    )
    joints = tuple(
        JointSpec(
            name=j["name"],
            parent=name_to_idx[j["parent"]],
            child=name_to_idx[j["child"]],
            anchor_parent=tuple(float(v) for v in j["anchor_parent"]),
            anchor_child=tuple(float(v) for v in j["anchor_child"]),
            limits=tuple(float(v) for v in j["limits"]),
            kp=float(j["kp"]),
            kd=float(j["kd"]),
            damping=float(j["damping"]),
            torque_limit=float(j["torque_limit"]),
        )
        for j in doc["joints"]
    )
    return CharacterModel(
        name=doc["name"],
        links=links,
        joints=joints,
        contact_links=frozenset(doc.get("contact_links", [])),
    )


def default_biped() -> CharacterModel:
    """7-link sagittal-plane biped, ~1.60 m tall, 45 kg total."""

    def box_inertia(m, hx, hz):
        return m * ((2 * hx) ** 2 + (2 * hz) ** 2) / 12.0

    links = (
        LinkSpec("torso", 24.0, box_inertia(24.0, 0.10, 0.37), (0.10, 0.37), None),
        LinkSpec("thigh_l", 6.5, box_inertia(6.5, 0.06, 0.20), (0.06, 0.20), 0),
        LinkSpec("shin_l", 3.2, box_inertia(3.2, 0.05, 0.20), (0.05, 0.20), 1),
        LinkSpec("foot_l", 0.8, box_inertia(0.8, 0.12, 0.03), (0.12, 0.03), 2),
        LinkSpec("thigh_r", 6.5, box_inertia(6.5, 0.06, 0.20), (0.06, 0.20), 0),
        LinkSpec("shin_r", 3.2, box_inertia(3.2, 0.05, 0.20), (0.05, 0.20), 4),
        LinkSpec("foot_r", 0.8, box_inertia(0.8, 0.12, 0.03), (0.12, 0.03), 5),
    )
    hip = dict(anchor_parent=(0.0, -0.37), anchor_child=(0.0, 0.20),
               limits=(-1.8, 1.8), kp=300.0, kd=30.0, damping=0.5, torque_limit=250.0)
    knee = dict(anchor_parent=(0.0, -0.20), anchor_child=(0.0, 0.20),
                limits=(-2.4, 0.02), kp=300.0, kd=30.0, damping=0.5, torque_limit=250.0)
    # ankle stiffness must beat the standing gravitational stiffness (~M g h = 500 N m/rad)
    ankle = dict(anchor_parent=(0.0, -0.20), anchor_child=(-0.04, 0.03),
                 limits=(-1.0, 1.0), kp=600.0, kd=40.0, damping=0.2, torque_limit=150.0)
    joints = (
        JointSpec("hip_l", 0, 1, **hip),
        JointSpec("knee_l", 1, 2, **knee),
        JointSpec("ankle_l", 2, 3, **ankle),
        JointSpec("hip_r", 0, 4, **hip),
        JointSpec("knee_r", 4, 5, **knee),
        JointSpec("ankle_r", 5, 6, **ankle),
    )
    return CharacterModel(
        name="biped7",
        links=links,
        joints=joints,
        contact_links=frozenset({"foot_l", "foot_r"}),
    )
