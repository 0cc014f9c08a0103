"""Simulation state, stepping, kinematics queries, and termination checks.

One ``step`` call advances a single control frame: 20 substeps of semi-implicit
Euler at 600 Hz (the control rate is 30 Hz).  Stepping is deterministic: the
same (model, state, targets, perturbations, params) always produces the
bit-identical next state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from ..errors import DivergenceError, ModelError
from . import _kernels
from .model import CharacterModel, ModelArrays


@dataclass(frozen=True)
class SimParams:
    dt_sim: float = 1.0 / 600.0
    substeps: int = 20
    gravity: float = 9.81
    friction: float = 0.9
    baumgarte: float = 0.2
    slop: float = 1e-3
    push_cap: float = 0.5   # max Baumgarte push-out speed, m/s
    solver_iters: int = 10
    contacts: bool = True


DEFAULT_PARAMS = SimParams()


@dataclass
class SimState:
    root_pos: np.ndarray        # (2,) m
    root_theta: float           # rad
    root_vel: np.ndarray        # (2,) m/s
    root_ang_vel: float         # rad/s
    q: np.ndarray               # (nj,) rad
    qdot: np.ndarray            # (nj,) rad/s
    frame: int = 0
    contacts: np.ndarray = field(default=None)  # (L,) bool, refreshed by step

    def copy(self) -> "SimState":
        return SimState(
            self.root_pos.copy(), float(self.root_theta), self.root_vel.copy(),
            float(self.root_ang_vel), self.q.copy(), self.qdot.copy(),
            self.frame, None if self.contacts is None else self.contacts.copy(),
        )


@dataclass(frozen=True)
class Perturbation:
    link: str
    impulse: tuple[float, float]    # N s
    frame: int
    point: tuple[float, float] = (0.0, 0.0)  # application point in the link frame

    def validate(self, model: CharacterModel) -> None:
        model.link_index(self.link)
        if not np.all(np.isfinite(self.impulse)):
            raise ModelError(f"perturbation impulse must be finite, got {self.impulse}")


@lru_cache(maxsize=32)
def _arrays(model: CharacterModel) -> ModelArrays:
    return ModelArrays(model)


def _check_state(model: CharacterModel, state: SimState) -> None:
    nj = model.n_joints
    if state.q.shape != (nj,) or state.qdot.shape != (nj,):
        raise ModelError(
            f"state has {state.q.shape[0]} joints but model '{model.name}' has {nj}"
        )


def default_state(model: CharacterModel) -> SimState:
    nj = model.n_joints
    return SimState(
        root_pos=np.zeros(2), root_theta=0.0, root_vel=np.zeros(2),
        root_ang_vel=0.0, q=np.zeros(nj), qdot=np.zeros(nj),
    )


def forward_kinematics(model: CharacterModel, state: SimState):
    """World COM position (L, 2) and orientation (L,) of every link."""
    _check_state(model, state)
    ma = _arrays(model)
    theta, rrel = _kernels.kinematics(ma.parents, ma.anchor_p, ma.anchor_c,
                                      state.root_theta, state.q)
    return rrel + state.root_pos, theta


def link_world_state(model: CharacterModel, state: SimState):
    """Positions (L,2), orientations (L,), linear velocities (L,2), angular velocities (L,)."""
    _check_state(model, state)
    ma = _arrays(model)
    theta, rrel = _kernels.kinematics(ma.parents, ma.anchor_p, ma.anchor_c,
                                      state.root_theta, state.q)
    omega, vrel = _kernels.velocities(ma.parents, ma.anchor_p, ma.anchor_c,
                                      theta, state.root_ang_vel, state.qdot)
    return rrel + state.root_pos, theta, vrel + state.root_vel, omega


def stable_pd_torques(model: CharacterModel, state: SimState, targets: np.ndarray,
                      dt_sim: float = DEFAULT_PARAMS.dt_sim) -> np.ndarray:
    """tau = -kp (q + qdot dt - target) - kd qdot, clamped to the joint torque limit."""
    _check_state(model, state)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != state.q.shape:
        raise ModelError(f"targets shape {targets.shape} != joint count {state.q.shape}")
    if not np.all(np.isfinite(targets)):
        raise ModelError("PD targets must be finite")
    ma = _arrays(model)
    return _kernels.stable_pd(state.q, state.qdot, targets, ma.kp, ma.kd,
                              ma.torque_limit, dt_sim)


def _to_internal(ma: ModelArrays, state: SimState):
    theta, rrel = _kernels.kinematics(ma.parents, ma.anchor_p, ma.anchor_c,
                                      state.root_theta, state.q)
    omega, vrel = _kernels.velocities(ma.parents, ma.anchor_p, ma.anchor_c,
                                      theta, state.root_ang_vel, state.qdot)
    m = ma.masses[:, None]
    com = state.root_pos + (m * rrel).sum(axis=0) / ma.total_mass
    vcom = state.root_vel + (m * vrel).sum(axis=0) / ma.total_mass
    u = np.concatenate(([state.root_theta], state.q))
    udot = np.concatenate(([state.root_ang_vel], state.qdot))
    return com.astype(np.float64), vcom.astype(np.float64), u, udot


def _from_internal(ma: ModelArrays, com, vcom, u, udot, frame, contacts) -> SimState:
    theta, rrel = _kernels.kinematics(ma.parents, ma.anchor_p, ma.anchor_c, u[0], u[1:])
    omega, vrel = _kernels.velocities(ma.parents, ma.anchor_p, ma.anchor_c,
                                      theta, udot[0], udot[1:])
    m = ma.masses[:, None]
    root_pos = com - (m * rrel).sum(axis=0) / ma.total_mass
    root_vel = vcom - (m * vrel).sum(axis=0) / ma.total_mass
    return SimState(
        root_pos=root_pos, root_theta=float(u[0]), root_vel=root_vel,
        root_ang_vel=float(udot[0]), q=u[1:].copy(), qdot=udot[1:].copy(),
        frame=frame, contacts=contacts,
    )


def step(model: CharacterModel, state: SimState, targets: np.ndarray | None,
         perturbations: tuple[Perturbation, ...] = (),
         params: SimParams = DEFAULT_PARAMS) -> SimState:
    """Advance one control frame (params.substeps substeps at params.dt_sim).

    ``targets`` are PD target angles held constant across the substeps; pass
    None to disable actuation (joint damping stays on).  Perturbations whose
    ``frame`` equals ``state.frame`` are applied as impulses at the first
    substep.  Raises DivergenceError if any state value exceeds 1e6.
    """
    _check_state(model, state)
    ma = _arrays(model)
    nj = model.n_joints

    pd_on = targets is not None
    if pd_on:
        targets = np.asarray(targets, dtype=np.float64)
        if targets.shape != (nj,):
            raise ModelError(f"targets shape {targets.shape} != joint count ({nj},)")
        if not np.all(np.isfinite(targets)):
            raise ModelError("PD targets must be finite")
    else:
        targets = np.zeros(nj)

    due = [p for p in perturbations if p.frame == state.frame]
    for p in due:
        p.validate(model)
    imp_link = np.array([model.link_index(p.link) for p in due], dtype=np.int64)
    imp_vec = np.array([p.impulse for p in due], dtype=np.float64).reshape(len(due), 2)
    imp_point = np.array([p.point for p in due], dtype=np.float64).reshape(len(due), 2)

    com, vcom, u, udot = _to_internal(ma, state)
    flags = np.zeros(model.n_links, dtype=np.bool_)
    ok = _kernels.run_substeps(
        com, vcom, u, udot,
        ma.parents, ma.masses, ma.inertias, ma.total_mass, ma.S,
        ma.anchor_p, ma.anchor_c, ma.lim_lo, ma.lim_hi, ma.kp, ma.kd,
        ma.damping, ma.torque_limit,
        ma.cp_link, ma.cp_local,
        targets, pd_on,
        imp_link, imp_vec, imp_point,
        params.substeps, params.dt_sim, params.gravity, params.friction,
        params.baumgarte, params.slop, params.push_cap, params.solver_iters, params.contacts,
        flags,
    )
    if not ok:
        raise DivergenceError(state.frame)
    return _from_internal(ma, com, vcom, u, udot, state.frame + 1, flags)


def check_early_termination(model: CharacterModel, state: SimState,
                            allowed_contacts: frozenset[str] | set[str] | None = None) -> bool:
    """True iff a link outside the allowed set currently touches the ground."""
    if state.contacts is None:
        return False
    allowed = model.contact_links if allowed_contacts is None else frozenset(allowed_contacts)
    allowed_idx = {model.link_index(n) for n in allowed}
    return any(bool(state.contacts[i]) and i not in allowed_idx
               for i in range(model.n_links))


def mechanical_energy(model: CharacterModel, state: SimState,
                      gravity: float = DEFAULT_PARAMS.gravity) -> float:
    """Kinetic plus gravitational potential energy, summed link-wise."""
    pos, _, vel, omega = link_world_state(model, state)
    ma = _arrays(model)
    kin = 0.5 * float(np.sum(ma.masses * np.sum(vel * vel, axis=1)) +
                      np.sum(ma.inertias * omega * omega))
    pot = gravity * float(np.sum(ma.masses * pos[:, 1]))
    return kin + pot


def linear_momentum(model: CharacterModel, state: SimState) -> np.ndarray:
    _, _, vel, _ = link_world_state(model, state)
    ma = _arrays(model)
    return (ma.masses[:, None] * vel).sum(axis=0)


def foot_penetration(model: CharacterModel, state: SimState) -> float:
    """Deepest ground penetration over all contact sample points (m, >= 0)."""
    ma = _arrays(model)
    pos, theta = forward_kinematics(model, state)
    depth = 0.0
    for k in range(ma.cp_link.shape[0]):
        l = ma.cp_link[k]
        c, s = np.cos(theta[l]), np.sin(theta[l])
        lx, lz = ma.cp_local[k]
        pz = pos[l, 1] + s * lx + c * lz
        depth = max(depth, -pz)
    return depth
