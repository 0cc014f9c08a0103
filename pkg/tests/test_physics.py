import numpy as np
import pytest

from planarmimic.errors import DivergenceError, ModelError
from planarmimic.physics import (
    CharacterModel,
    JointSpec,
    LinkSpec,
    Perturbation,
    SimParams,
    check_early_termination,
    default_biped,
    default_state,
    foot_penetration,
    forward_kinematics,
    linear_momentum,
    link_world_state,
    load_model,
    mechanical_energy,
    save_model,
    stable_pd_torques,
    step,
)
from conftest import standing_state

NO_CONTACT = SimParams(contacts=False)


def single_box(mass=5.0):
    return CharacterModel(
        name="box",
        links=(LinkSpec("b", mass, 0.05, (0.2, 0.1), None),),
        joints=(),
        contact_links=frozenset({"b"}),
    )


def random_state(model, rng, spread=1.0):
    nj = model.n_joints
    s = default_state(model)
    s.root_pos = rng.normal(0.0, spread, 2)
    s.root_theta = rng.normal(0.0, spread)
    s.root_vel = rng.normal(0.0, spread, 2)
    s.root_ang_vel = rng.normal(0.0, spread)
    s.q = rng.uniform(-1.0, 1.0, nj) * spread
    s.qdot = rng.normal(0.0, spread, nj)
    return s


# ---------------------------------------------------------------------------
# forward kinematics
# ---------------------------------------------------------------------------

def fk_oracle(model, state):
    """Homogeneous-transform chain composition, independent of the simulator path."""
    def trans(v):
        t = np.eye(3)
        t[:2, 2] = v
        return t

    def rot(a):
        c, s = np.cos(a), np.sin(a)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    T = [trans(state.root_pos) @ rot(state.root_theta)]
    for j, js in enumerate(model.joints):
        Tc = T[js.parent] @ trans(js.anchor_parent) @ rot(state.q[j]) @ trans(-np.asarray(js.anchor_child))
        T.append(Tc)
    pos = np.array([t[:2, 2] for t in T])
    ang = np.array([np.arctan2(t[1, 0], t[0, 0]) for t in T])
    return pos, ang


def test_fk_identity_pose(biped):
    s = default_state(biped)
    pos, theta = forward_kinematics(biped, s)
    assert np.allclose(pos[0], s.root_pos)
    assert np.allclose(theta, 0.0)
    # rest offsets: thigh hangs 0.57 below the torso COM
    assert pos[1, 1] == pytest.approx(-0.57)
    assert pos[3, 1] == pytest.approx(-1.20)


def test_fk_single_joint_rotation(biped):
    s = default_state(biped)
    s.q[0] = np.pi / 2
    _, theta = forward_kinematics(biped, s)
    assert theta[1] == pytest.approx(s.root_theta + np.pi / 2)
    assert theta[0] == pytest.approx(s.root_theta)


def test_fk_matches_chain_oracle(biped):
    rng = np.random.default_rng(7)
    for _ in range(50):
        s = random_state(biped, rng)
        pos, theta = forward_kinematics(biped, s)
        opos, oang = fk_oracle(biped, s)
        assert np.max(np.abs(pos - opos)) < 1e-10
        # orientations modulo 2 pi
        d = np.angle(np.exp(1j * (theta - oang)))
        assert np.max(np.abs(d)) < 1e-10


def test_fk_dimension_mismatch(biped):
    s = default_state(biped)
    s.q = np.zeros(3)
    s.qdot = np.zeros(3)
    with pytest.raises(ModelError):
        forward_kinematics(biped, s)


# ---------------------------------------------------------------------------
# stable PD
# ---------------------------------------------------------------------------

def test_pd_zero_error_zero_torque(biped):
    s = default_state(biped)
    s.q[:] = 0.3
    tau = stable_pd_torques(biped, s, np.full(6, 0.3))
    assert np.allclose(tau, 0.0)


def test_pd_formula_value():
    # q=0, target=0.1, qdot=0, kp=100 -> tau = 10 (kd term vanishes with qdot=0)
    m = CharacterModel(
        name="pend",
        links=(LinkSpec("a", 1.0, 0.01, (0.05, 0.2), None),
               LinkSpec("b", 1.0, 0.01, (0.05, 0.2), 0)),
        joints=(JointSpec("j", 0, 1, (0.0, -0.2), (0.0, 0.2), (-3.0, 3.0),
                          kp=100.0, kd=5.0, damping=0.0, torque_limit=1000.0),),
    )
    s = default_state(m)
    tau = stable_pd_torques(m, s, np.array([0.1]), dt_sim=1.0 / 600.0)
    assert tau[0] == pytest.approx(10.0, abs=1e-12)


def test_pd_clamps_to_torque_limit(biped):
    s = default_state(biped)
    tau = stable_pd_torques(biped, s, np.full(6, np.pi))
    limits = np.array([j.torque_limit for j in biped.joints])
    assert np.all(np.abs(tau) <= limits + 1e-12)
    assert tau[0] == pytest.approx(limits[0])


def test_pd_rejects_nonfinite_target(biped):
    s = default_state(biped)
    with pytest.raises(ModelError):
        stable_pd_torques(biped, s, np.array([np.nan, 0, 0, 0, 0, 0]))


# ---------------------------------------------------------------------------
# step
# ---------------------------------------------------------------------------

def test_step_hold_without_gravity(biped):
    s = standing_state(biped, clearance=1e-4)
    before = s.copy()
    out = step(biped, s, s.q.copy(), params=SimParams(gravity=0.0))
    assert np.max(np.abs(out.root_pos - before.root_pos)) < 1e-9
    assert abs(out.root_theta - before.root_theta) < 1e-9
    assert np.max(np.abs(out.q - before.q)) < 1e-9
    assert out.frame == before.frame + 1


def test_free_fall_velocity(biped):
    s = default_state(biped)
    s.root_pos = np.array([0.0, 5.0])
    out = step(biped, s, None, params=NO_CONTACT)
    assert out.root_vel[1] == pytest.approx(-9.81 / 30.0, abs=1e-9)
    assert out.root_vel[0] == pytest.approx(0.0, abs=1e-12)


def test_impulse_on_free_body():
    m = single_box(mass=5.0)
    s = default_state(m)
    s.root_pos = np.array([0.0, 10.0])
    imp = Perturbation("b", (2.5, 1.0), frame=0)
    out = step(m, s, None, perturbations=(imp,), params=SimParams(contacts=False, gravity=0.0))
    assert out.root_vel[0] == pytest.approx(2.5 / 5.0, abs=1e-12)
    assert out.root_vel[1] == pytest.approx(1.0 / 5.0, abs=1e-12)


def test_impulse_changes_system_momentum_exactly(biped):
    rng = np.random.default_rng(3)
    s = random_state(biped, rng, spread=0.4)
    s.root_pos[1] = 10.0
    p0 = linear_momentum(biped, s)
    imp = Perturbation("torso", (7.0, -3.0), frame=s.frame)
    out = step(biped, s, None, perturbations=(imp,), params=SimParams(contacts=False, gravity=0.0))
    p1 = linear_momentum(biped, out)
    assert p1[0] - p0[0] == pytest.approx(7.0, abs=1e-9)
    assert p1[1] - p0[1] == pytest.approx(-3.0, abs=1e-9)


def test_impulse_only_at_its_frame(biped):
    s = standing_state(biped)
    imp = Perturbation("torso", (50.0, 0.0), frame=99)
    out = step(biped, s, np.zeros(6), perturbations=(imp,))
    base = step(biped, s, np.zeros(6))
    assert np.array_equal(out.root_vel, base.root_vel)


def test_divergence_error_carries_frame(biped):
    s = default_state(biped)
    s.frame = 17
    s.root_vel = np.array([1e9, 0.0])
    with pytest.raises(DivergenceError) as ei:
        step(biped, s, None, params=NO_CONTACT)
    assert ei.value.frame == 17


def test_step_determinism_bit_exact(biped):
    rng = np.random.default_rng(11)
    s = random_state(biped, rng, spread=0.3)
    s.root_pos[1] = 1.5
    tgt = rng.uniform(-0.5, 0.5, 6)
    imp = (Perturbation("shin_l", (1.0, 2.0), frame=s.frame),)
    a = step(biped, s, tgt, perturbations=imp)
    b = step(biped, s, tgt, perturbations=imp)
    for f in ("root_pos", "root_vel", "q", "qdot"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert a.root_theta == b.root_theta and a.root_ang_vel == b.root_ang_vel
    assert np.array_equal(a.contacts, b.contacts)


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

def test_ballistic_momentum_conservation(biped):
    rng = np.random.default_rng(5)
    s = default_state(biped)
    s.root_pos = np.array([0.0, 50.0])
    s.root_vel = np.array([1.5, 2.0])
    s.root_ang_vel = 2.0
    s.qdot = rng.normal(0.0, 1.0, 6)
    p0 = linear_momentum(biped, s)
    st = s
    for _ in range(100):
        st = step(biped, st, None, params=NO_CONTACT)
    p1 = linear_momentum(biped, st)
    assert abs(p1[0] - p0[0]) / abs(p0[0]) < 1e-9
    # vertical momentum follows gravity impulse exactly
    expect = p0[1] - biped.total_mass * 9.81 * (100 / 30.0)
    assert abs(p1[1] - expect) / abs(expect) < 1e-9


def test_passive_energy_nonincreasing(biped):
    s = default_state(biped)
    s.root_pos = np.array([0.0, 3.0])
    s.root_ang_vel = 0.3
    s.qdot = np.array([0.5, -0.3, 0.2, -0.5, 0.3, -0.2])
    st = s
    prev = mechanical_energy(biped, st)
    for _ in range(100):
        st = step(biped, st, None, params=NO_CONTACT)
        cur = mechanical_energy(biped, st)
        assert cur <= prev + 1e-6 * abs(prev)
        prev = cur


def test_standing_penetration_under_5mm(biped, standing):
    st = standing
    for _ in range(120):
        st = step(biped, st, np.zeros(6))
    assert foot_penetration(biped, st) < 0.005
    assert not check_early_termination(biped, st)


def test_joint_limits_always_respected(biped):
    rng = np.random.default_rng(13)
    lo = np.array([j.limits[0] for j in biped.joints])
    hi = np.array([j.limits[1] for j in biped.joints])
    s = standing_state(biped)
    s.qdot = rng.normal(0.0, 4.0, 6)
    st = s
    for _ in range(60):
        st = step(biped, st, rng.uniform(-np.pi, np.pi, 6))
        assert np.all(st.q >= lo - 1e-12) and np.all(st.q <= hi + 1e-12)


def test_link_velocities_consistent_with_fd(biped):
    # world link velocities from the recursion match position finite differences
    rng = np.random.default_rng(17)
    s = random_state(biped, rng, spread=0.5)
    s.root_pos[1] = 20.0
    pos0, _, vel, _ = link_world_state(biped, s)
    h = 1e-7
    s2 = s.copy()
    s2.root_pos = s.root_pos + h * s.root_vel
    s2.root_theta = s.root_theta + h * s.root_ang_vel
    s2.q = s.q + h * s.qdot
    pos1, _ = forward_kinematics(biped, s2)
    fd = (pos1 - pos0) / h
    assert np.max(np.abs(fd - vel)) < 1e-5


# ---------------------------------------------------------------------------
# early termination
# ---------------------------------------------------------------------------

def test_early_termination_cases(biped, standing):
    st = step(biped, standing, np.zeros(6))
    assert set(np.nonzero(st.contacts)[0]) <= {3, 6}
    assert not check_early_termination(biped, st)

    # lay the torso on the ground: disallowed contact fires
    s = default_state(biped)
    s.root_pos = np.array([0.0, 0.09])
    s.root_theta = np.pi / 2
    st = step(biped, s, None)
    assert st.contacts[0]
    assert check_early_termination(biped, st)

    # airborne: no contacts at all
    s = default_state(biped)
    s.root_pos = np.array([0.0, 5.0])
    st = step(biped, s, None, params=NO_CONTACT)
    assert not st.contacts.any()
    assert not check_early_termination(biped, st)


# ---------------------------------------------------------------------------
# model definition and file round trip
# ---------------------------------------------------------------------------

def test_default_biped_shape(biped):
    assert biped.n_links == 7
    assert biped.n_joints == 6
    assert biped.total_mass == pytest.approx(45.0)
    assert biped.contact_links == {"foot_l", "foot_r"}


def test_model_validation_errors():
    good = default_biped()
    with pytest.raises(ModelError):
        CharacterModel("bad", good.links, good.joints[:-1])  # joint count mismatch
    with pytest.raises(ModelError):
        LinkSpec("x", -1.0, 0.1, (0.1, 0.1), None)
        CharacterModel("bad", (LinkSpec("x", -1.0, 0.1, (0.1, 0.1), None),), ())
    with pytest.raises(ModelError):
        CharacterModel("bad", good.links, good.joints, contact_links=frozenset({"nope"}))


def test_model_yaml_round_trip(tmp_path, biped):
    path = tmp_path / "biped.yaml"
    save_model(biped, path)
    loaded = load_model(path)
    assert loaded == biped


def test_load_model_missing_file(tmp_path):
    with pytest.raises(ModelError, match="not found"):
        load_model(tmp_path / "nope.yaml")


def test_perturbation_validation(biped):
    with pytest.raises(ModelError):
        Perturbation("nope", (1.0, 0.0), 0).validate(biped)
    with pytest.raises(ModelError):
        Perturbation("torso", (np.inf, 0.0), 0).validate(biped)
