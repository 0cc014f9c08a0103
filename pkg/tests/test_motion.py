import numpy as np
import pytest

from planarmimic.errors import ClipError
from planarmimic.motion import (
    MotionClip,
    ObservationVariant,
    Pose,
    build_observation_window,
    build_state_window,
    generate_procedural_clips,
    interpolate_pose,
    load_clip,
    observation_dim,
    sample_init_pose,
    sample_reference_window,
    save_clip,
    stand_pose,
    state_dim,
    wrap_angle,
)

JOINTS = ["hip_l", "knee_l", "ankle_l", "hip_r", "knee_r", "ankle_r"]


def make_clip(qs, cyclic=False, offset=(0.0, 0.0), roots=None):
    frames = []
    for i, q in enumerate(qs):
        root = np.array([0.1 * i, 1.2]) if roots is None else np.asarray(roots[i], dtype=float)
        frames.append(Pose(root, 0.0, np.asarray(q, dtype=float)))
    return MotionClip(name="t", frames=frames, cyclic=cyclic, joints=JOINTS,
                      cycle_root_offset=np.asarray(offset, dtype=float))


def analytic_clip(n=40, cyclic=False):
    """Smooth trajectory with known derivatives for velocity checks."""
    frames = []
    for k in range(n):
        t = k / 30.0
        q = 0.3 * np.sin(2 * np.pi * 0.7 * t + np.arange(6))
        frames.append(Pose(np.array([0.5 * t, 1.2 + 0.05 * np.sin(2 * np.pi * t)]),
                           0.2 * np.sin(2 * np.pi * 0.5 * t), q))
    return MotionClip(name="a", frames=frames, cyclic=cyclic, joints=JOINTS,
                      loop_tolerance=2.0, cycle_root_offset=np.array([0.5 * n / 30.0, 0.0]))


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

def test_integer_index_is_exact_keyframe():
    clip = make_clip([np.zeros(6), np.full(6, 0.4), np.full(6, -0.2)])
    p = interpolate_pose(clip, 1.0)
    assert np.allclose(p.q, 0.4)
    assert np.allclose(p.root_pos, [0.1, 1.2])


def test_midpoint_interpolation():
    clip = make_clip([np.zeros(6), np.full(6, 0.2)])
    p = interpolate_pose(clip, 0.5)
    assert np.allclose(p.q, 0.1)


def test_shortest_arc_interpolation():
    qs = [np.full(6, 3.1), np.full(6, -3.1)]
    clip = MotionClip(name="w", frames=[Pose(np.zeros(2), 0.0, np.asarray(q)) for q in qs],
                      cyclic=False, joints=JOINTS)
    p = interpolate_pose(clip, 0.5)
    # midpoint crosses +-pi, never 0
    assert np.all(np.abs(np.abs(p.q) - np.pi) < 1e-9)


def test_out_of_range_non_cyclic_raises():
    clip = make_clip([np.zeros(6), np.ones(6)])
    with pytest.raises(ClipError):
        interpolate_pose(clip, 1.5)
    with pytest.raises(ClipError):
        interpolate_pose(clip, -0.1)


def test_cyclic_wrap_accumulates_root_offset():
    clip = make_clip([np.zeros(6), np.full(6, 0.1), np.full(6, 0.02)],
                     cyclic=True, offset=(0.9, 0.0),
                     roots=[(0.0, 1.2), (0.3, 1.2), (0.6, 1.2)])
    p = interpolate_pose(clip, 3.0)   # one full period past frame 0
    assert np.allclose(p.q, clip.frames[0].q)
    assert p.root_pos[0] == pytest.approx(0.9)


def test_interpolation_continuity():
    clip = analytic_clip()
    for t in [0.0, 3.3, 17.9, 38.5]:
        a = interpolate_pose(clip, t, velocities=False)
        b = interpolate_pose(clip, min(t + 1e-7, 39.0), velocities=False)
        assert np.max(np.abs(a.q - b.q)) < 1e-5
        assert np.max(np.abs(a.root_pos - b.root_pos)) < 1e-5


def test_velocities_match_trajectory_derivative():
    clip = analytic_clip()
    p = interpolate_pose(clip, 10.0)
    t = 10.0 / 30.0
    dq = 0.3 * 2 * np.pi * 0.7 * np.cos(2 * np.pi * 0.7 * t + np.arange(6))
    # linear keyframe interpolation resolves derivatives to O(fps^-1)
    assert np.max(np.abs(p.qdot - dq)) < 0.05
    assert p.root_vel[0] == pytest.approx(0.5, abs=0.01)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_zero_noise_init_matches_interpolation():
    clip = analytic_clip()
    rng = np.random.default_rng(0)
    s = sample_init_pose([clip], 0.0, rng)
    ref = interpolate_pose(clip, s.start_index)
    assert np.allclose(s.pose.q, ref.q)
    assert np.allclose(s.pose.root_pos, ref.root_pos)
    assert s.clip_index == 0


def test_init_sampling_uniform_over_clips():
    clips = [analytic_clip(), analytic_clip()]
    rng = np.random.default_rng(1)
    counts = np.zeros(2)
    for _ in range(10000):
        counts[sample_init_pose(clips, 0.0, rng).clip_index] += 1
    freq = counts / counts.sum()
    assert np.all(np.abs(freq - 0.5) < 0.02)


def test_init_noise_recorded_and_applied():
    clip = analytic_clip()
    rng = np.random.default_rng(2)
    s = sample_init_pose([clip], 0.05, rng)
    ref = interpolate_pose(clip, s.start_index)
    assert s.pose.root_theta - ref.root_theta == pytest.approx(s.noise.theta)
    assert np.allclose(s.pose.q - ref.q, s.noise.q)
    assert s.pose.root_pos[1] - ref.root_pos[1] == pytest.approx(s.noise.height)


def test_reference_window_keyframe_start_reproduces_frames():
    clip = analytic_clip()
    poses = [interpolate_pose(clip, float(k)) for k in range(5)]
    for p, f in zip(poses, clip.frames[:5]):
        assert np.allclose(p.q, f.q)


def test_reference_window_wraps_cyclic():
    clip = analytic_clip(cyclic=True)
    rng = np.random.default_rng(3)
    for _ in range(50):
        poses = sample_reference_window([clip], rng)
        assert len(poses) == 5
        assert all(np.all(np.isfinite(p.q)) for p in poses)


def test_reference_window_excludes_short_noncyclic():
    short = make_clip([np.zeros(6)] * 3)
    long_ = analytic_clip()
    rng = np.random.default_rng(4)
    # short clip never sampled; sampling still works
    for _ in range(50):
        sample_reference_window([short, long_], rng)
    with pytest.raises(ClipError):
        sample_reference_window([short], rng)


def test_reference_window_start_distribution_uniform():
    clip = analytic_clip(n=20)
    rng = np.random.default_rng(5)
    starts = []
    for _ in range(4000):
        poses = sample_reference_window([clip], rng)
        starts.append(poses[0].root_pos[0] / (0.5 / 30.0))  # invert x = 0.5 t
    starts = np.asarray(starts)
    hist, _ = np.histogram(starts, bins=5, range=(0.0, 15.0))
    assert np.all(np.abs(hist / hist.sum() - 0.2) < 0.05)


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------

def window_poses(biped, n=5, seed=0, moving=True):
    rng = np.random.default_rng(seed)
    poses = []
    for k in range(n):
        t = k / 30.0
        if moving:
            q = 0.2 * np.sin(1.7 * t + np.arange(6))
            root = np.array([0.8 * t, 1.2 + 0.03 * np.sin(3 * t)])
            theta = 0.15 * np.sin(2.1 * t)
            vel = np.array([0.8, 0.09 * np.cos(3 * t)])
            w = 0.315 * np.cos(2.1 * t)
            qd = 0.34 * np.cos(1.7 * t + np.arange(6))
        else:
            q, root, theta = np.zeros(6), np.array([0.0, 1.2]), 0.0
            vel, w, qd = np.zeros(2), 0.0, np.zeros(6)
        poses.append(Pose(root, theta, q, root_vel=vel, root_ang_vel=w, qdot=qd))
    return poses


def rotate_translate(poses, phi, shift):
    c, s = np.cos(phi), np.sin(phi)
    R = np.array([[c, -s], [s, c]])
    out = []
    for p in poses:
        out.append(Pose(R @ p.root_pos + shift, p.root_theta + phi, p.q.copy(),
                        None if p.root_vel is None else R @ p.root_vel,
                        p.root_ang_vel,
                        None if p.qdot is None else p.qdot.copy()))
    return out


def test_window_dims(biped):
    assert observation_dim(biped) == 140
    assert state_dim(biped) == 196
    poses = window_poses(biped, 5)
    assert build_observation_window(poses, biped).shape == (140,)
    assert build_state_window(poses[:4], biped).shape == (196,)
    assert observation_dim(biped, ObservationVariant.LINK_VEL) == 5 * 49
    assert observation_dim(biped, ObservationVariant.JOINT) == 5 * 16
    assert observation_dim(biped, ObservationVariant.JOINT_VEL) == 5 * 25


def test_identical_standing_frames_give_identical_blocks(biped):
    poses = window_poses(biped, 5, moving=False)
    w = build_observation_window(poses, biped).reshape(5, -1)
    for k in range(4):
        assert np.allclose(w[k], w[4])
    # root-relative root position is the torso feature pair of the last block
    assert np.allclose(w[4][:2], 0.0)


def test_window_invariance_translation_and_heading(biped):
    poses = window_poses(biped, 5)
    base = build_observation_window(poses, biped)
    shifted = build_observation_window(rotate_translate(poses, 0.0, np.array([10.0, 0.0])), biped)
    assert np.max(np.abs(base - shifted)) < 1e-9
    rotated = build_observation_window(rotate_translate(poses, 0.77, np.array([-3.0, 2.0])), biped)
    assert np.max(np.abs(base - rotated)) < 1e-9
    # state windows share the invariance (velocities rotate too)
    sbase = build_state_window(poses[:4], biped)
    srot = build_state_window(rotate_translate(poses, -1.3, np.array([5.0, 1.0]))[:4], biped)
    assert np.max(np.abs(sbase - srot)) < 1e-9


def test_window_cos_sin_unit_norm(biped):
    poses = window_poses(biped, 5)
    w = build_observation_window(poses, biped).reshape(5, 7, 4)
    norm = w[:, :, 2] ** 2 + w[:, :, 3] ** 2
    assert np.max(np.abs(norm - 1.0)) < 1e-9
    last_root = w[4, 0]
    assert np.allclose(last_root[:2], 0.0, atol=1e-12)
    assert np.allclose(last_root[2:], [1.0, 0.0], atol=1e-12)


def test_state_window_static_zero_velocity(biped):
    poses = window_poses(biped, 4, moving=False)
    for p in poses:
        p.root_vel = np.zeros(2)
        p.root_ang_vel = 0.0
        p.qdot = np.zeros(6)
    w = build_state_window(poses, biped).reshape(4, 7, 7)
    assert np.allclose(w[:, :, 4:], 0.0)


def test_state_window_uniform_translation_velocity(biped):
    v = np.array([0.7, -0.2])
    poses = []
    for k in range(4):
        poses.append(Pose(np.array([0.0, 1.2]) + v * k / 30.0, 0.0, np.zeros(6),
                          root_vel=v.copy(), root_ang_vel=0.0, qdot=np.zeros(6)))
    w = build_state_window(poses, biped).reshape(4, 7, 7)
    assert np.allclose(w[:, :, 4:6], v, atol=1e-12)
    assert np.allclose(w[:, :, 6], 0.0)


def test_state_window_velocities_match_finite_differences(biped):
    # analytic trajectory: window velocity features vs FD of link positions
    from planarmimic.physics import link_world_state
    from planarmimic.motion.windows import _pose_to_state

    def pose_at(t):
        q = 0.25 * np.sin(1.3 * t + np.arange(6))
        qd = 0.25 * 1.3 * np.cos(1.3 * t + np.arange(6))
        root = np.array([0.4 * t, 1.2 + 0.02 * np.sin(2 * t)])
        rv = np.array([0.4, 0.04 * np.cos(2 * t)])
        th, thd = 0.1 * np.sin(t), 0.1 * np.cos(t)
        return Pose(root, th, q, rv, thd, qd)

    ts = [0.0, 1 / 30, 2 / 30, 3 / 30]
    poses = [pose_at(t) for t in ts]
    w = build_state_window(poses, biped).reshape(4, 7, 7)
    h = 1e-6
    ref = poses[-1]
    c, s = np.cos(ref.root_theta), np.sin(ref.root_theta)
    Rinv = np.array([[c, s], [-s, c]])
    for k, t in enumerate(ts):
        p0, _ = link_world_state(biped, _pose_to_state(biped, pose_at(t - h)))[0:2]
        p1, _ = link_world_state(biped, _pose_to_state(biped, pose_at(t + h)))[0:2]
        fd = (p1 - p0) / (2 * h) @ Rinv.T
        assert np.max(np.abs(fd - w[k, :, 4:6])) < 1e-6


def test_window_frame_count_enforced(biped):
    poses = window_poses(biped, 4)
    with pytest.raises(ClipError):
        build_observation_window(poses, biped)
    with pytest.raises(ClipError):
        build_state_window(poses[:3], biped)


# ---------------------------------------------------------------------------
# procedural clips
# ---------------------------------------------------------------------------

def test_stand_template_all_frames_identical(biped):
    clip = generate_procedural_clips({"template": "stand"}, biped)[0]
    q0 = clip.frames[0].q
    for f in clip.frames:
        assert np.array_equal(f.q, q0)
        assert np.array_equal(f.root_pos, clip.frames[0].root_pos)
    assert clip.cyclic


def test_walk_template_30_frames_and_loop(biped):
    clip = generate_procedural_clips({"template": "walk", "period": 1.0}, biped)[0]
    assert clip.n_frames == 30
    assert clip.cyclic
    assert clip.loop_gap() <= clip.loop_tolerance
    assert clip.cycle_root_offset[0] == pytest.approx(0.4)


def test_walk_stance_foot_planted(biped):
    from planarmimic.physics import forward_kinematics
    from planarmimic.motion.windows import _pose_to_state
    clip = generate_procedural_clips({"template": "walk", "period": 1.0, "speed": 0.4}, biped)[0]
    # left ankle world x should be constant over its stance frames (phase < 0.6)
    ankle_x = []
    for k in range(0, 17):
        pos, theta = forward_kinematics(biped, _pose_to_state(biped, clip.frames[k]))
        ankle = pos[3] + np.array([np.cos(theta[3]), np.sin(theta[3])]) * 0  # foot COM
        # ankle pivot = foot COM + R(theta) * (-0.04, 0.03)
        c, s = np.cos(theta[3]), np.sin(theta[3])
        ankle = pos[3] + np.array([c * -0.04 - s * 0.03, s * -0.04 + c * 0.03])
        ankle_x.append(ankle[0])
    assert np.max(np.abs(np.diff(ankle_x))) < 1e-6


def test_hop_amplitude_zero_is_stand(biped):
    hop = generate_procedural_clips({"template": "hop", "amplitude": 0.0}, biped)[0]
    stand = stand_pose(biped)
    for f in hop.frames:
        assert np.allclose(f.q, stand.q, atol=1e-12)


def test_crouch_to_stand_non_cyclic(biped):
    clip = generate_procedural_clips({"template": "crouch_to_stand"}, biped)[0]
    assert not clip.cyclic
    assert clip.frames[0].root_pos[1] < clip.frames[-1].root_pos[1]
    assert clip.frames[-1].root_theta == pytest.approx(0.0, abs=1e-9)


def test_unknown_template_raises(biped):
    with pytest.raises(ClipError, match="unknown procedural template"):
        generate_procedural_clips({"template": "backflip"}, biped)


def test_clip_json_round_trip(tmp_path, biped):
    clip = generate_procedural_clips({"template": "walk"}, biped)[0]
    path = tmp_path / "walk.json"
    save_clip(clip, path)
    loaded = load_clip(path)
    assert loaded.name == clip.name
    assert loaded.cyclic == clip.cyclic
    assert loaded.n_frames == clip.n_frames
    for a, b in zip(loaded.frames, clip.frames):
        assert np.allclose(a.q, b.q)
        assert np.allclose(a.root_pos, b.root_pos)
    assert np.allclose(loaded.cycle_root_offset, clip.cycle_root_offset)


def test_clip_validation():
    with pytest.raises(ClipError, match="at least 2"):
        MotionClip(name="x", frames=[Pose(np.zeros(2), 0.0, np.zeros(6))],
                   cyclic=False, joints=JOINTS)
    bad = [Pose(np.zeros(2), 0.0, np.zeros(6)), Pose(np.zeros(2), np.nan, np.zeros(6))]
    with pytest.raises(ClipError, match="non-finite"):
        MotionClip(name="x", frames=bad, cyclic=False, joints=JOINTS)
    # cyclic loop gap beyond tolerance
    far = [Pose(np.zeros(2), 0.0, np.zeros(6)), Pose(np.zeros(2), 0.0, np.full(6, 1.0))]
    with pytest.raises(ClipError, match="loop gap"):
        MotionClip(name="x", frames=far, cyclic=True, joints=JOINTS, loop_tolerance=0.1)


def test_wrap_angle():
    assert wrap_angle(np.pi + 0.1) == pytest.approx(-np.pi + 0.1)
    assert wrap_angle(-np.pi - 0.1) == pytest.approx(np.pi - 0.1)
    assert wrap_angle(0.3) == pytest.approx(0.3)
