import math

import numpy as np
import pytest

from mrio.config import Config
from mrio.frontend import GateConfig, range_gate
from mrio.geometry import Pose
from mrio.frontend import Extrinsics
from mrio.simulator import (
    NOISELESS,
    PRESETS,
    ClutterModel,
    ConstantBias,
    LinearDrift,
    RadarSpec,
    RandomWalk,
    Segment,
    TrajectoryProfile,
    TunnelWorld,
    generate_truth,
    loop_profile,
    simulate,
    synth_imu,
    synth_radar,
    world_from_truth,
)


def test_uniform_motion():
    tr = generate_truth(TrajectoryProfile((Segment(10.0),), 200.0, 10.0, v0=1.0))
    assert tr.x[-1] == pytest.approx(10.0, abs=1e-9)
    assert tr.y[-1] == pytest.approx(0.0, abs=1e-12)


def test_full_turn():
    tr = generate_truth(TrajectoryProfile((Segment(10.0, 0.0, 2 * math.pi / 10),), 200.0, 10.0, v0=1.0))
    assert math.remainder(tr.theta[-1], 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


def _fine_integrator(profile, factor=10):
    """Independent oracle: Euler at a 10x finer step, sampled at the coarse stamps."""
    dt = 1.0 / (profile.imu_rate * factor)
    x = y = 0.0
    v, th = profile.v0, profile.heading0
    out = [(x, y)]
    for seg in profile.segments:
        for i in range(round(seg.duration / dt)):
            x += v * math.cos(th) * dt
            y += v * math.sin(th) * dt
            v += seg.accel * dt
            th += seg.yaw_rate * dt
            if (i + 1) % factor == 0:
                out.append((x, y))
    return np.array(out)


def test_truth_against_finer_integrator():
    # first-order scheme: the bound holds for moderate turn rates and accelerations
    prof = TrajectoryProfile((Segment(4.0, 0.1), Segment(3.0, 0.0, 0.1), Segment(2.0, -0.1, -0.1),
                              Segment(1.0)), 200.0, 10.0)
    tr = generate_truth(prof)
    fine = _fine_integrator(prof)
    assert fine.shape == (len(tr), 2)
    assert np.max(np.hypot(tr.x - fine[:, 0], tr.y - fine[:, 1])) < 1e-3


def test_loop_is_about_100m_and_closes():
    tr = generate_truth(loop_profile())
    assert 95 < tr.path_length() < 105
    assert tr.v.max() <= 1.5
    assert math.remainder(tr.theta[-1] - tr.theta[0], 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


def test_profile_validation():
    with pytest.raises(ValueError):
        TrajectoryProfile((Segment(0.0),))
    with pytest.raises(ValueError):
        TrajectoryProfile((Segment(1.0),), imu_rate=5.0, radar_rate=10.0)


def _still(T=12.0):
    return generate_truth(TrajectoryProfile((Segment(T),), 200.0, 10.0))


def test_constant_bias_noiseless_stationary():
    imu = synth_imu(_still(), ConstantBias(0.2), NOISELESS, 0)
    np.testing.assert_array_equal(imu.a_meas, 0.2)


def test_linear_drift():
    tr = _still()
    imu = synth_imu(tr, LinearDrift(0.0, 0.01), NOISELESS, 0)
    k = int(np.argmin(np.abs(tr.t - 10.0)))
    assert imu.bias[k] == pytest.approx(0.1, abs=1e-12)


def test_random_walk_variance():
    t = np.linspace(0.0, 20.0, 201)
    psd = 0.004
    finals = [RandomWalk(0.0, psd).sample(t, np.random.default_rng(s))[-1] for s in range(1000)]
    assert np.var(finals) == pytest.approx(psd * 20.0, rel=0.10)


def test_accel_noise_level():
    preset = PRESETS["px4"]
    imu = synth_imu(_still(60.0), ConstantBias(0.0), preset, 3)
    assert np.std(imu.a_meas) == pytest.approx(preset.accel_noise_density * math.sqrt(200.0), rel=0.05)


def test_seed_determinism():
    cfg = Config()
    cfg.sim.straight_a, cfg.sim.straight_b = 3.0, 2.0
    a, b = simulate(cfg, 7), simulate(cfg, 7)
    np.testing.assert_array_equal(a.imu.a_meas, b.imu.a_meas)
    np.testing.assert_array_equal(a.imu.yaw_ahrs, b.imu.yaw_ahrs)
    assert len(a.radar.scans) == len(b.radar.scans)
    for sa, sb in zip(a.radar.scans, b.radar.scans):
        assert np.array_equal(sa.points, sb.points) and np.array_equal(sa.doppler, sb.doppler)
    c = simulate(cfg, 8)
    assert not np.array_equal(a.imu.a_meas, c.imu.a_meas)


def _line_world():
    return TunnelWorld(np.array([[-20.0, 0.0], [40.0, 0.0]]))


def test_doppler_dead_ahead():
    tr = generate_truth(TrajectoryProfile((Segment(1.0),), 200.0, 10.0, v0=1.0))
    world = TunnelWorld(np.array([[-5.0, 0.0], [5.0, 0.0]]), half_width=2.0, wall_point_spacing=0.25)
    spec = RadarSpec(Extrinsics(1, Pose.identity()), math.radians(60.0), 10.0)
    out = synth_radar(tr, world, [spec], ClutterModel(0.0), 0.03, seed=0)
    scan = out.scans[0]
    u = scan.points / np.linalg.norm(scan.points, axis=1)[:, None]
    ahead = np.argmax(u[:, 0])
    assert u[ahead, 0] > 0.999
    assert abs(scan.doppler[ahead] + 1.0) <= 3 * 0.03 + 1e-3


def test_doppler_abeam_is_zero():
    tr = generate_truth(TrajectoryProfile((Segment(1.0),), 200.0, 10.0, v0=1.0))
    world = TunnelWorld(np.array([[-10.0, 0.0], [10.0, 0.0]]), wall_point_spacing=0.25)
    spec = RadarSpec(Extrinsics(2, Pose.from_xyz_rpy(0, 0, 0, yaw=math.pi / 2)), math.radians(60.0), 10.0)
    scan = synth_radar(tr, world, [spec], ClutterModel(0.0), 0.0, seed=0).scans[0]
    u = scan.points / np.linalg.norm(scan.points, axis=1)[:, None]
    abeam = np.argmax(u[:, 0])
    assert u[abeam, 0] == pytest.approx(1.0, abs=1e-9)
    assert scan.doppler[abeam] == pytest.approx(0.0, abs=1e-9)


@pytest.fixture(scope="module")
def short_sim():
    cfg = Config()
    cfg.sim.straight_a, cfg.sim.straight_b = 6.0, 3.0
    return cfg, simulate(cfg, 11)


def test_doppler_consistency(short_sim):
    cfg, sim = short_sim
    sigma = cfg.sim.doppler_sigma
    for scan, mask, v in zip(sim.radar.scans, sim.radar.clutter, sim.radar.velocity):
        pts, vd = scan.points[~mask], scan.doppler[~mask]
        u = pts / np.linalg.norm(pts, axis=1)[:, None]
        assert np.all(np.abs(vd + u @ v) <= 5 * sigma)


def test_targets_lie_on_surfaces_without_clutter():
    cfg = Config()
    cfg.sim.straight_a, cfg.sim.straight_b = 6.0, 3.0
    cfg.sim.clutter_rate = 0.0
    sim = simulate(cfg, 2)
    surface = sim.world.surface_points()
    rig = cfg.extrinsics()
    for scan in sim.radar.scans[::17]:
        k = int(round(scan.stamp * 200))
        body = Pose.from_xyz_rpy(sim.truth.x[k], sim.truth.y[k], 0, 0, 0, sim.truth.theta[k])
        world = (body @ rig[scan.radar_id].mount)
        pts = scan.points @ world.matrix.T + world.translation
        d = np.min(np.linalg.norm(pts[:, None, :] - surface[None, :, :], axis=2), axis=1)
        assert np.all(d < 1e-9)


def test_gate_removes_all_clutter(short_sim):
    _, sim = short_sim
    total = 0
    for scan, mask in zip(sim.radar.scans, sim.radar.clutter):
        total += mask.sum()
        kept = range_gate(scan, GateConfig(0.5, 8.0))
        clutter_pts = {tuple(p) for p in scan.points[mask]}
        assert not clutter_pts & {tuple(p) for p in kept.points}
    assert total > 100


def test_world_surfaces():
    tr = generate_truth(TrajectoryProfile((Segment(10.0),), 200.0, 10.0, v0=1.0))
    w = world_from_truth(tr, half_width=2.0, spacing=0.5, ceiling=3.0)
    pts = w.surface_points()
    on_wall = np.isclose(np.abs(pts[:, 1]), 2.0)
    on_floor_or_ceiling = np.isclose(pts[:, 2], 0.0) | np.isclose(pts[:, 2], 3.0)
    assert np.all(on_wall | on_floor_or_ceiling)
    with pytest.raises(ValueError):
        TunnelWorld(np.zeros((2, 2)), half_width=0.0)


def test_slope_adds_gravity_component():
    from mrio.simulator import GRAVITY

    prof = TrajectoryProfile((Segment(2.0, 0.0, 0.0, math.radians(5.0)),), 200.0, 10.0)
    imu = synth_imu(generate_truth(prof), ConstantBias(0.0), NOISELESS, 0)
    np.testing.assert_allclose(imu.a_meas, GRAVITY * math.sin(math.radians(5.0)))
