import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrio import stage2
from mrio.config import Config
from mrio.dataset import ImuRecord, RadarRecord
from mrio.errors import DtTooLarge, NonMonotonicTime, SingularInnovationCovariance, UnknownRadarId
from mrio.frontend import RadarScan
from mrio.pipeline import NIS_BAND, MrioPipeline, run_pipeline
from mrio.simulator import PX4, ConstantBias, Segment, TrajectoryProfile

from conftest import run_profile

Q0 = np.zeros((4, 4))


def state(x=0.0, y=0.0, v=0.0, th=0.0, cov=None):
    return stage2.Stage2State(x, y, v, th, np.eye(4) if cov is None else cov)


def meas(theta, v, r=None):
    return stage2.Stage2Measurement(0.0, theta, v, np.eye(2) if r is None else r)


def test_predict_straight():
    s = stage2.predict(state(2.0, 3.0, 1.0, 0.0), 0.0, 0.0, 0.1, Q0)
    np.testing.assert_allclose(s.vector, [2.1, 3.0, 1.0, 0.0], atol=1e-15)


def test_predict_north():
    s = stage2.predict(state(2.0, 3.0, 1.0, math.pi / 2), 0.0, 0.0, 0.1, Q0)
    assert s.x == pytest.approx(2.0, abs=1e-15)
    assert s.y == pytest.approx(3.1)


def test_predict_wraps_heading():
    s = stage2.predict(state(th=3.1), 0.0, 1.0, 0.1, Q0)
    assert s.theta == pytest.approx(3.2 - 2 * math.pi)


@pytest.mark.parametrize("dt, exc", [(0.0, NonMonotonicTime), (0.11, DtTooLarge)])
def test_predict_dt_guard(dt, exc):
    with pytest.raises(exc):
        stage2.predict(state(), 0.0, 0.0, dt, Q0)


def test_jacobian_matches_central_differences():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        X = np.array([*rng.uniform(-50, 50, 2), rng.uniform(-2, 2), rng.uniform(-math.pi, math.pi)])
        a, w, dt = rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1e-3, 0.1)
        J = np.empty((4, 4))
        h = 1e-6
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            J[:, j] = (stage2.transition(X + e, a, w, dt) - stage2.transition(X - e, a, w, dt)) / (2 * h)
        worst = max(worst, np.abs(J - stage2.jacobian(X, dt)).max())
    assert worst < 1e-6


@pytest.mark.parametrize(
    "th, th_imu, v, v_r, expected",
    [
        (0.4, 0.4, 1.0, 1.0, (0.0, 0.0)),
        (3.1, -3.1, 0.0, 0.0, (2 * math.pi - 6.2, 0.0)),
        (0.0, 0.0, 1.0, 1.2, (0.0, 0.2)),
    ],
)
def test_innovation(th, th_imu, v, v_r, expected):
    nu = stage2.innovation(state(v=v, th=th), meas(th_imu, v_r))
    np.testing.assert_allclose(nu, expected, atol=1e-12)


def test_innovation_wrap_value():
    assert stage2.innovation(state(th=3.1), meas(-3.1, 0.0))[0] == pytest.approx(0.0832, abs=1e-4)


def test_update_uninformative():
    prior = state(1.0, 2.0, 0.5, 0.3)
    post, _ = stage2.update(prior, meas(0.8, 1.5, 1e12 * np.eye(2)))
    np.testing.assert_allclose(post.vector, prior.vector, atol=1e-6)
    np.testing.assert_allclose(post.cov, prior.cov, atol=1e-6)


def test_update_perfect_prior():
    prior = state(1.0, 2.0, 0.5, 0.3, cov=1e-12 * np.eye(4))
    post, _ = stage2.update(prior, meas(0.8, 1.5))
    np.testing.assert_allclose(post.vector, prior.vector, atol=1e-6)


def test_update_unit_covariances():
    prior = state(1.0, 2.0, 0.5, 0.3)
    post, rec = stage2.update(prior, meas(0.5, 1.5))
    # K = H^T / 2, P_post = I - H^T H / 2
    np.testing.assert_allclose(post.vector, [1.0, 2.0, 1.0, 0.4], atol=1e-12)
    np.testing.assert_allclose(post.cov, np.diag([1.0, 1.0, 0.5, 0.5]), atol=1e-12)
    np.testing.assert_allclose(rec.S, 2 * np.eye(2), atol=1e-12)
    assert rec.nis == pytest.approx((0.2**2 + 1.0) / 2)


def test_update_singular_innovation_covariance():
    cov = np.diag([1.0, 1.0, 0.0, 0.0])
    with pytest.raises(SingularInnovationCovariance):
        stage2.update(state(cov=cov), meas(0.0, 0.0, np.diag([1e-14, 1.0])))


def test_measurement_covariance_validated():
    with pytest.raises(ValueError):
        meas(0.0, 0.0, np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_zero_velocity_update():
    s, _ = stage2.zero_velocity_update(state(v=0.3, cov=np.eye(4) * 1e-2), 1e-3)
    assert abs(s.v) < 1e-4


psd4 = st.integers(0, 2**31).map(lambda seed: (lambda A: A @ A.T + 1e-9 * np.eye(4))(
    np.random.default_rng(seed).normal(size=(4, 4))))


@given(psd4, st.floats(-5, 5), st.floats(-5, 5), st.floats(1e-4, 10), st.floats(1e-4, 10))
def test_update_keeps_covariance_psd(P, th, v, r1, r2):
    post, _ = stage2.update(state(cov=P), meas(th, v, np.diag([r1, r2])))
    np.testing.assert_allclose(post.cov, post.cov.T, atol=1e-10)
    assert np.linalg.eigvalsh(post.cov).min() >= -1e-10
    assert -math.pi < post.theta <= math.pi


# --- pipeline -----------------------------------------------------------------


def test_stationary_run_stays_put():
    prof = TrajectoryProfile((Segment(20.0),), 200.0, 10.0)
    sim, res = run_profile(prof, centerline=[[-6.0, 0.0], [6.0, 0.0]])
    assert math.hypot(*res.final[:2]) < 1e-3


def test_straight_ten_metres():
    prof = TrajectoryProfile((Segment(4.0, 0.25), Segment(6.0), Segment(4.0, -0.25)), 200.0, 10.0)
    sim, res = run_profile(prof)
    assert sim.truth.x[-1] == pytest.approx(10.0, abs=1e-9)
    assert res.x[-1] == pytest.approx(10.0, abs=0.05)


def test_stationary_without_radar_uses_zupt():
    cfg = Config()
    events = [ImuRecord(k * 0.005, 0.01, 0, 9.8, 0, 0, 0, 1, 0, 0, 0) for k in range(800)]
    res = run_pipeline(events, cfg)
    assert res.diagnostics.n_zupt > 0
    assert abs(res.v[-1]) < 1e-3


def test_degenerate_epoch_degrades_to_prediction():
    cfg = Config()
    events = [ImuRecord(k * 0.005, 0.0, 0, 9.8, 0, 0, 0, 1, 0, 0, 0) for k in range(100)]
    scan = RadarScan(0.1, 1, [[2.0, 0.0, 0.0], [3.0, 0.0, 0.0], [4.0, 0.0, 0.0]], [0.0, 0.0, 0.0])
    few = RadarScan(0.2, 1, [[2.0, 0.0, 0.0]], [0.0])
    events[20:20] = [RadarRecord(0.1, 1, scan)]
    events[41:41] = [RadarRecord(0.2, 1, few)]
    res = run_pipeline(events, cfg)
    d = res.diagnostics
    assert d.skipped_degenerate == 1 and d.skipped_insufficient == 1 and d.n_updates == 0
    assert len(res.t) == 100
    assert [round(t, 3) for t, _ in d.events] == [0.1, 0.2]


def test_unknown_radar_id():
    events = [ImuRecord(0.0, 0, 0, 9.8, 0, 0, 0, 1, 0, 0, 0), RadarRecord(0.0, 42, RadarScan(0.0, 42))]
    with pytest.raises(UnknownRadarId, match="42"):
        run_pipeline(events, Config())


@pytest.fixture(scope="module")
def noisy_loop():
    cfg = Config()
    cfg.sim.bias = "none"
    from mrio.simulator import simulate

    sim = simulate(cfg, seed=5)
    return sim, run_pipeline(sim.events(), cfg)


def test_nis_consistency(noisy_loop):
    _, res = noisy_loop
    nis = np.array([r.nis for r in res.diagnostics.innovations])
    lo, hi = NIS_BAND
    assert len(nis) > 1000
    assert np.mean((nis >= lo) & (nis <= hi)) >= 0.90


def test_pose_trace_deterministic(noisy_loop):
    sim, res = noisy_loop
    cfg = Config()
    cfg.sim.bias = "none"
    again = run_pipeline(sim.events(), cfg)
    for name in ("t", "x", "y", "v", "theta"):
        assert np.array_equal(getattr(res, name), getattr(again, name))


def test_baseline_feeds_raw_acceleration():
    prof = TrajectoryProfile((Segment(1.0), Segment(4.0, 0.25), Segment(20.0)), 200.0, 10.0)
    sim, mrio = run_profile(prof, bias=ConstantBias(0.3), preset=PX4, doppler_sigma=0.03, seed=1)
    cfg = Config()
    assert MrioPipeline(cfg, "no-stage1").q_accel == cfg.stage2.q_accel_raw
    base = run_pipeline(sim.events(), cfg, "no-stage1")
    err_m = abs(mrio.x[-1] - sim.truth.x[-1])
    err_b = abs(base.x[-1] - sim.truth.x[-1])
    assert err_m < 0.5 < err_b
