"""Stage-I: bias-aware EKF on forward velocity and accelerometer offset.

State ``[v, b]``. ``b`` is the additive offset contained in the forward
accelerometer reading, so the specific force used for propagation is
``a_meas - b``. The offset follows a random walk; radar least-squares
forward speed is the only measurement.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import DtTooLarge, NonMonotonicTime
from .kalman import joseph_update, symmetrize

MAX_DT = 0.1
_H = np.array([[1.0, 0.0]])


@dataclass(frozen=True)
class Stage1Config:
    q_v: float = 1e-4  # velocity process noise PSD, (m/s^2)^2 s
    q_b: float = 1e-4  # offset random-walk PSD, (m/s^3)^2 s
    r_v: float = 1e-4  # fallback radar speed variance, (m/s)^2
    smoothing_alpha: float = 0.6
    init_var_v: float = 1.0
    init_var_b: float = 0.25

    def __post_init__(self):
        for name in ("q_v", "q_b", "r_v", "init_var_v", "init_var_b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.smoothing_alpha <= 1.0:
            raise ValueError("smoothing_alpha must lie in (0, 1]")


@dataclass(frozen=True)
class Stage1State:
    v: float = 0.0
    b: float = 0.0
    cov: np.ndarray = field(default_factory=lambda: np.diag([1.0, 0.25]))

    @classmethod
    def initial(cls, cfg: Stage1Config, v=0.0, b=0.0):
        return cls(v, b, np.diag([cfg.init_var_v, cfg.init_var_b]))

    @property
    def x(self):
        return np.array([self.v, self.b])


@dataclass(frozen=True)
class CorrectedAccel:
    stamp: float
    a_cc: float


def predict(s: Stage1State, a_meas, dt, cfg: Stage1Config) -> Stage1State:
    if not dt > 0.0:
        raise NonMonotonicTime(f"stage-1 predict with dt={dt}")
    if dt > MAX_DT:
        raise DtTooLarge(f"stage-1 predict with dt={dt} > {MAX_DT}")
    F = np.array([[1.0, -dt], [0.0, 1.0]])
    Q = np.diag([cfg.q_v * dt, cfg.q_b * dt])
    cov = symmetrize(F @ s.cov @ F.T + Q)
    return Stage1State(s.v + (a_meas - s.b) * dt, s.b, cov)


def update(s: Stage1State, v_lsq, r_v) -> Stage1State:
    if not np.isfinite(v_lsq):
        raise ValueError(f"non-finite radar speed {v_lsq}")
    x, P, _, _ = joseph_update(s.x, s.cov, _H, np.array([[r_v]]), np.array([v_lsq - s.v]))
    return Stage1State(float(x[0]), float(x[1]), P)


def corrected_accel(v_now, v_prev, t_now, t_prev, prev_smoothed, alpha) -> CorrectedAccel:
    """Finite-difference acceleration, smoothed with an exponential moving average.

    ``v_prev``/``t_prev`` of ``None`` marks the first sample, which yields 0.
    """
    if t_prev is None or v_prev is None:
        return CorrectedAccel(t_now, 0.0)
    if not t_now > t_prev:
        raise NonMonotonicTime(f"corrected_accel with t_now={t_now} <= t_prev={t_prev}")
    raw = (v_now - v_prev) / (t_now - t_prev)
    return CorrectedAccel(t_now, alpha * raw + (1.0 - alpha) * prev_smoothed)


class BiasEstimator:
    """Sequential Stage-I filter plus the corrected-acceleration bookkeeping.

    After each radar update the corrected acceleration is the slope between
    the refined velocity and the previous radar speed.
    """

    def __init__(self, cfg: Stage1Config, state: Stage1State | None = None):
        self.cfg = cfg
        self.state = state if state is not None else Stage1State.initial(cfg)
        self.t_prev = None
        self.v_prev = None
        self.accel = CorrectedAccel(0.0, 0.0)

    def predict(self, a_meas, dt):
        self.state = predict(self.state, a_meas, dt, self.cfg)

    def update(self, t, v_lsq, r_v=None) -> CorrectedAccel:
        r_v = self.cfg.r_v if r_v is None else r_v
        self.state = update(self.state, v_lsq, r_v)
        self.accel = corrected_accel(self.state.v, self.v_prev, t, self.t_prev,
                                     self.accel.a_cc, self.cfg.smoothing_alpha)
        self.t_prev, self.v_prev = t, v_lsq
        return self.accel


def run_stage1(imu_stream, radar_speed_stream, cfg: Stage1Config, state=None):
    """Run Stage-I over time-ordered streams.

    ``imu_stream`` yields ``(t, a_meas)``; ``radar_speed_stream`` yields
    ``(t, v)`` or ``(t, v, variance)``. The filter predicts at every IMU
    sample and updates with each radar speed using the state at the latest
    IMU time, ties going to the IMU. Returns ``(trace, accels)`` where
    ``trace`` holds one ``(t, Stage1State)`` per IMU sample (after any
    updates landing on that sample) and ``accels`` one
    :class:`CorrectedAccel` per radar update.
    """
    est = BiasEstimator(cfg, state)
    events = heapq.merge(
        ((float(e[0]), 0, i, e) for i, e in enumerate(imu_stream)),
        ((float(e[0]), 1, i, e) for i, e in enumerate(radar_speed_stream)),
    )
    trace, accels = [], []
    t_imu = None
    last = {0: None, 1: None}
    for t, kind, idx, rec in events:
        if last[kind] is not None and t < last[kind]:
            stream = "imu" if kind == 0 else "radar"
            raise NonMonotonicTime(f"{stream} stream goes back in time at position {idx}")
        last[kind] = t
        if kind == 0:
            if t_imu is not None:
                if t == t_imu:
                    continue
                try:
                    est.predict(float(rec[1]), t - t_imu)
                except (DtTooLarge, NonMonotonicTime) as exc:
                    raise type(exc)(f"imu stream position {idx}: {exc}") from exc
            t_imu = t
            trace.append((t, est.state))
        else:
            if t_imu is None:
                continue
            r_v = float(rec[2]) if len(rec) > 2 else None
            accels.append(est.update(t, float(rec[1]), r_v))
            trace[-1] = (trace[-1][0], est.state)
    return trace, accels
