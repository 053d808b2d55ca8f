"""Multi-rate two-stage fusion loop.

Per IMU sample both filters predict. Radar scans stamped inside the current
IMU interval are collected and handled as one epoch once the next IMU
sample arrives (or the stream ends): gate, move to body, merge, solve the
Doppler least squares, refine speed and offset in Stage-I, derive the
corrected acceleration, update Stage-II with [AHRS yaw, radar speed] and
register the merged scan into the map.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import stage2
from .config import Config
from .dataset import ImuRecord, RadarRecord
from .ego_velocity import build_system, forward_speed, solve
from .errors import (DegenerateGeometry, InsufficientTargets, NonMonotonicTime,
                     SingularInnovationCovariance, UnknownRadarId)
from .frontend import BodyScan, preprocess, ransac_inliers
from .geometry import yaw_from_quat
from .mapping import GlobalMap, pose_to_transform
from .stage1 import BiasEstimator

log = logging.getLogger(__name__)

# chi-square(2) central 95% band
NIS_BAND = (0.05063561596857975, 7.377758908227871)


@dataclass
class Diagnostics:
    n_imu: int = 0
    n_radar_scans: int = 0
    n_epochs: int = 0
    n_updates: int = 0
    n_zupt: int = 0
    skipped_insufficient: int = 0
    skipped_degenerate: int = 0
    skipped_singular: int = 0
    skipped_gated: int = 0
    innovations: list = field(default_factory=list)
    lateral_speed: list = field(default_factory=list)
    events: list = field(default_factory=list)  # (t, message) for skipped epochs

    def summary(self):
        nis = np.array([r.nis for r in self.innovations])
        lo, hi = NIS_BAND
        lat = np.asarray(self.lateral_speed)
        return {
            "n_imu": self.n_imu,
            "n_radar_scans": self.n_radar_scans,
            "n_epochs": self.n_epochs,
            "n_updates": self.n_updates,
            "n_zupt": self.n_zupt,
            "skipped_insufficient": self.skipped_insufficient,
            "skipped_degenerate": self.skipped_degenerate,
            "skipped_singular": self.skipped_singular,
            "skipped_gated": self.skipped_gated,
            "nis_mean": float(nis.mean()) if len(nis) else 0.0,
            "nis_in_band": float(np.mean((nis >= lo) & (nis <= hi))) if len(nis) else 0.0,
            "lateral_speed_rms": float(np.sqrt(np.mean(lat**2))) if len(lat) else 0.0,
        }


@dataclass
class PipelineResult:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    gmap: GlobalMap
    diagnostics: Diagnostics
    stage1_trace: list  # (t, v, b, var_v, var_b, a_cc) per IMU sample

    @property
    def final(self):
        return float(self.x[-1]), float(self.y[-1]), float(self.theta[-1])


class MrioPipeline:
    def __init__(self, cfg: Config, baseline=None):
        if baseline not in (None, "no-stage1"):
            raise ValueError(f"unknown baseline {baseline!r}")
        self.cfg = cfg
        self.baseline = baseline
        self.rig = cfg.extrinsics()
        self.stage1 = BiasEstimator(cfg.stage1)
        s2 = cfg.stage2
        self.q_accel = s2.q_accel_raw if baseline == "no-stage1" else s2.q_accel
        self.state = None
        self.gmap = GlobalMap(cfg.mapping.voxel_size)
        self.diag = Diagnostics()
        self.t_imu = None
        self.t_start = None
        self.t_last_radar = None
        self.quat = np.array([1.0, 0.0, 0.0, 0.0])
        self.pending = []
        self.trace = []
        self.s1_trace = []

    # -- IMU path --------------------------------------------------------
    def on_imu(self, rec: ImuRecord):
        self.flush()
        self.diag.n_imu += 1
        self.quat = rec.quaternion
        if self.state is None:
            s2 = self.cfg.stage2
            self.state = stage2.Stage2State(0.0, 0.0, 0.0, yaw_from_quat(self.quat), np.diag(s2.init_cov))
            self.t_imu = self.t_start = rec.t
            self._record()
            return
        dt = rec.t - self.t_imu
        if dt < 0:
            raise NonMonotonicTime(f"imu t={rec.t} before t={self.t_imu}")
        if dt == 0:
            return
        a_in = rec.ax if self.baseline == "no-stage1" else None
        n_sub = max(1, math.ceil(dt / stage2.MAX_DT - 1e-9))
        h = dt / n_sub
        s2 = self.cfg.stage2
        for _ in range(n_sub):
            self.stage1.predict(rec.ax, h)
            a = self.stage1.accel.a_cc if a_in is None else a_in
            q = stage2.process_noise(h, s2.q_pos, self.q_accel, s2.q_gyro)
            self.state = stage2.predict(self.state, a, rec.gz, h, q)
        self.t_imu = rec.t
        self._maybe_zupt(a)
        self._record()

    def _maybe_zupt(self, a):
        s2 = self.cfg.stage2
        since = self.t_last_radar if self.t_last_radar is not None else self.t_start
        if abs(a) < s2.zupt_accel and self.t_imu - since > s2.zupt_idle:
            try:
                self.state, _ = stage2.zero_velocity_update(self.state, s2.zupt_sigma, self.t_imu)
                self.diag.n_zupt += 1
            except SingularInnovationCovariance:
                pass

    def _record(self):
        s = self.state
        self.trace.append((self.t_imu, s.x, s.y, s.v, s.theta))
        st = self.stage1.state
        self.s1_trace.append((self.t_imu, st.v, st.b, float(st.cov[0, 0]), float(st.cov[1, 1]),
                              self.stage1.accel.a_cc))

    # -- radar path ------------------------------------------------------
    def on_radar(self, rec: RadarRecord):
        if rec.radar_id not in self.rig:
            raise UnknownRadarId(rec.radar_id)
        self.diag.n_radar_scans += 1
        if self.state is None:
            log.debug("radar scan at t=%.3f before first IMU sample dropped", rec.t)
            return
        self.pending.append(rec.scan)

    def flush(self):
        if not self.pending:
            return
        scans, self.pending = self.pending, []
        merged = preprocess(scans, self.rig, self.cfg.gate)
        if self.cfg.ego.ransac and len(merged) >= 3:
            keep = ransac_inliers(merged)
            merged = BodyScan(merged.stamp, merged.positions[keep], merged.doppler[keep],
                              merged.los[keep], merged.radar_ids[keep])
        self._epoch(merged)

    def _epoch(self, merged):
        d = self.diag
        d.n_epochs += 1
        t = merged.stamp
        ego_cfg = self.cfg.ego
        try:
            ego = solve(build_system(merged), ego_cfg.min_targets, ego_cfg.max_condition)
        except InsufficientTargets as exc:
            d.skipped_insufficient += 1
            d.events.append((t, f"insufficient targets: {exc}"))
            ego = None
        except DegenerateGeometry as exc:
            d.skipped_degenerate += 1
            d.events.append((t, f"degenerate geometry: {exc}"))
            ego = None
        if ego is not None:
            self.t_last_radar = t
            v_r = forward_speed(ego)
            var = ego.forward_variance(ego_cfg.doppler_floor)
            d.lateral_speed.append(float(ego.v[1]))
            self.stage1.update(t, v_r, var)
            r = np.diag([self.cfg.stage2.r_theta, var])
            z = stage2.Stage2Measurement(t, yaw_from_quat(self.quat), v_r, r)
            gate = self.cfg.stage2.nis_gate
            nis = stage2.normalized_innovation(self.state, z)
            if gate > 0 and nis > gate:
                d.skipped_gated += 1
                d.events.append((t, f"innovation rejected, NIS {nis:.1f} > {gate}"))
            else:
                try:
                    self.state, rec = stage2.update(self.state, z)
                    d.innovations.append(rec)
                    d.n_updates += 1
                except SingularInnovationCovariance as exc:
                    d.skipped_singular += 1
                    d.events.append((t, str(exc)))
            if self.s1_trace:
                self._replace_last_record()
        s = self.state
        attitude = self.quat if self.cfg.mapping.use_attitude else None
        self.gmap.register(pose_to_transform(s.x, s.y, s.theta, attitude), merged)

    def _replace_last_record(self):
        self.trace.pop()
        self.s1_trace.pop()
        self._record()

    def finish(self) -> PipelineResult:
        self.flush()
        tr = np.array(self.trace, dtype=float).reshape(-1, 5)
        return PipelineResult(tr[:, 0], tr[:, 1], tr[:, 2], tr[:, 3], tr[:, 4], self.gmap, self.diag,
                              self.s1_trace)


def run_pipeline(events, cfg: Config, baseline=None) -> PipelineResult:
    """Run the full odometry and mapping loop over a time-ordered event list."""
    pipe = MrioPipeline(cfg, baseline)
    for ev in events:
        if isinstance(ev, ImuRecord):
            pipe.on_imu(ev)
        elif isinstance(ev, RadarRecord):
            pipe.on_radar(ev)
        else:
            raise TypeError(f"unexpected event {type(ev).__name__}")
    return pipe.finish()
