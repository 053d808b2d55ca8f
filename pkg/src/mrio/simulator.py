"""Synthetic tunnel runs: ground truth, biased IMU and multi-radar Doppler scans.

Truth follows the planar unicycle model integrated with forward Euler at the
IMU rate. IMU sample ``k`` reports the acceleration and yaw rate applied
over the interval ending at ``t_k``, so a filter propagating sample ``k``
from ``t_{k-1}`` to ``t_k`` sees exactly the truth's inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import ImuRecord, RadarRecord, merge_streams
from .frontend import Extrinsics, RadarScan
from .geometry import Pose, compose, quat_from_euler, wrap_angle

GRAVITY = 9.80665
_MICRO_G = 1e-6 * GRAVITY


# --- trajectory -------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    duration: float
    accel: float = 0.0
    yaw_rate: float = 0.0
    slope: float = 0.0  # rad, nose-up positive; only feeds the accelerometer


@dataclass(frozen=True)
class TrajectoryProfile:
    segments: tuple
    imu_rate: float = 200.0
    radar_rate: float = 10.0
    v0: float = 0.0
    heading0: float = 0.0

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        if any(s.duration <= 0 for s in segs):
            raise ValueError("segment durations must be positive")
        if self.imu_rate <= 0 or self.radar_rate <= 0 or self.imu_rate < self.radar_rate:
            raise ValueError("need imu_rate >= radar_rate > 0")


@dataclass(frozen=True)
class Truth:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    theta: np.ndarray  # unwrapped
    accel: np.ndarray  # applied over [t_k, t_{k+1}]
    omega: np.ndarray
    slope: np.ndarray

    def __len__(self):
        return len(self.t)

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    def path_length(self):
        return float(np.sum(np.hypot(np.diff(self.x), np.diff(self.y))))


def generate_truth(profile: TrajectoryProfile) -> Truth:
    dt = 1.0 / profile.imu_rate
    counts = [max(1, round(s.duration * profile.imu_rate)) for s in profile.segments]
    accel = np.concatenate([np.full(n, s.accel) for n, s in zip(counts, profile.segments)])
    omega = np.concatenate([np.full(n, s.yaw_rate) for n, s in zip(counts, profile.segments)])
    slope = np.concatenate([np.full(n, s.slope) for n, s in zip(counts, profile.segments)])
    n = len(accel)
    v = np.empty(n + 1)
    th = np.empty(n + 1)
    x = np.empty(n + 1)
    y = np.empty(n + 1)
    v[0], th[0], x[0], y[0] = profile.v0, profile.heading0, 0.0, 0.0
    for k in range(n):
        x[k + 1] = x[k] + v[k] * math.cos(th[k]) * dt
        y[k + 1] = y[k] + v[k] * math.sin(th[k]) * dt
        v[k + 1] = v[k] + accel[k] * dt
        th[k + 1] = th[k] + omega[k] * dt
    # inputs for the final sample repeat the last interval
    accel = np.append(accel, accel[-1])
    omega = np.append(omega, omega[-1])
    slope = np.append(slope, slope[-1])
    return Truth(np.arange(n + 1) * dt, x, y, v, th, accel, omega, slope)


def loop_profile(speed=1.0, straight_a=28.0, straight_b=12.0, turn_radius=3.0, accel=0.25,
                 rest=1.0, imu_rate=200.0, radar_rate=10.0, heading=0.0, slope=0.0):
    """Rounded-rectangle loop: rest, speed up, four straights with left turns, slow down.

    The loop closes on itself; the final slow-down continues past the start
    by ``speed**2 / (2 accel)``. Turn rates are adjusted so each turn is
    exactly 90 degrees at the IMU step.
    """
    dt = 1.0 / imu_rate
    ramp = speed / accel
    ramp_dist = 0.5 * speed * ramp
    turn_steps = round(0.5 * math.pi * turn_radius / speed / dt)
    turn = Segment(turn_steps * dt, 0.0, 0.5 * math.pi / (turn_steps * dt), slope)
    segs = []
    if rest > 0:
        segs.append(Segment(rest))
    segs.append(Segment(ramp, accel, 0.0, slope))
    for i, length in enumerate((straight_a, straight_b, straight_a, straight_b)):
        cruise = length - (ramp_dist if i == 0 else 0.0)
        segs.append(Segment(cruise / speed, 0.0, 0.0, slope))
        segs.append(turn)
    segs.append(Segment(ramp, -accel, 0.0, slope))
    if rest > 0:
        segs.append(Segment(rest))
    return TrajectoryProfile(tuple(segs), imu_rate, radar_rate, 0.0, heading)


# --- IMU --------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantBias:
    c: float

    def sample(self, t, rng):
        return np.full(len(t), float(self.c))


@dataclass(frozen=True)
class LinearDrift:
    b0: float
    slope: float

    def sample(self, t, rng):
        return self.b0 + self.slope * np.asarray(t)


@dataclass(frozen=True)
class RandomWalk:
    b0: float
    psd: float

    def sample(self, t, rng):
        t = np.asarray(t)
        steps = rng.standard_normal(len(t) - 1) * np.sqrt(self.psd * np.diff(t))
        return self.b0 + np.concatenate([[0.0], np.cumsum(steps)])


@dataclass(frozen=True)
class ImuNoisePreset:
    accel_noise_density: float = 0.0  # m/s^2/sqrt(Hz)
    gyro_noise_density: float = 0.0  # rad/s/sqrt(Hz)
    yaw_drift_rate: float = 0.0  # rad/s, AHRS heading drift
    ahrs_yaw_noise: float = 0.0  # rad, white AHRS heading noise


NOISELESS = ImuNoisePreset()
# Cube Orange: 100 ug/sqrt(Hz), 4 mdps/sqrt(Hz); heading drift/noise are assumptions
PX4 = ImuNoisePreset(100 * _MICRO_G, math.radians(4e-3), 5e-5, math.radians(0.5))
# VN-100: 0.14 mg/sqrt(Hz), 0.0035 deg/sqrt(s), 3.5 deg/h bias stability
VECTORNAV = ImuNoisePreset(140 * _MICRO_G, math.radians(0.0035), math.radians(3.5) / 3600.0,
                           math.radians(0.3))
PRESETS = {"px4": PX4, "vectornav": VECTORNAV, "none": NOISELESS}


@dataclass(frozen=True)
class ImuStream:
    t: np.ndarray
    a_meas: np.ndarray  # forward specific force
    a_lat: np.ndarray
    a_up: np.ndarray
    omega_meas: np.ndarray
    gyro_xy: np.ndarray  # (N, 2)
    yaw_ahrs: np.ndarray
    pitch: np.ndarray
    bias: np.ndarray

    def records(self):
        out = []
        for k in range(len(self.t)):
            qw, qx, qy, qz = quat_from_euler(0.0, float(self.pitch[k]), float(self.yaw_ahrs[k])).tolist()
            out.append(ImuRecord(float(self.t[k]), float(self.a_meas[k]), float(self.a_lat[k]),
                                 float(self.a_up[k]), float(self.gyro_xy[k, 0]), float(self.gyro_xy[k, 1]),
                                 float(self.omega_meas[k]), qw, qx, qy, qz))
        return out


def _interval_inputs(arr):
    # sample k carries the input applied over (t_{k-1}, t_k]
    return np.concatenate([arr[:1], arr[:-1]])


def synth_imu(truth: Truth, bias, preset: ImuNoisePreset, seed) -> ImuStream:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    n = len(truth)
    rate = 1.0 / truth.dt
    sa = preset.accel_noise_density * math.sqrt(rate)
    sg = preset.gyro_noise_density * math.sqrt(rate)
    b = bias.sample(truth.t, rng)
    a = _interval_inputs(truth.accel)
    w = _interval_inputs(truth.omega)
    slope = _interval_inputs(truth.slope)
    noise_a = rng.standard_normal((n, 3)) * sa
    noise_g = rng.standard_normal((n, 3)) * sg
    noise_yaw = rng.standard_normal(n) * preset.ahrs_yaw_noise
    a_meas = a + b + GRAVITY * np.sin(slope) + noise_a[:, 0]
    a_lat = truth.v * w + noise_a[:, 1]
    a_up = GRAVITY * np.cos(slope) + noise_a[:, 2]
    yaw = truth.theta + preset.yaw_drift_rate * truth.t + noise_yaw
    yaw = np.array([wrap_angle(a_) for a_ in yaw])
    return ImuStream(truth.t.copy(), a_meas, a_lat, a_up, w + noise_g[:, 2], noise_g[:, :2],
                     yaw, -slope, b)


# --- world and radar --------------------------------------------------------

@dataclass(frozen=True)
class TunnelWorld:
    centerline: np.ndarray  # (M, 2)
    half_width: float = 2.0
    wall_point_spacing: float = 0.75
    ceiling_height: float = 3.0

    def __post_init__(self):
        if self.half_width <= 0 or self.wall_point_spacing <= 0:
            raise ValueError("half_width and wall_point_spacing must be positive")

    def stations(self):
        """Centerline resampled at the point spacing, with unit left normals."""
        c = np.asarray(self.centerline, dtype=float)
        seg = np.hypot(*np.diff(c, axis=0).T)
        keep = np.concatenate([[True], seg > 1e-9])
        c = c[keep]
        s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(c, axis=0).T))])
        samples = np.arange(0.0, s[-1] + 1e-9, self.wall_point_spacing)
        p = np.column_stack([np.interp(samples, s, c[:, 0]), np.interp(samples, s, c[:, 1])])
        tangent = np.gradient(p, axis=0)
        tangent /= np.linalg.norm(tangent, axis=1)[:, None]
        normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
        return p, normal

    def surface_points(self):
        p, n = self.stations()
        sp = self.wall_point_spacing
        heights = np.arange(0.0, self.ceiling_height + 1e-9, sp)
        across = np.arange(-self.half_width + sp, self.half_width - 1e-9, sp)
        out = []
        for side in (-1.0, 1.0):
            wall = p + side * self.half_width * n
            for z in heights:
                out.append(np.column_stack([wall, np.full(len(p), z)]))
        for z in (0.0, self.ceiling_height):
            for w in across:
                out.append(np.column_stack([p + w * n, np.full(len(p), z)]))
        return np.concatenate(out)


def world_from_truth(truth: Truth, half_width=2.0, spacing=0.75, ceiling=3.0):
    return TunnelWorld(np.column_stack([truth.x, truth.y]), half_width, spacing, ceiling)


@dataclass(frozen=True)
class ClutterModel:
    rate: float = 5.0
    radius_range: tuple = (0.05, 0.4)
    doppler_spread: float = 1.0

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("clutter rate must be >= 0")


@dataclass(frozen=True)
class RadarSpec:
    ext: Extrinsics
    fov: float = math.radians(60.0)  # full width, both azimuth and elevation
    max_range: float = 10.0


@dataclass
class RadarEpochs:
    """Simulated scans in emission order plus the ground truth behind them."""

    scans: list = field(default_factory=list)
    clutter: list = field(default_factory=list)  # bool mask per scan
    velocity: list = field(default_factory=list)  # true sensor-frame velocity per scan


def radar_epoch_indices(truth: Truth, radar_rate):
    step = (1.0 / radar_rate) / truth.dt
    idx = np.round(np.arange(0.0, len(truth) - 0.5, step)).astype(int)
    return idx[idx < len(truth)]


def synth_radar(truth: Truth, world: TunnelWorld, rig, clutter: ClutterModel, doppler_sigma, seed,
                radar_rate=10.0, max_targets=None, lever_arm=False) -> RadarEpochs:
    """Doppler scans from every radar in ``rig`` (a list of :class:`RadarSpec`).

    Static surface points inside a radar's field of view and range become
    targets with Doppler ``-u @ v_sensor`` plus Gaussian noise. At most
    ``max_targets`` are kept per scan (random subset), then Poisson clutter
    is appended close to the sensor.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2]))
    surface = world.surface_points()
    reach = max(r.max_range + np.linalg.norm(r.ext.mount.translation) for r in rig)
    out = RadarEpochs()
    for k in radar_epoch_indices(truth, radar_rate):
        th = float(truth.theta[k])
        body = Pose(quat_from_euler(0.0, 0.0, th), np.array([truth.x[k], truth.y[k], 0.0]))
        near = surface[np.hypot(surface[:, 0] - truth.x[k], surface[:, 1] - truth.y[k]) <= reach]
        v_body = np.array([truth.v[k], 0.0, 0.0])
        w_body = np.array([0.0, 0.0, truth.omega[k]])
        for spec in rig:
            sensor = compose(body, spec.ext.mount)
            R = sensor.matrix
            p = (near - sensor.translation) @ R
            r = np.linalg.norm(p, axis=1)
            half = 0.5 * spec.fov
            az = np.arctan2(p[:, 1], p[:, 0])
            el = np.arctan2(p[:, 2], np.hypot(p[:, 0], p[:, 1]))
            vis = (p[:, 0] > 0) & (np.abs(az) <= half) & (np.abs(el) <= half) & (r <= spec.max_range) & (r > 0)
            pts = p[vis]
            if max_targets is not None and len(pts) > max_targets:
                pts = pts[np.sort(rng.choice(len(pts), max_targets, replace=False))]
            v_mount = v_body + (np.cross(w_body, spec.ext.mount.translation) if lever_arm else 0.0)
            v_sensor = spec.ext.mount.matrix.T @ v_mount
            u = pts / np.linalg.norm(pts, axis=1)[:, None] if len(pts) else pts
            vd = -(u @ v_sensor) + rng.standard_normal(len(pts)) * doppler_sigma
            n_cl = int(rng.poisson(clutter.rate)) if clutter.rate > 0 else 0
            if n_cl:
                rr = rng.uniform(*clutter.radius_range, n_cl)
                caz = rng.uniform(-half, half, n_cl)
                cel = rng.uniform(-half, half, n_cl)
                cp = np.column_stack([rr * np.cos(cel) * np.cos(caz), rr * np.cos(cel) * np.sin(caz),
                                      rr * np.sin(cel)])
                cvd = rng.uniform(-clutter.doppler_spread, clutter.doppler_spread, n_cl)
                pts = np.concatenate([pts, cp])
                vd = np.concatenate([vd, cvd])
            mask = np.zeros(len(pts), dtype=bool)
            mask[len(pts) - n_cl:] = True
            out.scans.append(RadarScan(float(truth.t[k]), spec.ext.radar_id, pts, vd))
            out.clutter.append(mask)
            out.velocity.append(v_sensor)
    return out


# --- scenario ---------------------------------------------------------------

def bias_from_config(sim):
    kind = sim.bias.lower()
    if kind == "none":
        return ConstantBias(0.0)
    if kind == "constant":
        return ConstantBias(sim.bias_value)
    if kind == "linear":
        return LinearDrift(sim.bias_value, sim.bias_slope)
    if kind == "random_walk":
        return RandomWalk(sim.bias_value, sim.bias_psd)
    raise ValueError(f"unknown bias model {sim.bias!r}")


@dataclass
class Simulation:
    truth: Truth
    imu: ImuStream
    radar: RadarEpochs
    world: TunnelWorld

    def events(self):
        imu = self.imu.records()
        radar = [RadarRecord(s.stamp, s.radar_id, s) for s in self.radar.scans]
        return merge_streams(imu, radar)


def simulate(cfg, seed=0) -> Simulation:
    """Generate a full run from a :class:`mrio.config.Config`."""
    sim = cfg.sim
    if sim.imu_preset.lower() not in PRESETS:
        raise ValueError(f"unknown imu preset {sim.imu_preset!r}")
    profile = loop_profile(sim.speed, sim.straight_a, sim.straight_b, sim.turn_radius, sim.accel,
                           sim.rest, sim.imu_rate, sim.radar_rate, math.radians(sim.heading_deg),
                           math.radians(sim.slope_deg))
    truth = generate_truth(profile)
    world = world_from_truth(truth, sim.half_width, sim.wall_point_spacing, sim.ceiling_height)
    imu = synth_imu(truth, bias_from_config(sim), PRESETS[sim.imu_preset.lower()], seed)
    rig = [RadarSpec(ext, math.radians(sim.fov_deg), sim.max_range) for ext in cfg.extrinsics().values()]
    clutter = ClutterModel(sim.clutter_rate, (sim.clutter_r_min, sim.clutter_r_max), sim.clutter_doppler_spread)
    radar = synth_radar(truth, world, rig, clutter, sim.doppler_sigma, seed, sim.radar_rate,
                        sim.max_targets if sim.max_targets > 0 else None, sim.lever_arm)
    return Simulation(truth, imu, radar, world)
