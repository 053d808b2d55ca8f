"""Flat key-value configuration file with one section per subsystem.

Every tunable of the pipeline and the simulator has its default here. A
config file only needs the keys it overrides::

    [rig]
    # radar_id = x y z roll pitch yaw   (metres, degrees)
    1 = 0.25 0.0 0.40 0 0 0

    [stage1]
    q_b = 1e-6
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .frontend import Extrinsics, GateConfig
from .geometry import Pose
from .stage1 import Stage1Config

# radar_id -> (x, y, z, roll, pitch, yaw), degrees.
# Four planar radars facing forward/left/back/right plus two tilted 45 deg
# up, one looking ahead and one behind.
DEFAULT_RIG = {
    1: (0.25, 0.0, 0.40, 0.0, 0.0, 0.0),
    2: (0.0, 0.20, 0.40, 0.0, 0.0, 90.0),
    3: (-0.25, 0.0, 0.40, 0.0, 0.0, 180.0),
    4: (0.0, -0.20, 0.40, 0.0, 0.0, -90.0),
    5: (0.20, 0.0, 0.55, 0.0, -45.0, 0.0),
    6: (-0.20, 0.0, 0.55, 0.0, -45.0, 180.0),
}


@dataclass
class EgoConfig:
    min_targets: int = 3
    max_condition: float = 1e4
    doppler_floor: float = 0.03
    max_doppler: float = 10.0
    ransac: bool = False


@dataclass
class Stage2Config:
    q_pos: float = 1e-6
    # PSD of the corrected acceleration fed to prediction, (m/s^2)^2 s
    q_accel: float = 1e-3
    # PSD assumed for raw accelerometer input in the no-stage1 baseline
    q_accel_raw: float = 1e-6
    q_gyro: float = 1e-5
    r_theta_deg: float = 0.5
    # chi-square(2) outlier gate on the [yaw, speed] innovation; 0 disables
    nis_gate: float = 13.8155
    init_var_x: float = 1e-4
    init_var_y: float = 1e-4
    init_var_v: float = 1e-2
    init_var_theta: float = 1e-4
    zupt_accel: float = 0.05
    zupt_idle: float = 1.0
    zupt_sigma: float = 0.01

    @property
    def r_theta(self):
        return math.radians(self.r_theta_deg) ** 2

    @property
    def init_cov(self):
        return (self.init_var_x, self.init_var_y, self.init_var_v, self.init_var_theta)


@dataclass
class MappingConfig:
    voxel_size: float = 0.10
    use_attitude: bool = True


@dataclass
class SimConfig:
    imu_rate: float = 200.0
    radar_rate: float = 10.0
    # rounded-rectangle loop
    speed: float = 1.0
    straight_a: float = 28.0
    straight_b: float = 12.0
    turn_radius: float = 3.0
    accel: float = 0.25
    rest: float = 1.0
    heading_deg: float = 0.0
    slope_deg: float = 0.0
    # bias: none | constant | linear | random_walk
    bias: str = "constant"
    bias_value: float = 0.3
    bias_slope: float = 0.0
    bias_psd: float = 0.0
    # imu_preset: px4 | vectornav | none
    imu_preset: str = "px4"
    doppler_sigma: float = 0.03
    max_range: float = 10.0
    fov_deg: float = 60.0
    max_targets: int = 24
    lever_arm: bool = False
    clutter_rate: float = 5.0
    clutter_r_min: float = 0.05
    clutter_r_max: float = 0.4
    clutter_doppler_spread: float = 1.0
    half_width: float = 2.0
    wall_point_spacing: float = 0.75
    ceiling_height: float = 3.0


@dataclass
class Config:
    rig: dict = field(default_factory=lambda: dict(DEFAULT_RIG))
    gate: GateConfig = field(default_factory=GateConfig)
    ego: EgoConfig = field(default_factory=EgoConfig)
    stage1: Stage1Config = field(default_factory=Stage1Config)
    stage2: Stage2Config = field(default_factory=Stage2Config)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    sim: SimConfig = field(default_factory=SimConfig)

    def extrinsics(self):
        return {rid: mount_extrinsics(rid, vals) for rid, vals in sorted(self.rig.items())}


_SECTIONS = ("gate", "ego", "stage1", "stage2", "mapping", "sim")


def mount_extrinsics(radar_id, vals):
    x, y, z, roll, pitch, yaw = vals
    return Extrinsics(radar_id, Pose.from_xyz_rpy(x, y, z, math.radians(roll),
                                                  math.radians(pitch), math.radians(yaw)))


def _convert(kind, raw, where):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot read {raw!r} as {kind.__name__}") from exc


def _apply_section(obj, items, section):
    known = {f.name: type(getattr(obj, f.name)) for f in fields(obj)}
    updates = {}
    for key, raw in items:
        if key not in known:
            raise ConfigError(f"[{section}] unknown key {key!r}")
        kind = known[key]
        if kind is int and any(c in raw for c in ".eE"):
            kind = float
        updates[key] = _convert(kind, raw, f"[{section}] {key}")
    try:
        return replace(obj, **updates)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def parse_config(text, source="<string>") -> Config:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    cfg = Config()
    for section in cp.sections():
        if section == "rig":
            rig = {}
            for key, raw in cp.items("rig"):
                try:
                    rid = int(key)
                    vals = tuple(float(v) for v in raw.split())
                except ValueError as exc:
                    raise ConfigError(f"[rig] bad entry {key} = {raw}") from exc
                if len(vals) != 6:
                    raise ConfigError(f"[rig] radar {rid}: expected x y z roll pitch yaw")
                rig[rid] = vals
            cfg.rig = rig
        elif section in _SECTIONS:
            setattr(cfg, section, _apply_section(getattr(cfg, section), cp.items(section), section))
        else:
            raise ConfigError(f"unknown section [{section}]")
    return cfg


def load_config(path=None) -> Config:
    if path is None:
        return Config()
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def format_config(cfg: Config) -> str:
    lines = ["[rig]", "# radar_id = x y z roll pitch yaw   (m, deg)"]
    for rid, vals in sorted(cfg.rig.items()):
        lines.append(f"{rid} = " + " ".join(repr(float(v)) for v in vals))
    for section in _SECTIONS:
        obj = getattr(cfg, section)
        lines += ["", f"[{section}]"]
        for f in fields(obj):
            val = getattr(obj, f.name)
            lines.append(f"{f.name} = {str(val).lower() if isinstance(val, bool) else val}")
    return "\n".join(lines) + "\n"
