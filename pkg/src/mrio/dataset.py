"""JSONL sensor datasets and TUM trajectory files.

Dataset lines look like::

    {"type": "imu", "t": 0.005, "ax": .., "ay": .., "az": .., "gx": .., "gy": .., "gz": ..,
     "qw": .., "qx": .., "qy": .., "qz": ..}
    {"type": "radar", "t": 0.1, "radar_id": 1, "targets": [{"x": .., "y": .., "z": .., "vd": ..}]}

Each stream must be non-decreasing in ``t`` on its own; the loader
interleaves the two, IMU first on ties.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import NonMonotonicTime, ParseError
from .frontend import RadarScan
from .geometry import quat_from_yaw

log = logging.getLogger(__name__)

_IMU_KEYS = ("ax", "ay", "az", "gx", "gy", "gz", "qw", "qx", "qy", "qz")


@dataclass(frozen=True)
class ImuRecord:
    t: float
    ax: float
    ay: float
    az: float
    gx: float
    gy: float
    gz: float
    qw: float
    qx: float
    qy: float
    qz: float

    @property
    def quaternion(self):
        return np.array([self.qw, self.qx, self.qy, self.qz])

    def to_json(self):
        d = {"type": "imu", "t": self.t}
        d.update((k, getattr(self, k)) for k in _IMU_KEYS)
        return d


@dataclass(frozen=True)
class RadarRecord:
    t: float
    radar_id: int
    scan: RadarScan

    def to_json(self):
        return {
            "type": "radar",
            "t": self.t,
            "radar_id": self.radar_id,
            "targets": [{"x": x, "y": y, "z": z, "vd": vd}
                        for (x, y, z), vd in zip(self.scan.points.tolist(), self.scan.doppler.tolist())],
        }


def _number(d, key, lineno):
    try:
        val = d[key]
    except KeyError:
        raise ParseError(lineno, f"missing field {key!r}") from None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ParseError(lineno, f"field {key!r} is not a number")
    val = float(val)
    if not math.isfinite(val):
        raise ParseError(lineno, f"field {key!r} is not finite")
    return val


def parse_record(line, lineno, max_doppler=10.0):
    try:
        d = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(lineno, f"invalid JSON ({exc.msg})") from None
    if not isinstance(d, dict):
        raise ParseError(lineno, "record is not an object")
    kind = d.get("type")
    t = _number(d, "t", lineno)
    if t < 0:
        raise ParseError(lineno, f"negative timestamp {t}")
    if kind == "imu":
        vals = [_number(d, k, lineno) for k in _IMU_KEYS]
        qn = math.sqrt(sum(v * v for v in vals[6:]))
        if abs(qn - 1.0) > 1e-6:
            raise ParseError(lineno, f"quaternion norm {qn:.9f} is not 1")
        return ImuRecord(t, *vals)
    if kind == "radar":
        rid = d.get("radar_id")
        if isinstance(rid, bool) or not isinstance(rid, int):
            raise ParseError(lineno, "radar_id must be an integer")
        targets = d.get("targets")
        if not isinstance(targets, list):
            raise ParseError(lineno, "targets must be a list")
        pts, vds = [], []
        for tgt in targets:
            if not isinstance(tgt, dict):
                raise ParseError(lineno, "target is not an object")
            p = [_number(tgt, k, lineno) for k in ("x", "y", "z")]
            vd = _number(tgt, "vd", lineno)
            # zero-range and out-of-range Doppler returns are dropped, not fatal
            if p == [0.0, 0.0, 0.0] or abs(vd) > max_doppler:
                log.debug("line %d: dropping target %s vd=%s", lineno, p, vd)
                continue
            pts.append(p)
            vds.append(vd)
        return RadarRecord(t, rid, RadarScan(t, rid, np.array(pts).reshape(-1, 3), np.array(vds)))
    raise ParseError(lineno, f"unknown record type {kind!r}")


def load_dataset(path, max_doppler=10.0):
    """Read a JSONL dataset into one time-ordered event list."""
    imu, radar = [], []
    last = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            rec = parse_record(line, lineno, max_doppler)
            kind = type(rec)
            if kind in last and rec.t < last[kind]:
                raise NonMonotonicTime(f"t={rec.t} after t={last[kind]} in the same stream", lineno)
            last[kind] = rec.t
            (imu if kind is ImuRecord else radar).append(rec)
    return merge_streams(imu, radar)


def merge_streams(imu, radar):
    """Stable merge by time; IMU records win ties."""
    out = []
    i = j = 0
    while i < len(imu) and j < len(radar):
        if imu[i].t <= radar[j].t:
            out.append(imu[i])
            i += 1
        else:
            out.append(radar[j])
            j += 1
    out.extend(imu[i:])
    out.extend(radar[j:])
    return out


def write_dataset(path, events):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for ev in events:
            f.write(json.dumps(ev.to_json(), separators=(",", ":")))
            f.write("\n")


# --- TUM trajectories -------------------------------------------------------

def write_tum(path, stamps, x, y, yaw, z=None):
    """Write ``stamp x y z qx qy qz qw``; orientation is yaw-only."""
    z = np.zeros(len(stamps)) if z is None else z
    with open(path, "w", encoding="ascii", newline="\n") as f:
        for t, xi, yi, zi, th in zip(stamps, x, y, z, yaw):
            qw, qx, qy, qz = quat_from_yaw(float(th))
            f.write(f"{t:.6f} {xi:.9f} {yi:.9f} {zi:.9f} {qx:.12f} {qy:.12f} {qz:.12f} {qw:.12f}\n")


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    yaw: np.ndarray

    def __len__(self):
        return len(self.t)

    def rotated(self, angle):
        c, s = math.cos(angle), math.sin(angle)
        return Trajectory(self.t, c * self.x - s * self.y, s * self.x + c * self.y,
                          np.array([math.remainder(a + angle, 2 * math.pi) for a in self.yaw]))


def read_tum(path) -> Trajectory:
    rows = []
    with open(path, encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise ParseError(lineno, f"expected 8 columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ParseError(lineno, "non-numeric TUM field") from None
    a = np.array(rows, dtype=float).reshape(-1, 8)
    qx, qy, qz, qw = a[:, 4], a[:, 5], a[:, 6], a[:, 7]
    yaw = np.arctan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz))
    return Trajectory(a[:, 0], a[:, 1], a[:, 2], yaw)
