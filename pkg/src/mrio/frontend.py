"""Radar front end: sensing-radius gate, sensor-to-body transform, scan merging.

Doppler convention used everywhere in the package: positive Doppler means
the target is receding. For a static target seen along the body-frame unit
line of sight ``u`` from a platform moving with velocity ``v``, the
expected Doppler is ``-u @ v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MismatchedRadarId
from .geometry import Pose, rotate_vectors, transform_points


@dataclass(frozen=True)
class RadarTarget:
    position: np.ndarray
    doppler: float


@dataclass(frozen=True)
class RadarScan:
    """All returns of one radar at one timestamp, in that radar's frame."""

    stamp: float
    radar_id: int
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    doppler: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        vd = np.asarray(self.doppler, dtype=float).reshape(-1)
        if len(pts) != len(vd):
            raise ValueError(f"{len(pts)} points but {len(vd)} doppler values")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "doppler", vd)

    @classmethod
    def from_targets(cls, stamp, radar_id, targets):
        targets = list(targets)
        pts = np.array([t.position for t in targets], dtype=float).reshape(-1, 3)
        vd = np.array([t.doppler for t in targets], dtype=float)
        return cls(stamp, radar_id, pts, vd)

    @property
    def targets(self):
        return [RadarTarget(p, float(d)) for p, d in zip(self.points, self.doppler)]

    @property
    def ranges(self):
        return np.linalg.norm(self.points, axis=1)

    def __len__(self):
        return len(self.doppler)


@dataclass(frozen=True)
class Extrinsics:
    radar_id: int
    mount: Pose


@dataclass(frozen=True)
class GateConfig:
    r_inner: float = 0.5
    r_outer: float = 8.0

    def __post_init__(self):
        if not 0.0 <= self.r_inner < self.r_outer:
            raise ValueError(f"need 0 <= r_inner < r_outer, got [{self.r_inner}, {self.r_outer}]")


@dataclass(frozen=True)
class BodyScan:
    """Radar returns expressed in the body frame.

    ``los`` holds the unit line of sight of each return (rotated, never
    translated, from the sensor frame). A merged scan is a ``BodyScan``
    whose ``radar_ids`` mix several sensors.
    """

    stamp: float
    positions: np.ndarray
    doppler: np.ndarray
    los: np.ndarray
    radar_ids: np.ndarray

    @classmethod
    def empty(cls, stamp=0.0):
        return cls(stamp, np.zeros((0, 3)), np.zeros(0), np.zeros((0, 3)), np.zeros(0, dtype=int))

    def __len__(self):
        return len(self.doppler)


MergedScan = BodyScan


def range_gate(scan: RadarScan, cfg: GateConfig) -> RadarScan:
    """Keep returns whose range from the sensor lies in [r_inner, r_outer]."""
    r = scan.ranges
    keep = (r >= cfg.r_inner) & (r <= cfg.r_outer)
    return RadarScan(scan.stamp, scan.radar_id, scan.points[keep], scan.doppler[keep])


def to_body(scan: RadarScan, ext: Extrinsics) -> BodyScan:
    if scan.radar_id != ext.radar_id:
        raise MismatchedRadarId(f"scan from radar {scan.radar_id} given extrinsics of radar {ext.radar_id}")
    r = scan.ranges
    if np.any(r == 0.0):
        raise ValueError("zero-range target has no line of sight")
    los_sensor = scan.points / r[:, None]
    return BodyScan(
        stamp=scan.stamp,
        positions=transform_points(ext.mount, scan.points),
        doppler=scan.doppler.copy(),
        los=rotate_vectors(ext.mount, los_sensor),
        radar_ids=np.full(len(scan), scan.radar_id, dtype=int),
    )


def merge_scans(scans) -> BodyScan:
    """Concatenate body-frame scans, tagged with the latest contributing stamp.

    Input order is kept, so callers wanting a canonical order should sort by
    ``(stamp, radar_id)`` first (:func:`preprocess` does).
    """
    scans = list(scans)
    if not scans:
        return BodyScan.empty()
    if len(scans) == 1:
        return scans[0]
    return BodyScan(
        stamp=max(s.stamp for s in scans),
        positions=np.concatenate([s.positions for s in scans]),
        doppler=np.concatenate([s.doppler for s in scans]),
        los=np.concatenate([s.los for s in scans]),
        radar_ids=np.concatenate([s.radar_ids for s in scans]),
    )


def preprocess(scans, rig, gate: GateConfig) -> BodyScan:
    """Gate each scan in its sensor frame, move it to the body, merge.

    ``rig`` maps radar_id to :class:`Extrinsics`; a missing id raises
    ``KeyError`` and is turned into a data error by the caller.
    """
    ordered = sorted(scans, key=lambda s: (s.stamp, s.radar_id))
    return merge_scans([to_body(range_gate(s, gate), rig[s.radar_id]) for s in ordered])


def ransac_inliers(scan: BodyScan, threshold=0.1, iterations=100, rng=None):
    """Boolean inlier mask from a 3-point RANSAC on the Doppler model.

    Comparison baseline only; the default pipeline relies on the range gate.
    """
    n = len(scan)
    if n < 3:
        return np.ones(n, dtype=bool)
    rng = np.random.default_rng(0) if rng is None else rng
    y = -scan.doppler
    best = np.ones(n, dtype=bool)
    best_count = -1
    for _ in range(iterations):
        idx = rng.choice(n, 3, replace=False)
        H = scan.los[idx]
        if abs(np.linalg.det(H)) < 1e-6:
            continue
        v = np.linalg.solve(H, y[idx])
        mask = np.abs(scan.los @ v - y) < threshold
        count = int(mask.sum())
        if count > best_count:
            best, best_count = mask, count
    return best
