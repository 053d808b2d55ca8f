"""Radar-only global map: world-frame accumulation with optional voxel thinning."""

from __future__ import annotations

import math

import numpy as np

from .geometry import Pose, compose, quat_from_yaw, roll_pitch_quat, transform_points


def pose_to_transform(x, y, theta, attitude=None) -> Pose:
    """Planar pose to a 3D body-to-world transform.

    ``attitude`` is an IMU orientation quaternion; only its roll/pitch part is
    used, stacked under the estimated yaw.
    """
    q = quat_from_yaw(theta)
    T = Pose(q, np.array([x, y, 0.0]))
    if attitude is None:
        return T
    return compose(T, Pose(roll_pitch_quat(attitude)))


class GlobalMap:
    def __init__(self, voxel_size=0.10):
        if voxel_size < 0:
            raise ValueError("voxel_size must be >= 0")
        self.voxel_size = float(voxel_size)
        self.occupied = set()
        self._chunks = []
        self._n = 0

    def __len__(self):
        return self._n

    @property
    def points(self):
        if not self._chunks:
            return np.zeros((0, 3))
        return np.concatenate([c[0] for c in self._chunks])

    @property
    def stamps(self):
        if not self._chunks:
            return np.zeros(0)
        return np.concatenate([np.full(len(c[0]), c[1]) for c in self._chunks])

    @property
    def radar_ids(self):
        if not self._chunks:
            return np.zeros(0, dtype=int)
        return np.concatenate([c[2] for c in self._chunks])

    def voxel_index(self, points):
        return np.floor(np.asarray(points) / self.voxel_size).astype(np.int64)

    def register(self, pose: Pose, scan) -> int:
        """Transform ``scan`` into the world and insert it; returns the count inserted."""
        world = transform_points(pose, scan.positions)
        ids = np.asarray(scan.radar_ids, dtype=int)
        if not np.all(np.isfinite(world)):
            raise ValueError("non-finite map point")
        if self.voxel_size > 0 and len(world):
            keep = np.zeros(len(world), dtype=bool)
            for i, key in enumerate(map(tuple, self.voxel_index(world).tolist())):
                if key not in self.occupied:
                    self.occupied.add(key)
                    keep[i] = True
            world, ids = world[keep], ids[keep]
        if len(world):
            self._chunks.append((world, float(scan.stamp), ids))
            self._n += len(world)
        return len(world)

    def snapshot(self):
        return self.points.copy()


def register(gmap: GlobalMap, pose: Pose, scan):
    n = gmap.register(pose, scan)
    return gmap, n


def export_ply(gmap, path):
    pts = gmap.points if isinstance(gmap, GlobalMap) else np.asarray(gmap).reshape(-1, 3)
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("ply\nformat ascii 1.0\n")
        f.write(f"element vertex {len(pts)}\n")
        f.write("property float x\nproperty float y\nproperty float z\nend_header\n")
        for x, y, z in pts.tolist():
            f.write(f"{x:.6f} {y:.6f} {z:.6f}\n")


def read_ply(path):
    with open(path, encoding="ascii") as f:
        if f.readline().strip() != "ply":
            raise ValueError(f"{path} is not a PLY file")
        n = None
        for line in f:
            line = line.strip()
            if line.startswith("element vertex"):
                n = int(line.split()[2])
            elif line == "end_header":
                break
        if n is None:
            raise ValueError(f"{path} has no vertex element")
        rows = [list(map(float, f.readline().split()[:3])) for _ in range(n)]
    return np.array(rows, dtype=float).reshape(-1, 3)


def export_xyz(gmap, path):
    pts = gmap.points if isinstance(gmap, GlobalMap) else np.asarray(gmap).reshape(-1, 3)
    with open(path, "w", encoding="ascii", newline="\n") as f:
        for x, y, z in pts.tolist():
            f.write(f"{x:.6f},{y:.6f},{z:.6f}\n")


def map_size_bound(extent_min, extent_max, voxel_size):
    """Upper bound on stored points for a thinned map inside an axis-aligned box."""
    cells = [math.floor(hi / voxel_size) - math.floor(lo / voxel_size) + 1
             for lo, hi in zip(extent_min, extent_max)]
    return int(np.prod(cells))
