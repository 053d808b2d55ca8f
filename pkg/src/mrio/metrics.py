"""Trajectory error metrics: planar ATE-style RMSE and relative drift per metre."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .dataset import Trajectory
from .errors import InsufficientOverlap


@dataclass(frozen=True)
class MetricsReport:
    rmse_2d: float
    rmse_x: float
    rmse_y: float
    rmse_yaw: float  # degrees
    rel_trans_err: float  # m/m over 1 m windows
    n_matched_poses: int

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def match_by_time(est_t, gt_t, max_dt=0.05):
    """Index pairs (i_est, i_gt) matching each estimate to its nearest gt stamp."""
    est_t = np.asarray(est_t, dtype=float)
    gt_t = np.asarray(gt_t, dtype=float)
    if len(gt_t) == 0 or len(est_t) == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    order = np.argsort(gt_t, kind="stable")
    g = gt_t[order]
    pos = np.clip(np.searchsorted(g, est_t), 1, max(len(g) - 1, 1))
    left = pos - 1
    right = np.minimum(pos, len(g) - 1)
    pick = np.where(np.abs(g[left] - est_t) <= np.abs(g[right] - est_t), left, right)
    ok = np.abs(g[pick] - est_t) <= max_dt
    return np.nonzero(ok)[0], order[pick[ok]]


def _wrap(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def relative_translation_error(ex, ey, eyaw, gx, gy, gyaw, window=1.0):
    """Mean drift per metre over windows of ``window`` metres of gt path.

    Each window starts at a matched pose and ends at the first pose at least
    ``window`` metres further along the gt path. Displacements are compared
    in the frame of the window's starting pose.
    """
    s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(gx), np.diff(gy)))])
    starts = np.arange(len(s))
    ends = np.searchsorted(s, s + window - 1e-12)
    valid = ends < len(s)
    if not np.any(valid):
        return 0.0
    i, j = starts[valid], ends[valid]
    length = s[j] - s[i]

    def local(x, y, yaw):
        dx, dy = x[j] - x[i], y[j] - y[i]
        c, sn = np.cos(yaw[i]), np.sin(yaw[i])
        return c * dx + sn * dy, -sn * dx + c * dy

    elx, ely = local(ex, ey, eyaw)
    glx, gly = local(gx, gy, gyaw)
    return float(np.mean(np.hypot(elx - glx, ely - gly) / length))


def evaluate(est: Trajectory, gt: Trajectory, max_dt=0.05, window=1.0) -> MetricsReport:
    ie, ig = match_by_time(est.t, gt.t, max_dt)
    if len(ie) < 2:
        raise InsufficientOverlap(f"only {len(ie)} poses matched within {max_dt} s")
    dx = est.x[ie] - gt.x[ig]
    dy = est.y[ie] - gt.y[ig]
    dyaw = _wrap(est.yaw[ie] - gt.yaw[ig])
    rte = relative_translation_error(est.x[ie], est.y[ie], est.yaw[ie], gt.x[ig], gt.y[ig],
                                     gt.yaw[ig], window)
    return MetricsReport(
        rmse_2d=float(math.sqrt(np.mean(dx**2 + dy**2))),
        rmse_x=float(math.sqrt(np.mean(dx**2))),
        rmse_y=float(math.sqrt(np.mean(dy**2))),
        rmse_yaw=float(math.degrees(math.sqrt(np.mean(dyaw**2)))),
        rel_trans_err=rte,
        n_matched_poses=int(len(ie)),
    )
