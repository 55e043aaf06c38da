"""Evaluation metrics: masked voxel IoU / mIoU and depth-quality scores.

All occupancy metrics are computed only inside the provided mask (the
camera frustum in the intended setup).  Depth metrics follow the common
definitions: RMSE over aligned depth pairs, the delta_1 ratio-threshold
accuracy, and the symmetric mean nearest-neighbor L1 (Chamfer) distance
between point clouds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidInputError
from .grids import LabelGrid

DELTA1_THRESHOLD = 1.25


@dataclass
class IoUResult:
    """Geometric IoU, per-valid-class IoU (NaN where a class never occurs
    in either grid inside the mask), and their mean over present classes."""

    iou: float
    per_class: np.ndarray
    miou: float


def iou_miou(pred: LabelGrid, gt: LabelGrid, mask=None) -> IoUResult:
    """Masked intersection-over-union scores.

    Geometric IoU treats every non-empty label as occupied.  Per-class
    IoU covers the C-1 valid classes; classes absent from both grids in
    the mask are excluded from the mean (NaN in ``per_class``).
    """
    if pred.spec.dims != gt.spec.dims:
        raise InvalidInputError("prediction and ground truth grids differ in shape")
    num_classes = max(pred.num_classes, gt.num_classes)
    if mask is None:
        mask = np.ones(gt.spec.dims, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != gt.spec.dims:
        raise InvalidInputError(f"mask shape {mask.shape} does not match grid {gt.spec.dims}")
    if not mask.any():
        raise InvalidInputError("mask selects no voxels")

    p = pred.labels[mask]
    g = gt.labels[mask]

    p_occ = p > 0
    g_occ = g > 0
    union = np.logical_or(p_occ, g_occ).sum()
    inter = np.logical_and(p_occ, g_occ).sum()
    iou = float(inter / union) if union else 1.0

    per_class = np.full(num_classes - 1, np.nan)
    for c in range(1, num_classes):
        pc = p == c
        gc = g == c
        union_c = np.logical_or(pc, gc).sum()
        if union_c:
            per_class[c - 1] = np.logical_and(pc, gc).sum() / union_c
    present = ~np.isnan(per_class)
    miou = float(per_class[present].mean()) if present.any() else 1.0
    return IoUResult(iou, per_class, miou)


def chamfer_l1(points_a, points_b) -> float:
    """Symmetric mean nearest-neighbor L1 distance between two point sets."""
    a = np.asarray(points_a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(points_b, dtype=np.float64).reshape(-1, 3)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise InvalidInputError("point sets must be non-empty")
    d_ab, _ = cKDTree(b).query(a, p=1)
    d_ba, _ = cKDTree(a).query(b, p=1)
    return float(0.5 * (d_ab.mean() + d_ba.mean()))


@dataclass
class DepthMetrics:
    """Depth-quality scores; ``excluded_pairs`` counts ratio pairs dropped
    for non-positive depths."""

    rmse: float
    delta1: float
    chamfer_l1: float
    excluded_pairs: int

    def as_lines(self) -> list[str]:
        return [
            f"rmse={self.rmse!r}",
            f"delta1={self.delta1!r}",
            f"chamfer_l1={self.chamfer_l1!r}",
            f"excluded_pairs={self.excluded_pairs}",
        ]


def depth_metrics(pred_points, gt_points, pred_depths, gt_depths) -> DepthMetrics:
    """RMSE and delta_1 over aligned depth lists plus the Chamfer-L1
    distance between the backprojected point sets.

    delta_1 is the fraction of pairs with max(d/d_hat, d_hat/d) below
    1.25; pairs where either depth is non-positive are excluded from the
    ratio and counted in the report.
    """
    pd = np.asarray(pred_depths, dtype=np.float64).reshape(-1)
    gd = np.asarray(gt_depths, dtype=np.float64).reshape(-1)
    if pd.shape != gd.shape:
        raise InvalidInputError(f"depth lists differ in length: {pd.size} vs {gd.size}")
    if pd.size == 0:
        raise InvalidInputError("depth lists must be non-empty")

    rmse = float(np.sqrt(np.mean((gd - pd) ** 2)))

    valid = (pd > 0) & (gd > 0)
    excluded = int(pd.size - valid.sum())
    if valid.any():
        ratio = np.maximum(pd[valid] / gd[valid], gd[valid] / pd[valid])
        delta1 = float(np.mean(ratio < DELTA1_THRESHOLD))
    else:
        delta1 = 0.0

    return DepthMetrics(rmse, delta1, chamfer_l1(pred_points, gt_points), excluded)
