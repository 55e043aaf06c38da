"""Supervision losses as plain scoring functions (no gradients).

Includes the focal classification loss over the fused voxel
distribution, the geometry-aware scale loss built from soft precision /
recall / specificity of the occupancy probabilities, and the
layer-weighted probability scale loss that relaxes supervision on early
refinement layers: the first n-1 layers are weighted by i/(2n) and the
final layer by 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .grids import LabelGrid, SemanticProbGrid

PROB_CLAMP = 1e-7
TERM_CLAMP = 1e-7


@dataclass(frozen=True)
class LossWeights:
    """Scalar weights of the composite training objective.

    Depth pre-training terms: huber depth, huber points, gradient
    matching.  End-to-end terms: probability scale, focal, and the
    Lovasz slot (kept for a complete record even though that loss is an
    external method and not implemented here).
    """

    depth_huber: float = 10.0
    points_huber: float = 20.0
    depth_gradient: float = 0.5
    prob_scale: float = 0.5
    focal: float = 100.0
    lovasz: float = 2.0

    def __post_init__(self):
        values = (self.depth_huber, self.points_huber, self.depth_gradient,
                  self.prob_scale, self.focal, self.lovasz)
        if any(not np.isfinite(v) or v < 0 for v in values):
            raise InvalidInputError(f"loss weights must be non-negative, got {values}")


def focal_loss(pred: SemanticProbGrid, gt: LabelGrid, gamma: float = 2.0,
               class_weights=None, mask=None) -> float:
    """Mean of -w_c (1 - p_c)^gamma log(p_c) at the true class over masked voxels.

    Probabilities are clamped to [1e-7, 1 - 1e-7].  gamma = 0 with unit
    weights reduces to masked cross-entropy.  An empty mask yields 0
    with a warning.
    """
    if pred.spec.dims != gt.spec.dims:
        raise InvalidInputError("prediction and ground truth grids differ in shape")
    num_classes = pred.num_classes
    if gt.labels.max(initial=0) >= num_classes:
        raise InvalidInputError("ground-truth labels exceed the class count")
    if class_weights is None:
        class_weights = np.ones(num_classes)
    class_weights = np.asarray(class_weights, dtype=np.float64).reshape(num_classes)
    if mask is None:
        mask = np.ones(gt.spec.dims, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != gt.spec.dims:
        raise InvalidInputError(f"mask shape {mask.shape} does not match grid {gt.spec.dims}")
    if not mask.any():
        warnings.warn("focal_loss over an empty mask; returning 0", stacklevel=2)
        return 0.0

    labels = gt.labels[mask]
    p_true = np.clip(
        np.take_along_axis(pred.probs[mask], labels[:, None], axis=1)[:, 0],
        PROB_CLAMP, 1.0 - PROB_CLAMP,
    )
    w = class_weights[labels]
    return float(np.mean(-w * (1.0 - p_true) ** gamma * np.log(p_true)))


@dataclass
class ScalGeoBreakdown:
    """Soft confusion terms behind the geometric scale loss.

    ``skipped`` lists the terms whose denominator vanished (ground truth
    all-occupied or all-empty); they contribute nothing to the value.
    """

    value: float
    precision: float | None
    recall: float | None
    specificity: float | None
    skipped: tuple = field(default_factory=tuple)


def scal_geo_breakdown(occ_probs, gt_occupancy) -> ScalGeoBreakdown:
    """Compute -(log P + log R + log S) from soft occupancy statistics.

    P = sum(p y) / sum(p), R = sum(p y) / sum(y),
    S = sum((1-p)(1-y)) / sum(1-y), each clamped at 1e-7 before the log.
    Terms with a zero denominator are skipped and reported.
    """
    p = np.asarray(occ_probs, dtype=np.float64)
    y = np.asarray(gt_occupancy, dtype=np.float64)
    if p.shape != y.shape:
        raise InvalidInputError(f"occupancy shapes differ: {p.shape} vs {y.shape}")
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise InvalidInputError("occupancy probabilities must lie in [0, 1]")
    if np.any((y != 0) & (y != 1)):
        raise InvalidInputError("ground-truth occupancy must be binary")

    tp = float((p * y).sum())
    pred_mass = float(p.sum())
    pos = float(y.sum())
    neg = float((1.0 - y).sum())
    tn = float(((1.0 - p) * (1.0 - y)).sum())

    terms = {}
    skipped = []
    for name, numer, denom in (("precision", tp, pred_mass),
                               ("recall", tp, pos),
                               ("specificity", tn, neg)):
        if denom <= 0.0:
            terms[name] = None
            skipped.append(name)
        else:
            terms[name] = max(numer / denom, TERM_CLAMP)

    value = -sum(np.log(t) for t in terms.values() if t is not None)
    return ScalGeoBreakdown(float(value), terms["precision"], terms["recall"],
                            terms["specificity"], tuple(skipped))


def scal_geo_loss(occ_probs, gt_occupancy) -> float:
    """Scalar value of the geometric scale loss; see scal_geo_breakdown."""
    return scal_geo_breakdown(occ_probs, gt_occupancy).value


@dataclass
class LayerOccupancies:
    """Occupancy probability grids from successive refinement layers plus
    the shared binary ground truth."""

    layers: list = field(repr=False)
    gt_occupancy: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.layers:
            raise InvalidInputError("need at least one occupancy layer")
        gt = np.asarray(self.gt_occupancy)
        arrays = []
        for i, layer in enumerate(self.layers):
            arr = np.asarray(layer, dtype=np.float64)
            if arr.shape != gt.shape:
                raise InvalidInputError(
                    f"layer {i} shape {arr.shape} does not match ground truth {gt.shape}"
                )
            if np.any((arr < 0) | (arr > 1)):
                raise InvalidInputError(f"layer {i} probabilities must lie in [0, 1]")
            arrays.append(arr)
        self.layers = arrays
        self.gt_occupancy = gt

    def __len__(self) -> int:
        return len(self.layers)


def prob_scale_layer_weights(n: int) -> np.ndarray:
    """Per-layer weights: i/(2n) for layers 1..n-1, then 1 for the last."""
    if n < 1:
        raise InvalidInputError(f"need n >= 1 layers, got {n}")
    w = np.arange(1, n + 1, dtype=np.float64) / (2.0 * n)
    w[-1] = 1.0
    return w


def prob_scale_loss(layers: LayerOccupancies) -> float:
    """Weighted sum of per-layer geometric scale losses.

    0.5 * sum_{i<n} (i/n) * L_geo_i + L_geo_n; for a single layer this is
    exactly that layer's geometric scale loss.
    """
    weights = prob_scale_layer_weights(len(layers))
    total = 0.0
    for w, layer in zip(weights, layers.layers):
        total += w * scal_geo_loss(layer, layers.gt_occupancy)
    return float(total)
