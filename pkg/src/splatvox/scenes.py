"""Synthetic scene generators for experiments and tests.

Three kinds are supported:

* ``random`` -- primitives scattered uniformly over a grid extent, with
  random scales, opacities, orientations, and semantics.
* ``cluster_plus_outlier`` -- a dense, confident cluster of one class
  plus a single isolated primitive of another class placed well over 20
  max-scales away; the geometry behind the floater experiment.  The
  outlier is always the last primitive in the set.
* ``planar_room`` -- axis-aligned floor and walls built from thin
  primitives, for metric sanity checks on recognizable structure.

All generators are deterministic under their seed.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .gaussians import GaussianSet
from .grids import VoxelGridSpec

DEFAULT_NUM_CLASSES = 12
CLASS_LOGIT = 12.0  # concentrates ~0.9999 of the softmax on one class

# conventions used by cluster_plus_outlier
CLUSTER_CLASS = 1
OUTLIER_CLASS = 2
OUTLIER_SEPARATION_FACTOR = 24.0  # times max scale; comfortably past 20


def generate_scene(kind: str, seed: int = 0, **params) -> GaussianSet:
    """Build a synthetic scene; see the module docstring for kinds."""
    generators = {
        "random": _random_scene,
        "cluster_plus_outlier": _cluster_plus_outlier,
        "planar_room": _planar_room,
    }
    if kind not in generators:
        raise InvalidInputError(
            f"unknown scene kind {kind!r}; expected one of {sorted(generators)}"
        )
    try:
        return generators[kind](np.random.default_rng(seed), **params)
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for scene kind {kind!r}: {exc}") from exc


def _class_logits(class_id: int, num_classes: int, n: int = 1) -> np.ndarray:
    """Logits putting almost all softmax mass on one valid class (1-based)."""
    if not 1 <= class_id <= num_classes - 1:
        raise InvalidInputError(f"class {class_id} outside 1..{num_classes - 1}")
    logits = np.zeros((n, num_classes - 1))
    logits[:, class_id - 1] = CLASS_LOGIT
    return logits


def _random_scene(rng, count: int = 100, num_classes: int = DEFAULT_NUM_CLASSES,
                  extent=None, scale_range=(0.01, 0.16),
                  opacity_range=(0.05, 1.0)) -> GaussianSet:
    if count < 0:
        raise InvalidInputError(f"count must be >= 0, got {count}")
    if count == 0:
        return GaussianSet.empty(num_classes)
    if extent is None:
        spec = VoxelGridSpec()
        extent = (spec.extent_min, spec.extent_max)
    lo = np.asarray(extent[0], dtype=np.float64)
    hi = np.asarray(extent[1], dtype=np.float64)
    means = rng.uniform(lo, hi, size=(count, 3))
    scales = rng.uniform(scale_range[0], scale_range[1], size=(count, 3))
    quats = rng.standard_normal((count, 4))
    quats /= np.linalg.norm(quats, axis=1, keepdims=True)
    opacities = rng.uniform(opacity_range[0], opacity_range[1], size=count)
    logits = rng.normal(0.0, 2.0, size=(count, num_classes - 1))
    return GaussianSet(means, scales, quats, opacities, logits)


def _cluster_plus_outlier(rng, cluster_size: int = 50, outlier_opacity: float = 0.01,
                          num_classes: int = DEFAULT_NUM_CLASSES,
                          primitive_scale: float = 0.05) -> GaussianSet:
    if cluster_size < 1:
        raise InvalidInputError(f"cluster_size must be >= 1, got {cluster_size}")
    if not 0.0 < outlier_opacity <= 1.0:
        raise InvalidInputError(f"outlier_opacity must lie in (0, 1], got {outlier_opacity}")

    center = np.array([1.0, 0.0, 1.4])
    jitter = rng.normal(0.0, 0.4 * primitive_scale, size=(cluster_size, 3))
    means = np.vstack([
        center + jitter,
        center + [OUTLIER_SEPARATION_FACTOR * primitive_scale, 0.0, 0.0],
    ])
    n = cluster_size + 1
    scales = np.full((n, 3), primitive_scale)
    rotations = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
    opacities = np.append(np.full(cluster_size, 0.95), outlier_opacity)
    logits = np.vstack([
        _class_logits(CLUSTER_CLASS, num_classes, cluster_size),
        _class_logits(OUTLIER_CLASS, num_classes),
    ])
    return GaussianSet(means, scales, rotations, opacities, logits)


def _planar_room(rng, spacing: float = 0.24, num_classes: int = DEFAULT_NUM_CLASSES,
                 extent=None) -> GaussianSet:
    if spacing <= 0:
        raise InvalidInputError(f"spacing must be positive, got {spacing}")
    if extent is None:
        spec = VoxelGridSpec()
        extent = (spec.extent_min, spec.extent_max)
    lo = np.asarray(extent[0], dtype=np.float64)
    hi = np.asarray(extent[1], dtype=np.float64)
    margin = 0.1
    thin, flat = 0.02, 0.9 * spacing

    means, scales, classes = [], [], []

    def lattice(axis_a, axis_b):
        va = np.arange(lo[axis_a] + margin, hi[axis_a] - margin / 2, spacing)
        vb = np.arange(lo[axis_b] + margin, hi[axis_b] - margin / 2, spacing)
        return [(a, b) for a in va for b in vb]

    # floor: thin in z, class 2 (floor-like); walls at the four lateral
    # faces: thin along their normals, class 3; ceiling: class 1
    for a, b in lattice(0, 1):
        means.append([a, b, lo[2] + margin])
        scales.append([flat, flat, thin])
        classes.append(2)
        means.append([a, b, hi[2] - margin])
        scales.append([flat, flat, thin])
        classes.append(1)
    for a, b in lattice(1, 2):
        for x in (lo[0] + margin, hi[0] - margin):
            means.append([x, a, b])
            scales.append([thin, flat, flat])
            classes.append(3)
    for a, b in lattice(0, 2):
        for y in (lo[1] + margin, hi[1] - margin):
            means.append([a, y, b])
            scales.append([flat, thin, flat])
            classes.append(3)

    n = len(means)
    logits = np.zeros((n, num_classes - 1))
    for i, c in enumerate(classes):
        logits[i] = _class_logits(c, num_classes)[0]
    rotations = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
    opacities = np.full(n, 0.98)
    return GaussianSet(np.array(means), np.array(scales), rotations, opacities, logits)
