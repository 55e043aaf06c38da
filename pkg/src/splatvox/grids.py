"""Voxel grid geometry and the dense semantic outputs written onto it.

The default local grid covers a 4.8 m x 4.8 m x 2.88 m region in front of
the camera at 0.08 m resolution (60 x 60 x 36 voxels), centered laterally
on the optical axis with z pointing away from the camera.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

DEFAULT_DIMS = (60, 60, 36)
DEFAULT_VOXEL_SIZE = 0.08
DEFAULT_ORIGIN = (-2.4, -2.4, 0.0)


@dataclass(frozen=True)
class VoxelGridSpec:
    """Axis-aligned voxel lattice: origin corner, voxel edge length, counts."""

    origin: tuple[float, float, float] = DEFAULT_ORIGIN
    voxel_size: float = DEFAULT_VOXEL_SIZE
    dims: tuple[int, int, int] = DEFAULT_DIMS

    def __post_init__(self):
        origin = tuple(float(v) for v in self.origin)
        dims = tuple(int(v) for v in self.dims)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "voxel_size", float(self.voxel_size))
        if len(origin) != 3 or not all(np.isfinite(origin)):
            raise InvalidInputError(f"origin must be a finite 3-point, got {self.origin}")
        if not np.isfinite(self.voxel_size) or self.voxel_size <= 0:
            raise InvalidInputError(f"voxel_size must be positive, got {self.voxel_size}")
        if len(dims) != 3 or any(d <= 0 for d in dims):
            raise InvalidInputError(f"dims must be three positive integers, got {self.dims}")

    @property
    def num_voxels(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def extent_min(self) -> np.ndarray:
        return np.asarray(self.origin, dtype=np.float64)

    @property
    def extent_max(self) -> np.ndarray:
        return self.extent_min + self.voxel_size * np.asarray(self.dims, dtype=np.float64)

    def voxel_centers(self) -> np.ndarray:
        """Centers of all voxels as a (X*Y*Z, 3) array in C (x-major) order."""
        axes = [
            self.origin[a] + (np.arange(self.dims[a]) + 0.5) * self.voxel_size
            for a in range(3)
        ]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        return np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)


@dataclass
class SemanticProbGrid:
    """Per-voxel class distribution; channel 0 is the empty class."""

    spec: VoxelGridSpec
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 4 or p.shape[:3] != self.spec.dims or p.shape[3] < 2:
            raise InvalidInputError(
                f"probs must have shape {self.spec.dims} + (C,), got {p.shape}"
            )
        if np.any(p < -1e-9) or np.any(p > 1 + 1e-9):
            raise InvalidInputError("probabilities must lie in [0, 1]")
        sums = p.sum(axis=-1)
        worst = float(np.abs(sums - 1.0).max()) if p.size else 0.0
        if worst > 1e-6:
            raise InvalidInputError(
                f"per-voxel probabilities must sum to 1 within 1e-6 (worst off by {worst:.3g})"
            )
        self.probs = p

    @property
    def num_classes(self) -> int:
        return self.probs.shape[3]


@dataclass
class LabelGrid:
    """Per-voxel integer class label in {0, ..., C-1}; 0 is empty space."""

    spec: VoxelGridSpec
    labels: np.ndarray = field(repr=False)
    num_classes: int = 0

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.shape != self.spec.dims:
            raise InvalidInputError(f"labels must have shape {self.spec.dims}, got {lab.shape}")
        if not np.issubdtype(lab.dtype, np.integer):
            raise InvalidInputError(f"labels must be integers, got dtype {lab.dtype}")
        if self.num_classes <= 0:
            self.num_classes = int(lab.max(initial=0)) + 1
        if lab.size and (lab.min() < 0 or lab.max() >= self.num_classes):
            raise InvalidInputError(
                f"labels must lie in [0, {self.num_classes - 1}], "
                f"got range [{lab.min()}, {lab.max()}]"
            )
        self.labels = lab.astype(np.int64, copy=False)
