"""Uniform-grid culling structure for Gaussian neighborhood queries.

Each primitive gets a conservative influence sphere of radius
kappa * max(scale); because the largest covariance eigenvalue is
max(scale)^2, any point outside that sphere sees a kernel value below
exp(-kappa^2 / 2).  A primitive is registered in every grid cell its
sphere overlaps, so a cell lookup is guaranteed to return a superset of
every primitive whose kernel at the query point reaches the cutoff.

Queries are read-only after the build and safe to run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .gaussians import GaussianSet

DEFAULT_KAPPA = 3.0
_EMPTY_IDS = np.empty(0, dtype=np.int64)
_EMPTY_IDS.flags.writeable = False


@dataclass
class SpatialIndex:
    """Hash map from integer cell coordinates to ascending primitive ids."""

    gaussians: GaussianSet
    kappa: float
    cell_size: float
    radii: np.ndarray = field(repr=False)
    cells: dict = field(repr=False)

    @property
    def kernel_cutoff(self) -> float:
        """Kernel value below which a primitive may be culled: exp(-kappa^2/2)."""
        return math.exp(-0.5 * self.kappa**2)


def build_index(gaussians: GaussianSet, kappa: float = DEFAULT_KAPPA) -> SpatialIndex:
    """Bin every primitive into the cells overlapped by its influence sphere.

    The cell edge is the median influence diameter (0.08 m for an empty
    set), a compromise between list length and the number of cells a
    sphere straddles.
    """
    if not np.isfinite(kappa) or kappa <= 0:
        raise InvalidInputError(f"kappa must be positive, got {kappa}")
    n = len(gaussians)
    if n == 0:
        return SpatialIndex(gaussians, float(kappa), 0.08,
                            np.zeros(0), {})

    radii = kappa * gaussians.scales.max(axis=1)
    cell_size = float(np.median(2.0 * radii))

    buckets: dict[tuple[int, int, int], list[int]] = {}
    means = gaussians.means
    for i in range(n):
        mu = means[i]
        r = radii[i]
        lo = np.floor((mu - r) / cell_size).astype(np.int64)
        hi = np.floor((mu + r) / cell_size).astype(np.int64)
        r2 = r * r
        for cx in range(lo[0], hi[0] + 1):
            for cy in range(lo[1], hi[1] + 1):
                for cz in range(lo[2], hi[2] + 1):
                    # closest point of the cell box to the sphere center
                    qx = min(max(mu[0], cx * cell_size), (cx + 1) * cell_size)
                    qy = min(max(mu[1], cy * cell_size), (cy + 1) * cell_size)
                    qz = min(max(mu[2], cz * cell_size), (cz + 1) * cell_size)
                    dx = qx - mu[0]
                    dy = qy - mu[1]
                    dz = qz - mu[2]
                    if dx * dx + dy * dy + dz * dz <= r2:
                        buckets.setdefault((cx, cy, cz), []).append(i)

    cells = {}
    for key, ids in buckets.items():
        arr = np.array(ids, dtype=np.int64)  # insertion order is ascending
        arr.flags.writeable = False
        cells[key] = arr
    radii.flags.writeable = False
    return SpatialIndex(gaussians, float(kappa), cell_size, radii, cells)


def neighbors(index: SpatialIndex, x) -> np.ndarray:
    """Candidate primitive ids for a query point, in ascending order.

    Guaranteed to include every primitive whose kernel at ``x`` is at
    least ``index.kernel_cutoff``; points outside all occupied cells get
    an empty array.
    """
    p = np.asarray(x, dtype=np.float64)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise InvalidInputError(f"query point must be a finite 3-point, got {x}")
    key = tuple(int(math.floor(c / index.cell_size)) for c in p)
    return index.cells.get(key, _EMPTY_IDS)
