"""Gaussian-to-voxel aggregation: superposed and decoupled variants.

Two aggregation rules are provided for a point x and a neighborhood of
primitives:

* PGS (probabilistic Gaussian superposition), the baseline: occupancy is
  a probabilistic OR of plain kernel values (opacity unused), while
  semantics form a mixture posterior with the opacities as priors.  With
  a single effective neighbor the posterior normalization cancels the
  opacity entirely, so an isolated low-confidence primitive still claims
  its surroundings ("floaters").
* DGA (decoupled Gaussian aggregation): occupancy is the probabilistic
  OR of opacity-gated kernels, and semantics are the opacity-free mixture
  conditioned on the point being occupied.  Low opacity then suppresses
  the fused class probability directly.

Both rules emit the same fused C-vector layout per voxel: channel 0 is
the probability of empty space, channel l >= 1 is occupancy times the
conditional class weight.

The point ops below evaluate the closed forms over exactly the ids they
are given.  ``splat`` composes them over a whole grid, where the
neighborhood of each voxel is defined by a kernel cutoff and realized by
the spatial index (a proven superset, filtered back down by the exact
kernel test).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .gaussians import GaussianSet
from .grids import LabelGrid, SemanticProbGrid, VoxelGridSpec
from .spatial import SpatialIndex, build_index

MODE_PGS = "pgs"
MODE_DGA = "dga"

# below this mixture-density mass the conditional semantics are undefined;
# fall back to the uniform distribution (the fused value is ~0 anyway)
DENSITY_FLOOR = 1e-30

# switch the survival product to log space once a factor is this small
_LOG_SPACE_THRESHOLD = 1e-12


def _kernels_and_densities(x, ids, gaussians: GaussianSet, kernel_cutoff: float):
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    x = np.asarray(x, dtype=np.float64).reshape(3)
    d = x - gaussians.means[ids]
    mah = np.einsum("ki,kij,kj->k", d, gaussians.inv_covariances[ids], d)
    kern = np.exp(-0.5 * mah)
    if kernel_cutoff > 0.0:
        keep = kern >= kernel_cutoff
        ids, kern = ids[keep], kern[keep]
    return ids, kern, gaussians.pdf_peaks[ids] * kern


def _survival_complement(terms: np.ndarray) -> float:
    """1 - prod(1 - t_i), in log space when any factor underflows."""
    factors = 1.0 - terms
    if factors.size and factors.min() < _LOG_SPACE_THRESHOLD:
        with np.errstate(divide="ignore"):
            return float(-np.expm1(np.log1p(-terms).sum()))
    return float(1.0 - np.prod(factors))


def pgs_occupancy(x, ids, gaussians: GaussianSet, kernel_cutoff: float = 0.0) -> float:
    """Superposed occupancy 1 - prod(1 - kernel_i); opacity deliberately unused."""
    _, kern, _ = _kernels_and_densities(x, ids, gaussians, kernel_cutoff)
    return _survival_complement(kern)


def dga_occupancy(x, ids, gaussians: GaussianSet, kernel_cutoff: float = 0.0) -> float:
    """Gated occupancy 1 - prod(1 - kernel_i * opacity_i)."""
    ids, kern, _ = _kernels_and_densities(x, ids, gaussians, kernel_cutoff)
    return _survival_complement(kern * gaussians.opacities[ids])


def _mixture_semantics(weights: np.ndarray, ids: np.ndarray,
                       gaussians: GaussianSet) -> np.ndarray:
    denom = weights.sum()
    cvalid = gaussians.num_classes - 1
    if denom < DENSITY_FLOOR:
        return np.full(cvalid, 1.0 / cvalid)
    return (weights @ gaussians.semantic_weights[ids]) / denom


def pgs_semantics(x, ids, gaussians: GaussianSet, kernel_cutoff: float = 0.0) -> np.ndarray:
    """Mixture posterior with opacities as priors:
    sum_i p(x|G_i) a_i c_i / sum_j p(x|G_j) a_j."""
    ids, _, dens = _kernels_and_densities(x, ids, gaussians, kernel_cutoff)
    return _mixture_semantics(dens * gaussians.opacities[ids], ids, gaussians)


def dga_semantics(x, ids, gaussians: GaussianSet, kernel_cutoff: float = 0.0) -> np.ndarray:
    """Opacity-free conditional class distribution:
    sum_i p(x|G_i) c_i / sum_j p(x|G_j)."""
    ids, _, dens = _kernels_and_densities(x, ids, gaussians, kernel_cutoff)
    return _mixture_semantics(dens, ids, gaussians)


def fuse(alpha: float, semantics: np.ndarray) -> np.ndarray:
    """Fuse occupancy and conditional semantics into a full C-distribution.

    Channel 0 gets 1 - alpha, channel l gets alpha * semantics[l-1]; the
    result sums to 1 whenever the semantics do.
    """
    sem = np.asarray(semantics, dtype=np.float64)
    out = np.empty(sem.size + 1)
    out[0] = 1.0 - alpha
    out[1:] = alpha * sem
    return out


def splat(gaussians: GaussianSet, spec: VoxelGridSpec, mode: str,
          index: SpatialIndex, threads: int = 0) -> SemanticProbGrid:
    """Evaluate the chosen aggregator at every voxel center.

    PGS mode composes its occupancy and semantics through the same fused
    C-vector shape as DGA so the two modes yield comparable grids.  Voxel
    chunks are processed in parallel; the output is bit-identical for any
    thread count.

    ``threads``: 0 means the SPLATVOX_THREADS environment variable, or
    else all available cores.
    """
    if index.gaussians is not gaussians and len(index.gaussians) != len(gaussians):
        raise InvalidInputError(
            f"index was built over {len(index.gaussians)} primitives, "
            f"but the scene has {len(gaussians)}"
        )
    if mode not in (MODE_PGS, MODE_DGA):
        raise InvalidInputError(f"mode must be '{MODE_PGS}' or '{MODE_DGA}', got {mode!r}")
    num_classes = gaussians.num_classes

    from . import _kernels

    centers = spec.voxel_centers()
    nvox = centers.shape[0]

    # voxels sharing a cell share one candidate list
    keys = np.floor(centers / index.cell_size).astype(np.int64)
    unique_keys, cell_of_voxel = np.unique(keys, axis=0, return_inverse=True)
    cell_of_voxel = cell_of_voxel.reshape(-1)
    lists = [index.cells.get(tuple(k), None) for k in unique_keys]
    pool_offsets = np.zeros(len(lists) + 1, dtype=np.int64)
    pool_offsets[1:] = np.cumsum([0 if l is None else l.size for l in lists])
    nonempty = [l for l in lists if l is not None and l.size]
    pool_ids = np.concatenate(nonempty) if nonempty else np.zeros(0, dtype=np.int64)

    out = np.empty((nvox, num_classes))
    _kernels.set_threads(_resolve_threads(threads))
    _kernels.splat_cells(
        centers, cell_of_voxel.astype(np.int64), pool_offsets, pool_ids,
        gaussians.means, gaussians.inv_covariances, gaussians.opacities,
        gaussians.pdf_peaks, gaussians.semantic_weights,
        index.kernel_cutoff, mode == MODE_DGA, out,
    )
    return SemanticProbGrid(spec, out.reshape(spec.dims + (num_classes,)))


def _resolve_threads(threads: int) -> int:
    if threads == 0:
        env = os.environ.get("SPLATVOX_THREADS", "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise InvalidInputError(f"SPLATVOX_THREADS must be an integer, got {env!r}")
        if threads == 0:
            threads = os.cpu_count() or 1
    if threads < 0:
        raise InvalidInputError(f"thread count must be >= 0, got {threads}")
    return threads


def argmax_labels(grid: SemanticProbGrid) -> LabelGrid:
    """Per-voxel argmax over the C probabilities; ties go to the lowest class."""
    labels = np.argmax(grid.probs, axis=-1)
    return LabelGrid(grid.spec, labels, num_classes=grid.num_classes)


@dataclass
class FloaterReport:
    """Aggregator behaviour at the mean of an isolated low-opacity primitive."""

    outlier_opacity: float
    cluster_size: int
    pgs_posterior: float      # posterior mass the superposed mixture puts on the outlier class
    pgs_label_prob: float     # fused probability of that class under PGS
    dga_occupied_prob: float  # fused probability of that class under DGA

    def as_lines(self) -> list[str]:
        return [
            f"outlier_opacity={self.outlier_opacity}",
            f"cluster_size={self.cluster_size}",
            f"pgs_posterior={self.pgs_posterior!r}",
            f"pgs_label_prob={self.pgs_label_prob!r}",
            f"dga_occupied_prob={self.dga_occupied_prob!r}",
        ]


def floater_experiment(cluster_size: int, outlier_opacity: float,
                       seed: int = 0) -> FloaterReport:
    """Reproduce the outlier-collapse pathology on a synthetic scene.

    A dense cluster of high-opacity primitives is paired with one isolated
    primitive of a distinct class placed at least 20 max-scales away with
    the given opacity.  Both aggregators are evaluated at the outlier's
    mean: the superposed posterior collapses onto the outlier class no
    matter how small its opacity, while the decoupled fusion bounds the
    fused class probability by the opacity itself.
    """
    if cluster_size < 1:
        raise InvalidInputError(f"cluster_size must be >= 1, got {cluster_size}")
    if not 0.0 < outlier_opacity < 1.0 + 1e-12:
        raise InvalidInputError(f"outlier_opacity must lie in (0, 1], got {outlier_opacity}")

    from .scenes import generate_scene

    scene = generate_scene("cluster_plus_outlier", seed=seed,
                           cluster_size=cluster_size,
                           outlier_opacity=outlier_opacity)
    outlier_id = len(scene) - 1  # appended last by construction
    outlier_class = int(np.argmax(scene.semantic_weights[outlier_id])) + 1
    x_f = scene.means[outlier_id]
    ids = np.arange(len(scene))

    pgs_e = pgs_semantics(x_f, ids, scene)
    pgs_alpha = pgs_occupancy(x_f, ids, scene)
    dga_e = dga_semantics(x_f, ids, scene)
    dga_alpha = dga_occupancy(x_f, ids, scene)

    return FloaterReport(
        outlier_opacity=float(outlier_opacity),
        cluster_size=int(cluster_size),
        pgs_posterior=float(pgs_e[outlier_class - 1]),
        pgs_label_prob=float(fuse(pgs_alpha, pgs_e)[outlier_class]),
        dga_occupied_prob=float(fuse(dga_alpha, dga_e)[outlier_class]),
    )
