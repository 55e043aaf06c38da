"""Compiled inner loop for Gaussian-to-voxel splatting.

Kept in its own module so importing the rest of the package never pays
the numba import/compile cost; the JIT cache makes the compilation a
one-time event per machine.

The thread ceiling must be raised before numba is first imported, since
numba freezes its maximum at import time.  Results are bit-identical for
any thread count: each voxel is written by exactly one thread and its
accumulation order is fixed by the candidate id order.
"""

import os

os.environ.setdefault("NUMBA_NUM_THREADS", str(max(16, os.cpu_count() or 1)))
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numba
import numpy as np
from numba import njit, prange

MAX_THREADS = int(numba.config.NUMBA_NUM_THREADS)


def set_threads(n: int) -> None:
    numba.set_num_threads(max(1, min(int(n), MAX_THREADS)))


@njit(parallel=True, fastmath=False, cache=True)
def splat_cells(centers, cell_of_voxel, pool_offsets, pool_ids,
                means, inv_covs, opacities, pdf_peaks, sem_weights,
                kernel_cutoff, gate_opacity, out):
    """Evaluate the per-voxel aggregation over each voxel's candidate list.

    centers        (V, 3) voxel centers
    cell_of_voxel  (V,)   compact cell index per voxel
    pool_offsets   (ncells+1,) CSR offsets into pool_ids
    pool_ids       concatenated ascending candidate ids per cell
    gate_opacity   True: occupancy gated by opacity, semantics opacity-free
                   False: plain-kernel occupancy, opacity-weighted semantics
    out            (V, C) written in place; channel 0 is the empty class
    """
    nvox = centers.shape[0]
    cvalid = sem_weights.shape[1]
    for v in prange(nvox):
        x0 = centers[v, 0]
        x1 = centers[v, 1]
        x2 = centers[v, 2]
        for c in range(cvalid):
            out[v, 1 + c] = 0.0
        log_vacancy = 0.0
        density_sum = 0.0
        cell = cell_of_voxel[v]
        for e in range(pool_offsets[cell], pool_offsets[cell + 1]):
            i = pool_ids[e]
            d0 = x0 - means[i, 0]
            d1 = x1 - means[i, 1]
            d2 = x2 - means[i, 2]
            mah = (d0 * (inv_covs[i, 0, 0] * d0 + inv_covs[i, 0, 1] * d1 + inv_covs[i, 0, 2] * d2)
                   + d1 * (inv_covs[i, 1, 0] * d0 + inv_covs[i, 1, 1] * d1 + inv_covs[i, 1, 2] * d2)
                   + d2 * (inv_covs[i, 2, 0] * d0 + inv_covs[i, 2, 1] * d1 + inv_covs[i, 2, 2] * d2))
            kern = np.exp(-0.5 * mah)
            if kern < kernel_cutoff:
                continue
            if gate_opacity:
                occ_term = kern * opacities[i]
                density = pdf_peaks[i] * kern
            else:
                occ_term = kern
                density = pdf_peaks[i] * kern * opacities[i]
            if occ_term < 1.0:
                log_vacancy += np.log1p(-occ_term)
            else:
                log_vacancy = -np.inf
            density_sum += density
            for c in range(cvalid):
                out[v, 1 + c] += density * sem_weights[i, c]
        alpha = -np.expm1(log_vacancy)
        out[v, 0] = 1.0 - alpha
        if density_sum < 1e-30:
            uniform = alpha / cvalid
            for c in range(cvalid):
                out[v, 1 + c] = uniform
        else:
            for c in range(cvalid):
                out[v, 1 + c] = alpha * out[v, 1 + c] / density_sum
