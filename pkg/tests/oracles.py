"""Independent reference implementations used to cross-check the library.

Each oracle deliberately takes a different computational route from the
code it verifies: quaternion sandwich products instead of the rotation
matrix formula, Cramer's rule instead of cached inverses, direct scalar
loops instead of vectorized kernels, primitive-major full-set splatting
instead of the cell-indexed voxel-major kernel, and so on.
"""

import math

import numpy as np


# ------------------------------------------------------------- rotations

def quat_multiply(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def rotate_vector_sandwich(q, v):
    """Rotate v by unit quaternion q via q * (0, v) * q~."""
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q)
    conj = q * np.array([1.0, -1.0, -1.0, -1.0])
    return quat_multiply(quat_multiply(q, np.r_[0.0, v]), conj)[1:]


def rotation_matrix_from_basis(q):
    """Columns are the rotated basis vectors."""
    return np.stack([rotate_vector_sandwich(q, e) for e in np.eye(3)], axis=1)


# ------------------------------------------------------- linear algebra

def cramer_solve_3x3(a, b):
    """Solve a @ x = b for 3x3 a by Cramer's rule."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)

    def det3(m):
        return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
                - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
                + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))

    d = det3(a)
    x = np.empty(3)
    for i in range(3):
        m = a.copy()
        m[:, i] = b
        x[i] = det3(m) / d
    return x


def kernel_via_cramer(x, mean, cov):
    """exp(-0.5 d^T cov^{-1} d) with the solve done by Cramer's rule."""
    d = np.asarray(x, dtype=np.float64) - np.asarray(mean, dtype=np.float64)
    return math.exp(-0.5 * float(d @ cramer_solve_3x3(cov, d)))


def softmax_logsumexp(logits):
    """Softmax through an explicit max-shifted log-sum-exp."""
    v = np.asarray(logits, dtype=np.float64)
    m = v.max()
    lse = m + math.log(np.sum(np.exp(v - m)))
    return np.exp(v - lse)


# ----------------------------------------------------------- aggregation

def occupancy_log_space(terms):
    """1 - prod(1 - t) computed purely as a sum of log1p terms."""
    total = 0.0
    for t in np.asarray(terms, dtype=np.float64):
        if t >= 1.0:
            return 1.0
        total += math.log1p(-t)
    return -math.expm1(total)


def semantics_double_loop(x, ids, gset, use_opacity_prior):
    """Naive scalar-loop mixture semantics over the given ids."""
    import splatvox as sv

    c1 = gset.num_classes - 1
    num = np.zeros(c1)
    den = 0.0
    for i in np.asarray(ids, dtype=np.int64):
        p = sv.gaussian_pdf(np.asarray(x, dtype=np.float64), gset.primitive(i))
        w = p * gset.opacities[i] if use_opacity_prior else p
        den += w
        for c in range(c1):
            num[c] += w * gset.semantic_weights[i, c]
    if den < 1e-30:
        return np.full(c1, 1.0 / c1)
    return num / den


def dga_semantics_double_sum(x, ids, gset, kernel_cutoff=0.0):
    """Pre-simplification conditional distribution: the denominator sums
    the class-weighted densities over every class instead of using the
    unit-sum property of softmax weights."""
    import splatvox as sv

    c1 = gset.num_classes - 1
    num = np.zeros(c1)
    den = 0.0
    for i in np.asarray(ids, dtype=np.int64):
        prim = gset.primitive(i)
        if kernel_cutoff > 0.0 and sv.gaussian_kernel(np.asarray(x, float), prim) < kernel_cutoff:
            continue
        p = sv.gaussian_pdf(np.asarray(x, dtype=np.float64), prim)
        for k in range(c1):
            num[k] += p * gset.semantic_weights[i, k]
        for l in range(c1):
            den += p * gset.semantic_weights[i, l]
    if den < 1e-30:
        return np.full(c1, 1.0 / c1)
    return num / den


def brute_force_splat(gset, spec, mode, kappa):
    """Full-set, primitive-major splat with direct products; no index."""
    eps = math.exp(-0.5 * kappa * kappa)
    centers = spec.voxel_centers()
    nvox = centers.shape[0]
    c1 = gset.num_classes - 1
    survival = np.ones(nvox)
    density = np.zeros(nvox)
    weighted = np.zeros((nvox, c1))
    for i in range(len(gset)):
        d = centers - gset.means[i]
        mah = np.einsum("vj,jk,vk->v", d, gset.inv_covariances[i], d)
        kern = np.exp(-0.5 * mah)
        sel = kern >= eps
        if not sel.any():
            continue
        k = kern[sel]
        a = gset.opacities[i]
        if mode == "dga":
            occ, dens = k * a, gset.pdf_peaks[i] * k
        else:
            occ, dens = k, gset.pdf_peaks[i] * k * a
        survival[sel] *= 1.0 - occ
        density[sel] += dens
        weighted[sel] += dens[:, None] * gset.semantic_weights[i]
    alpha = 1.0 - survival
    uniform = np.full((nvox, c1), 1.0 / c1)
    sem = np.where(density[:, None] < 1e-30, uniform,
                   weighted / np.maximum(density, 1e-300)[:, None])
    probs = np.empty((nvox, c1 + 1))
    probs[:, 0] = 1.0 - alpha
    probs[:, 1:] = alpha[:, None] * sem
    return probs.reshape(spec.dims + (c1 + 1,))


def argmax_scan(probs):
    """Per-voxel linear scan with explicit lowest-index tie-breaking."""
    flat = probs.reshape(-1, probs.shape[-1])
    out = np.empty(flat.shape[0], dtype=np.int64)
    for v in range(flat.shape[0]):
        best, best_c = -np.inf, 0
        for c, value in enumerate(flat[v]):
            if value > best:
                best, best_c = value, c
        out[v] = best_c
    return out.reshape(probs.shape[:-1])


# --------------------------------------------------------------- metrics

def confusion_iou(pred, gt, mask, num_classes):
    """IoU scores from per-voxel Python counting."""
    inter_occ = union_occ = 0
    inter = [0] * num_classes
    union = [0] * num_classes
    for p, g, m in zip(pred.ravel(), gt.ravel(), mask.ravel()):
        if not m:
            continue
        if p > 0 or g > 0:
            union_occ += 1
            if p > 0 and g > 0:
                inter_occ += 1
        for c in range(1, num_classes):
            if p == c or g == c:
                union[c] += 1
                if p == c and g == c:
                    inter[c] += 1
    iou = inter_occ / union_occ if union_occ else 1.0
    per_class = [inter[c] / union[c] if union[c] else math.nan
                 for c in range(1, num_classes)]
    present = [v for v in per_class if not math.isnan(v)]
    miou = sum(present) / len(present) if present else 1.0
    return iou, per_class, miou


def chamfer_l1_quadratic(a, b):
    """Exhaustive O(n^2) symmetric mean nearest-neighbor L1 distance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d_ab = [min(np.abs(p - q).sum() for q in b) for p in a]
    d_ba = [min(np.abs(q - p).sum() for p in a) for q in b]
    return 0.5 * (np.mean(d_ab) + np.mean(d_ba))
