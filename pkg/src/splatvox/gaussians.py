"""Anisotropic 3D Gaussian primitives and their closed-form geometry.

A primitive is an ellipsoidal density in world space parameterized by a
mean, per-axis scales, a unit quaternion, an existence opacity, and a
vector of semantic logits over the valid (non-empty) classes.  The full
covariance is reconstructed as R diag(s)^2 R^T, so its eigenvalues are
exactly the squared scales.

Everything here is immutable after construction.  The inverse covariance
and the density normalizer are computed once per primitive and reused by
every kernel evaluation; the voxel-splatting inner loop depends on that
cache.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

QUAT_NORM_TOL = 1e-6
TWO_PI_CUBED_SQRT = (2.0 * np.pi) ** 1.5


def _as_vector(x, size: int, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (size,):
        raise InvalidInputError(f"{name} must be a {size}-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} must be finite, got {v}")
    return v


def quat_to_rotation(q) -> np.ndarray:
    """Convert a scalar-first unit quaternion (w, x, y, z) to a 3x3 rotation.

    Inputs within 1e-6 of unit norm are renormalized silently (file
    round-trip noise); anything further off, including the zero
    quaternion, is rejected.
    """
    q = _as_vector(q, 4, "quaternion")
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > QUAT_NORM_TOL:
        raise InvalidInputError(
            f"quaternion norm {norm:.8g} is outside [1-{QUAT_NORM_TOL}, 1+{QUAT_NORM_TOL}]"
        )
    w, x, y, z = q / norm
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def _rotations_from_quats(quats: np.ndarray) -> np.ndarray:
    """Vectorized quat_to_rotation for an (N, 4) array of near-unit quaternions."""
    norms = np.linalg.norm(quats, axis=1)
    bad = np.abs(norms - 1.0) > QUAT_NORM_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InvalidInputError(
            f"quaternion {i} has norm {norms[i]:.8g}, outside the unit tolerance"
        )
    w, x, y, z = (quats / norms[:, None]).T
    rot = np.empty((quats.shape[0], 3, 3))
    rot[:, 0, 0] = 1 - 2 * (y * y + z * z)
    rot[:, 0, 1] = 2 * (x * y - z * w)
    rot[:, 0, 2] = 2 * (x * z + y * w)
    rot[:, 1, 0] = 2 * (x * y + z * w)
    rot[:, 1, 1] = 1 - 2 * (x * x + z * z)
    rot[:, 1, 2] = 2 * (y * z - x * w)
    rot[:, 2, 0] = 2 * (x * z - y * w)
    rot[:, 2, 1] = 2 * (y * z + x * w)
    rot[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return rot


def covariance(scale, rotation) -> np.ndarray:
    """Full covariance R diag(s)^2 R^T from per-axis scales and a quaternion.

    The result is symmetric positive-definite with eigenvalues equal to the
    squared scale components.
    """
    s = _as_vector(scale, 3, "scale")
    if np.any(s <= 0):
        raise InvalidInputError(f"scale components must be positive, got {s}")
    rot = quat_to_rotation(rotation)
    return (rot * s**2) @ rot.T


def normalized_semantics(logits) -> np.ndarray:
    """Softmax-normalize semantic logits into class weights that sum to 1."""
    v = np.asarray(logits, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError(f"logits must be a non-empty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("logits must be finite")
    shifted = np.exp(v - v.max())
    return shifted / shifted.sum()


class GaussianPrimitive:
    """One anisotropic Gaussian scene element.

    Derived geometric quantities (rotation matrix, covariance, its inverse,
    and the peak density value) are computed eagerly and exposed as
    read-only arrays.
    """

    __slots__ = (
        "mean",
        "scale",
        "rotation",
        "opacity",
        "semantic_logits",
        "rotation_matrix",
        "covariance",
        "inv_covariance",
        "sqrt_det_cov",
        "pdf_peak",
        "semantic_weights",
    )

    def __init__(self, mean, scale, rotation, opacity, semantic_logits):
        self.mean = _as_vector(mean, 3, "mean")
        self.scale = _as_vector(scale, 3, "scale")
        if np.any(self.scale <= 0):
            raise InvalidInputError(f"scale components must be positive, got {self.scale}")
        q = _as_vector(rotation, 4, "rotation")
        norm = float(np.linalg.norm(q))
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            raise InvalidInputError(f"rotation quaternion norm {norm:.8g} is not unit")
        self.rotation = q / norm
        self.opacity = float(opacity)
        if not np.isfinite(self.opacity) or not 0.0 <= self.opacity <= 1.0:
            raise InvalidInputError(f"opacity must lie in [0, 1], got {opacity}")
        logits = np.asarray(semantic_logits, dtype=np.float64)
        if logits.ndim != 1 or logits.size == 0 or not np.all(np.isfinite(logits)):
            raise InvalidInputError("semantic_logits must be a finite non-empty vector")
        self.semantic_logits = logits

        self.rotation_matrix = quat_to_rotation(self.rotation)
        self.covariance = (self.rotation_matrix * self.scale**2) @ self.rotation_matrix.T
        # exact inverse from the factorization; never a numerical solve
        self.inv_covariance = (self.rotation_matrix / self.scale**2) @ self.rotation_matrix.T
        self.sqrt_det_cov = float(np.prod(self.scale))
        self.pdf_peak = 1.0 / (TWO_PI_CUBED_SQRT * self.sqrt_det_cov)
        self.semantic_weights = normalized_semantics(self.semantic_logits)

        for name in self.__slots__:
            value = getattr(self, name)
            if isinstance(value, np.ndarray):
                value.flags.writeable = False

    @property
    def num_classes(self) -> int:
        """Total class count C; logits cover the C-1 valid classes."""
        return self.semantic_logits.size + 1

    def __repr__(self) -> str:
        return (
            f"GaussianPrimitive(mean={self.mean.tolist()}, scale={self.scale.tolist()}, "
            f"opacity={self.opacity:.3f})"
        )


def gaussian_kernel(x, g: GaussianPrimitive) -> float | np.ndarray:
    """Un-normalized Gaussian kernel exp(-0.5 * mahalanobis^2) in (0, 1].

    ``x`` may be a single 3-point or an (M, 3) batch; the result is a float
    or an (M,) array accordingly.  Equals 1 exactly iff x is the mean.
    """
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    d = np.atleast_2d(pts) - g.mean
    mah = np.einsum("mi,ij,mj->m", d, g.inv_covariance, d)
    out = np.exp(-0.5 * mah)
    return float(out[0]) if single else out


def gaussian_pdf(x, g: GaussianPrimitive) -> float | np.ndarray:
    """Gaussian density: the kernel divided by (2*pi)^(3/2) |Sigma|^(1/2)."""
    return gaussian_kernel(x, g) * g.pdf_peak


class GaussianSet:
    """A packed, immutable collection of Gaussian primitives.

    Stores all fields as contiguous arrays along with the cached inverse
    covariances, peak densities, and softmax semantic weights, so the
    splatting kernels never touch per-object state.
    """

    def __init__(self, means, scales, rotations, opacities, semantic_logits):
        means = np.asarray(means, dtype=np.float64).reshape(-1, 3)
        n = means.shape[0]
        scales = np.asarray(scales, dtype=np.float64).reshape(n, 3)
        rotations = np.asarray(rotations, dtype=np.float64).reshape(n, 4)
        opacities = np.asarray(opacities, dtype=np.float64).reshape(n)
        logits = np.asarray(semantic_logits, dtype=np.float64)
        if logits.ndim != 2 or logits.shape[0] != n or logits.shape[1] < 1:
            raise InvalidInputError(
                f"semantic_logits must have shape (N, C-1), got {logits.shape}"
            )
        for name, arr in (("means", means), ("scales", scales),
                          ("rotations", rotations), ("opacities", opacities),
                          ("semantic_logits", logits)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} must be finite")
        if np.any(scales <= 0):
            raise InvalidInputError("all scale components must be positive")
        if np.any((opacities < 0) | (opacities > 1)):
            raise InvalidInputError("opacities must lie in [0, 1]")

        rot = _rotations_from_quats(rotations)
        norms = np.linalg.norm(rotations, axis=1, keepdims=True)

        self.means = means
        self.scales = scales
        self.rotations = rotations / norms
        self.opacities = opacities
        self.semantic_logits = logits
        self.rotation_matrices = rot
        self.inv_covariances = np.einsum("nij,nj,nkj->nik", rot, 1.0 / scales**2, rot)
        self.sqrt_det_covs = np.prod(scales, axis=1)
        self.pdf_peaks = 1.0 / (TWO_PI_CUBED_SQRT * self.sqrt_det_covs)
        shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
        self.semantic_weights = shifted / shifted.sum(axis=1, keepdims=True)

        for arr in (self.means, self.scales, self.rotations, self.opacities,
                    self.semantic_logits, self.rotation_matrices,
                    self.inv_covariances, self.sqrt_det_covs, self.pdf_peaks,
                    self.semantic_weights):
            arr.flags.writeable = False

    @classmethod
    def from_primitives(cls, primitives, num_classes: int | None = None) -> "GaussianSet":
        """Pack a sequence of GaussianPrimitive objects.

        ``num_classes`` is required only for an empty sequence, where the
        logit width cannot be inferred.
        """
        prims = list(primitives)
        if not prims:
            if num_classes is None or num_classes < 2:
                raise InvalidInputError("empty set needs an explicit num_classes >= 2")
            return cls.empty(num_classes)
        return cls(
            np.stack([p.mean for p in prims]),
            np.stack([p.scale for p in prims]),
            np.stack([p.rotation for p in prims]),
            np.array([p.opacity for p in prims]),
            np.stack([p.semantic_logits for p in prims]),
        )

    @classmethod
    def empty(cls, num_classes: int) -> "GaussianSet":
        obj = cls.__new__(cls)
        obj.means = np.zeros((0, 3))
        obj.scales = np.zeros((0, 3))
        obj.rotations = np.zeros((0, 4))
        obj.opacities = np.zeros(0)
        obj.semantic_logits = np.zeros((0, num_classes - 1))
        obj.rotation_matrices = np.zeros((0, 3, 3))
        obj.inv_covariances = np.zeros((0, 3, 3))
        obj.sqrt_det_covs = np.zeros(0)
        obj.pdf_peaks = np.zeros(0)
        obj.semantic_weights = np.zeros((0, num_classes - 1))
        return obj

    def with_opacities(self, opacities) -> "GaussianSet":
        """Copy of this set with reassigned opacities; geometry caches are shared."""
        opacities = np.asarray(opacities, dtype=np.float64).reshape(len(self))
        if not np.all(np.isfinite(opacities)) or np.any((opacities < 0) | (opacities > 1)):
            raise InvalidInputError("opacities must be finite and lie in [0, 1]")
        clone = GaussianSet.__new__(GaussianSet)
        for name in ("means", "scales", "rotations", "semantic_logits",
                     "rotation_matrices", "inv_covariances", "sqrt_det_covs",
                     "pdf_peaks", "semantic_weights"):
            setattr(clone, name, getattr(self, name))
        clone.opacities = opacities
        clone.opacities.flags.writeable = False
        return clone

    def primitive(self, i: int) -> GaussianPrimitive:
        return GaussianPrimitive(
            self.means[i], self.scales[i], self.rotations[i],
            self.opacities[i], self.semantic_logits[i],
        )

    def __len__(self) -> int:
        return self.means.shape[0]

    def __iter__(self):
        return (self.primitive(i) for i in range(len(self)))

    @property
    def num_classes(self) -> int:
        return self.semantic_logits.shape[1] + 1

    @property
    def max_scale(self) -> float:
        """Largest scale component over the whole set (0 for an empty set)."""
        return float(self.scales.max()) if len(self) else 0.0

    def __repr__(self) -> str:
        return f"GaussianSet(n={len(self)}, num_classes={self.num_classes})"
