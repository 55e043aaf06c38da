"""Group cross-attention fusion of depth and multi-scale image features.

Queries come from sampled depth features, keys and values from each of L
sampled image-feature scales.  Channels are split into G groups; inside
each group a single shared projection vector turns query+key sums into
scalar attention logits, softmaxed across the scale dimension.  The cost
is linear in the number of points, unlike quadratic dot-product
cross-attention.

No 1/sqrt(d) logit scaling is applied, and projections carry no biases.
The point-wise feed-forward block uses GELU, a 4x hidden width, and a
residual connection; none of the three is load-bearing for correctness
and all are arguments or documented defaults.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import InvalidInputError


@dataclass
class FeatureSet:
    """Sampled features: depth (N, D) plus L image scales stacked (L, N, D)."""

    depth: np.ndarray = field(repr=False)
    image_scales: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=np.float64)
        im = np.asarray(self.image_scales, dtype=np.float64)
        if im.ndim == 2:
            im = im[None]
        if d.ndim != 2 or im.ndim != 3 or im.shape[1:] != d.shape:
            raise InvalidInputError(
                f"expected depth (N, D) and image scales (L, N, D); "
                f"got {d.shape} and {np.asarray(self.image_scales).shape}"
            )
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(im))):
            raise InvalidInputError("features must be finite")
        self.depth = d
        self.image_scales = im

    @property
    def num_points(self) -> int:
        return self.depth.shape[0]

    @property
    def num_channels(self) -> int:
        return self.depth.shape[1]

    @property
    def num_scales(self) -> int:
        return self.image_scales.shape[0]


@dataclass
class GcaWeights:
    """Projection weights: full-width query/key/value/output matrices plus
    the per-group attention vector shared across groups and scales."""

    w_query: np.ndarray = field(repr=False)
    w_key: np.ndarray = field(repr=False)
    w_value: np.ndarray = field(repr=False)
    w_attn: np.ndarray = field(repr=False)
    w_out: np.ndarray = field(repr=False)
    groups: int = 1

    def __post_init__(self):
        wq = np.asarray(self.w_query, dtype=np.float64)
        d = wq.shape[0]
        for name in ("w_query", "w_key", "w_value", "w_out"):
            m = np.asarray(getattr(self, name), dtype=np.float64)
            if m.shape != (d, d) or not np.all(np.isfinite(m)):
                raise InvalidInputError(f"{name} must be a finite ({d}, {d}) matrix")
            setattr(self, name, m)
        if self.groups < 1 or d % self.groups != 0:
            raise InvalidInputError(
                f"channel count {d} must be divisible by groups={self.groups}"
            )
        wa = np.asarray(self.w_attn, dtype=np.float64).reshape(-1)
        if wa.shape != (d // self.groups,) or not np.all(np.isfinite(wa)):
            raise InvalidInputError(
                f"w_attn must be a finite vector of length D/G={d // self.groups}"
            )
        self.w_attn = wa

    @property
    def num_channels(self) -> int:
        return self.w_query.shape[0]

    @property
    def group_channels(self) -> int:
        return self.num_channels // self.groups


def random_gca_weights(d: int, groups: int, seed: int = 0) -> GcaWeights:
    """Seeded uniform weights in [-1/sqrt(D), 1/sqrt(D)]; keeps the scale
    softmax well away from saturation in randomized checks."""
    if d < 1 or groups < 1 or d % groups:
        raise InvalidInputError(f"need D divisible by groups, got D={d}, groups={groups}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(d)
    u = lambda *shape: rng.uniform(-bound, bound, size=shape)
    return GcaWeights(u(d, d), u(d, d), u(d, d), u(d // groups), u(d, d), groups)


def _check_dims(feats: FeatureSet, weights: GcaWeights) -> None:
    if feats.num_channels != weights.num_channels:
        raise InvalidInputError(
            f"feature channels {feats.num_channels} != weight channels {weights.num_channels}"
        )


_BLOCK_POINTS = 4096  # keeps per-block temporaries cache-resident


def gca_forward(feats: FeatureSet, weights: GcaWeights,
                return_attention: bool = False) -> np.ndarray | tuple:
    """Fuse depth and image features with grouped linear-cost attention.

    Per group g and scale l: queries, keys, and values are group slices of
    the full projections; the attention logit is w_attn . (Q_g + K_g^l),
    softmaxed over l; the output concatenates sum_l A_g^l * V_g^l over
    groups and applies the output projection.

    Points are processed in fixed-size blocks so the working set stays in
    cache and the cost stays linear in N.  With ``return_attention`` the
    (L, N, G) attention tensor is returned as well; it sums to 1 over the
    scale axis.
    """
    _check_dims(feats, weights)
    n, d = feats.depth.shape
    g, dg = weights.groups, weights.group_channels
    scales = feats.image_scales
    num_scales = scales.shape[0]

    out = np.empty((n, d))
    attention_full = np.empty((num_scales, n, g)) if return_attention else None

    for start in range(0, n, _BLOCK_POINTS):
        stop = min(start + _BLOCK_POINTS, n)
        m = stop - start
        q = (feats.depth[start:stop] @ weights.w_query).reshape(m, g, dg)

        logits = np.empty((num_scales, m, g))
        for l in range(num_scales):
            k = (scales[l, start:stop] @ weights.w_key).reshape(m, g, dg)
            logits[l] = (q + k) @ weights.w_attn
        shifted = np.exp(logits - logits.max(axis=0, keepdims=True))
        attention = shifted / shifted.sum(axis=0, keepdims=True)  # (L, m, G)

        fused = np.zeros((m, g, dg))
        for l in range(num_scales):
            v = (scales[l, start:stop] @ weights.w_value).reshape(m, g, dg)
            fused += attention[l][:, :, None] * v
        out[start:stop] = fused.reshape(m, d) @ weights.w_out
        if return_attention:
            attention_full[:, start:stop] = attention

    return (out, attention_full) if return_attention else out


def gca_reference(feats: FeatureSet, weights: GcaWeights) -> np.ndarray:
    """Plain per-point loop transcription of the grouped attention; the
    slow cross-check for gca_forward."""
    _check_dims(feats, weights)
    n, d = feats.depth.shape
    g, dg = weights.groups, weights.group_channels
    num_scales = feats.num_scales

    out = np.zeros((n, d))
    for p in range(n):
        q_full = feats.depth[p] @ weights.w_query
        concat = np.zeros(d)
        for grp in range(g):
            sl = slice(grp * dg, (grp + 1) * dg)
            q_g = q_full[sl]
            scores = []
            vals = []
            for l in range(num_scales):
                k_g = (feats.image_scales[l][p] @ weights.w_key)[sl]
                v_g = (feats.image_scales[l][p] @ weights.w_value)[sl]
                scores.append(float(np.dot(weights.w_attn, q_g + k_g)))
                vals.append(v_g)
            scores = np.array(scores)
            attn = np.exp(scores - scores.max())
            attn /= attn.sum()
            agg = np.zeros(dg)
            for l in range(num_scales):
                agg += attn[l] * vals[l]
            concat[sl] = agg
        out[p] = concat @ weights.w_out
    return out


def ffn_forward(x: np.ndarray, w1: np.ndarray, b1: np.ndarray,
                w2: np.ndarray, b2: np.ndarray) -> np.ndarray:
    """Point-wise feed-forward with GELU and a residual connection:
    x + gelu(x @ w1 + b1) @ w2 + b2."""
    x = np.asarray(x, dtype=np.float64)
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    b1 = np.asarray(b1, dtype=np.float64)
    b2 = np.asarray(b2, dtype=np.float64)
    if x.ndim != 2 or w1.shape[0] != x.shape[1] or w2.shape != (w1.shape[1], x.shape[1]) \
            or b1.shape != (w1.shape[1],) or b2.shape != (x.shape[1],):
        raise InvalidInputError(
            f"inconsistent FFN shapes: x{x.shape} w1{w1.shape} b1{b1.shape} "
            f"w2{w2.shape} b2{b2.shape}"
        )
    hidden = gelu(x @ w1 + b1)
    return x + hidden @ w2 + b2


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact (erf-based) Gaussian error linear unit."""
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def dot_product_attention_reference(feats: FeatureSet, weights: GcaWeights) -> np.ndarray:
    """Standard quadratic cross-attention over the same projections.

    Timing comparator only: softmax(Q K^T) V per scale, averaged over
    scales, then the output projection.  Cost grows as N^2 per scale.
    """
    _check_dims(feats, weights)
    q = feats.depth @ weights.w_query
    acc = np.zeros_like(q)
    for l in range(feats.num_scales):
        k = feats.image_scales[l] @ weights.w_key
        v = feats.image_scales[l] @ weights.w_value
        scores = q @ k.T / np.sqrt(q.shape[1])
        scores -= scores.max(axis=1, keepdims=True)
        attn = np.exp(scores)
        attn /= attn.sum(axis=1, keepdims=True)
        acc += attn @ v
    return (acc / feats.num_scales) @ weights.w_out


@dataclass
class BenchResult:
    """Wall-time sweep over point counts and the fitted log-log slope."""

    entries: list  # (n, seconds) pairs
    slope: float

    def as_lines(self) -> list[str]:
        lines = [f"n={n} time_s={t:.6f}" for n, t in self.entries]
        lines.append(f"slope={self.slope:.4f}")
        return lines


def complexity_bench(n_values, d: int, num_scales: int, groups: int,
                     repeats: int = 3, seed: int = 0,
                     forward=gca_forward) -> BenchResult:
    """Time ``forward`` across point counts and fit log(time) ~ log(N).

    Uses the best of ``repeats`` runs per size to suppress scheduler
    noise.  A slope near 1 confirms linear cost in the point count.
    """
    n_values = [int(n) for n in n_values]
    if not n_values or min(n_values) < 1:
        raise InvalidInputError(f"need positive point counts, got {n_values}")
    weights = random_gca_weights(d, groups, seed=seed)
    rng = np.random.default_rng(seed + 1)

    entries = []
    for n in n_values:
        feats = FeatureSet(
            rng.standard_normal((n, d)),
            rng.standard_normal((num_scales, n, d)),
        )
        forward(feats, weights)  # warm caches and allocator
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            forward(feats, weights)
            best = min(best, time.perf_counter() - t0)
        entries.append((n, best))

    slope = float(np.polyfit(np.log([n for n, _ in entries]),
                             np.log([t for _, t in entries]), 1)[0])
    return BenchResult(entries, slope)
