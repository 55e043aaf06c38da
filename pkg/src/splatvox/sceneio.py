"""Portable on-disk formats: text scenes and binary grids.

Scene files are JSON (small, human-auditable, values round-trip exactly
through Python's shortest-repr float serialization).  Grid files are a
fixed little-endian binary container for bit-exact cross-implementation
comparison:

    magic   4 bytes  b"SSCG"
    version u16      currently 1
    kind    u8       0 = u8 labels, 1 = f32 probabilities, 2 = f32 scalars
                     (depth maps and generic float tensors)
    dims    4 x u32  (X, Y, Z, channels)
    origin  3 x f64  grid origin in meters (zeros when not applicable)
    vsize   f64      voxel edge in meters (0 when not applicable)
    payload row-major (C-order) over (X, Y, Z, channels)

Labels are stored with channels = 1; depth maps as (H, W, 1, 1); a 2-D
tensor (rows, cols) as (rows, cols, 1, 1).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .attention import GcaWeights
from .errors import InvalidInputError
from .gaussians import GaussianSet
from .grids import LabelGrid, SemanticProbGrid, VoxelGridSpec

SCENE_VERSION = 1

GRID_MAGIC = b"SSCG"
GRID_VERSION = 1
KIND_LABEL_U8 = 0
KIND_PROB_F32 = 1
KIND_SCALAR_F32 = 2

_HEADER = struct.Struct("<4sHB4I3dd")
_KIND_DTYPE = {KIND_LABEL_U8: np.uint8, KIND_PROB_F32: np.float32,
               KIND_SCALAR_F32: np.float32}


# ---------------------------------------------------------------- scenes

def save_scene(gaussians: GaussianSet, path) -> None:
    """Write a primitive set as a JSON scene file."""
    doc = {
        "version": SCENE_VERSION,
        "num_classes": gaussians.num_classes,
        "count": len(gaussians),
        "primitives": [
            {
                "mean": gaussians.means[i].tolist(),
                "scale": gaussians.scales[i].tolist(),
                "rotation": gaussians.rotations[i].tolist(),
                "opacity": float(gaussians.opacities[i]),
                "semantic_logits": gaussians.semantic_logits[i].tolist(),
            }
            for i in range(len(gaussians))
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_scene(path) -> GaussianSet:
    """Read a JSON scene file back into a primitive set."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read scene file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != SCENE_VERSION:
        raise InvalidInputError(
            f"unrecognized scene file version {doc.get('version')!r} in {path}"
        )
    num_classes = int(doc.get("num_classes", 0))
    prims = doc.get("primitives")
    if num_classes < 2 or not isinstance(prims, list):
        raise InvalidInputError(f"malformed scene file {path}")
    if doc.get("count") != len(prims):
        raise InvalidInputError(
            f"scene file {path} header count {doc.get('count')} != {len(prims)} records"
        )
    if not prims:
        return GaussianSet.empty(num_classes)
    try:
        return GaussianSet(
            [p["mean"] for p in prims],
            [p["scale"] for p in prims],
            [p["rotation"] for p in prims],
            [p["opacity"] for p in prims],
            [p["semantic_logits"] for p in prims],
        )
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed primitive record in {path}: {exc}") from exc


# ----------------------------------------------------------------- grids

def save_grid(array: np.ndarray, kind: int, path, origin=(0.0, 0.0, 0.0),
              voxel_size: float = 0.0) -> None:
    """Write an array (up to 4-D, padded with singleton axes) as a grid file."""
    if kind not in _KIND_DTYPE:
        raise InvalidInputError(f"unknown element kind {kind}")
    arr = np.asarray(array)
    if arr.ndim > 4 or arr.ndim < 1:
        raise InvalidInputError(f"grid arrays must be 1-D to 4-D, got {arr.ndim}-D")
    shape = arr.shape + (1,) * (4 - arr.ndim)
    payload = np.ascontiguousarray(arr.reshape(shape), dtype=_KIND_DTYPE[kind])
    header = _HEADER.pack(GRID_MAGIC, GRID_VERSION, kind, *shape,
                          *[float(v) for v in origin], float(voxel_size))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.astype(payload.dtype.newbyteorder("<")).tobytes())


def load_grid(path):
    """Read a grid file; returns (array (X, Y, Z, channels), kind, origin, voxel_size)."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise InvalidInputError(f"cannot read grid file {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise InvalidInputError(f"grid file {path} is truncated")
    magic, version, kind, x, y, z, ch, ox, oy, oz, vsize = _HEADER.unpack_from(blob)
    if magic != GRID_MAGIC:
        raise InvalidInputError(f"{path} is not a grid file (bad magic {magic!r})")
    if version != GRID_VERSION:
        raise InvalidInputError(f"unsupported grid file version {version} in {path}")
    if kind not in _KIND_DTYPE:
        raise InvalidInputError(f"unknown element kind {kind} in {path}")
    dtype = np.dtype(_KIND_DTYPE[kind]).newbyteorder("<")
    expected = x * y * z * ch * dtype.itemsize
    payload = blob[_HEADER.size:]
    if len(payload) != expected:
        raise InvalidInputError(
            f"grid file {path} payload is {len(payload)} bytes, expected {expected}"
        )
    arr = np.frombuffer(payload, dtype=dtype).reshape(x, y, z, ch)
    return arr, kind, (ox, oy, oz), vsize


def save_prob_grid(grid: SemanticProbGrid, path) -> None:
    save_grid(grid.probs.astype(np.float32), KIND_PROB_F32, path,
              origin=grid.spec.origin, voxel_size=grid.spec.voxel_size)


def load_prob_grid(path) -> SemanticProbGrid:
    arr, kind, origin, vsize = load_grid(path)
    if kind != KIND_PROB_F32:
        raise InvalidInputError(f"{path} holds kind {kind}, expected probabilities")
    spec = VoxelGridSpec(origin, vsize, arr.shape[:3])
    probs = arr.astype(np.float64)
    # renormalize away the f32 quantization so grid invariants hold exactly
    probs /= probs.sum(axis=-1, keepdims=True)
    return SemanticProbGrid(spec, probs)


def save_label_grid(grid: LabelGrid, path) -> None:
    save_grid(grid.labels.astype(np.uint8), KIND_LABEL_U8, path,
              origin=grid.spec.origin, voxel_size=grid.spec.voxel_size)


def load_label_grid(path, num_classes: int = 0) -> LabelGrid:
    arr, kind, origin, vsize = load_grid(path)
    if kind != KIND_LABEL_U8:
        raise InvalidInputError(f"{path} holds kind {kind}, expected labels")
    spec = VoxelGridSpec(origin, vsize, arr.shape[:3])
    return LabelGrid(spec, arr[..., 0].astype(np.int64), num_classes=num_classes)


def save_depth_map(depth: np.ndarray, path) -> None:
    d = np.asarray(depth, dtype=np.float32)
    if d.ndim != 2:
        raise InvalidInputError(f"depth maps must be 2-D, got shape {d.shape}")
    save_grid(d, KIND_SCALAR_F32, path)


def load_depth_map(path) -> np.ndarray:
    arr, kind, _, _ = load_grid(path)
    if kind != KIND_SCALAR_F32:
        raise InvalidInputError(f"{path} holds kind {kind}, expected f32 scalars")
    if arr.shape[2] != 1 or arr.shape[3] != 1:
        raise InvalidInputError(f"depth maps must be (H, W, 1, 1), got {arr.shape}")
    return arr[:, :, 0, 0].astype(np.float64)


# ------------------------------------------------- attention weight files

_GCA_TENSORS = ("w_query", "w_key", "w_value", "w_attn", "w_out")


def save_gca_weights(weights: GcaWeights, directory) -> None:
    """Store each projection as its own f32 tensor file in ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in _GCA_TENSORS:
        save_grid(np.asarray(getattr(weights, name), dtype=np.float32),
                  KIND_SCALAR_F32, directory / f"{name}.sscg")


def load_gca_weights(directory) -> GcaWeights:
    """Load projections saved by save_gca_weights; the group count is
    recovered from the attention vector length."""
    directory = Path(directory)
    tensors = {}
    for name in _GCA_TENSORS:
        arr, kind, _, _ = load_grid(directory / f"{name}.sscg")
        if kind != KIND_SCALAR_F32:
            raise InvalidInputError(f"{name}.sscg holds kind {kind}, expected f32 scalars")
        arr = arr.astype(np.float64)
        tensors[name] = arr[:, 0, 0, 0] if name == "w_attn" else arr[:, :, 0, 0]
    d = tensors["w_query"].shape[0]
    dg = tensors["w_attn"].shape[0]
    if dg == 0 or d % dg:
        raise InvalidInputError(f"attention vector length {dg} does not divide D={d}")
    return GcaWeights(groups=d // dg, **tensors)
