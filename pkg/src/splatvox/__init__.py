"""Object-centric Gaussian-to-voxel semantic splatting.

Scenes are sets of anisotropic 3D Gaussian primitives; splatting them
onto a voxel lattice yields a dense per-voxel class distribution.  The
package provides the superposed baseline aggregator and the decoupled
aggregator that separates opacity-gated occupancy from opacity-free
semantics, together with depth-guided primitive initialization, grouped
multi-scale cross-attention, the training losses, evaluation metrics,
portable file formats, and a CLI (``splatvox``).
"""

from .aggregate import (
    FloaterReport,
    argmax_labels,
    dga_occupancy,
    dga_semantics,
    floater_experiment,
    fuse,
    pgs_occupancy,
    pgs_semantics,
    splat,
)
from .attention import (
    BenchResult,
    FeatureSet,
    GcaWeights,
    complexity_bench,
    dot_product_attention_reference,
    ffn_forward,
    gca_forward,
    gca_reference,
    gelu,
    random_gca_weights,
)
from .depth import (
    CameraIntrinsics,
    backproject,
    init_gaussians,
    make_reference_grid,
)
from .errors import InvalidInputError, SplatVoxError
from .gaussians import (
    GaussianPrimitive,
    GaussianSet,
    covariance,
    gaussian_kernel,
    gaussian_pdf,
    normalized_semantics,
    quat_to_rotation,
)
from .grids import LabelGrid, SemanticProbGrid, VoxelGridSpec
from .losses import (
    LayerOccupancies,
    LossWeights,
    ScalGeoBreakdown,
    focal_loss,
    prob_scale_layer_weights,
    prob_scale_loss,
    scal_geo_breakdown,
    scal_geo_loss,
)
from .metrics import DepthMetrics, IoUResult, chamfer_l1, depth_metrics, iou_miou
from .scenes import generate_scene
from .spatial import SpatialIndex, build_index, neighbors

__version__ = "0.1.0"

from . import sceneio  # noqa: E402  (submodule re-export for file I/O)

__all__ = [
    "BenchResult",
    "CameraIntrinsics",
    "DepthMetrics",
    "FeatureSet",
    "FloaterReport",
    "GaussianPrimitive",
    "GaussianSet",
    "GcaWeights",
    "InvalidInputError",
    "IoUResult",
    "LabelGrid",
    "LayerOccupancies",
    "LossWeights",
    "ScalGeoBreakdown",
    "SemanticProbGrid",
    "SpatialIndex",
    "SplatVoxError",
    "VoxelGridSpec",
    "argmax_labels",
    "backproject",
    "build_index",
    "chamfer_l1",
    "complexity_bench",
    "covariance",
    "depth_metrics",
    "dga_occupancy",
    "dga_semantics",
    "dot_product_attention_reference",
    "ffn_forward",
    "floater_experiment",
    "fuse",
    "gaussian_kernel",
    "gaussian_pdf",
    "gca_forward",
    "gca_reference",
    "gelu",
    "generate_scene",
    "init_gaussians",
    "iou_miou",
    "make_reference_grid",
    "neighbors",
    "normalized_semantics",
    "pgs_occupancy",
    "pgs_semantics",
    "prob_scale_layer_weights",
    "prob_scale_loss",
    "quat_to_rotation",
    "random_gca_weights",
    "scal_geo_breakdown",
    "scal_geo_loss",
    "sceneio",
    "splat",
]
