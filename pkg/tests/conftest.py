import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

import splatvox as sv


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_spec():
    """1.6 m x 1.6 m x 0.96 m grid at 0.08 m: 20 x 20 x 12 voxels."""
    return sv.VoxelGridSpec((0.0, 0.0, 0.0), 0.08, (20, 20, 12))


def random_primitive(rng, num_classes=12):
    q = rng.standard_normal(4)
    return sv.GaussianPrimitive(
        mean=rng.uniform(-1, 1, 3),
        scale=rng.uniform(0.3, 1.0, 3),
        rotation=q / np.linalg.norm(q),
        opacity=rng.uniform(0.05, 0.95),
        semantic_logits=rng.normal(0, 2, num_classes - 1),
    )


def random_scene_in(spec, seed, count, **kw):
    return sv.generate_scene("random", seed=seed, count=count,
                             extent=(spec.extent_min, spec.extent_max), **kw)
