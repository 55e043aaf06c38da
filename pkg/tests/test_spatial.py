"""Spatial index: coverage guarantees, determinism, neighbor queries."""

import numpy as np
import pytest

import splatvox as sv
from conftest import random_scene_in


def _exhaustive_neighborhood(gset, x, cutoff):
    """Ids whose kernel at x reaches the cutoff, by full scan."""
    hits = []
    for i in range(len(gset)):
        if sv.gaussian_kernel(np.asarray(x, float), gset.primitive(i)) >= cutoff:
            hits.append(i)
    return set(hits)


class TestBuildIndex:
    def test_empty_set_yields_empty_queries(self):
        index = sv.build_index(sv.GaussianSet.from_primitives([], num_classes=12))
        assert index.cell_size == 0.08
        assert sv.neighbors(index, [0.0, 0.0, 0.0]).size == 0
        assert sv.neighbors(index, [100.0, -3.0, 7.0]).size == 0

    def test_single_primitive_influence_radius(self):
        g = sv.GaussianPrimitive([0.5, 0.5, 0.5], [0.1, 0.1, 0.1],
                                 [1, 0, 0, 0], 0.5, np.zeros(11))
        index = sv.build_index(sv.GaussianSet.from_primitives([g]), kappa=3.0)
        assert index.radii[0] == pytest.approx(0.3)
        # the primitive must be found from every cell its sphere touches
        for offset in np.array([[0.29, 0, 0], [0, -0.29, 0], [0, 0, 0.29],
                                [0.17, 0.17, 0.17]]):
            ids = sv.neighbors(index, g.mean + offset)
            assert 0 in ids

    def test_rejects_bad_kappa(self, small_spec):
        scene = random_scene_in(small_spec, seed=0, count=5)
        with pytest.raises(sv.InvalidInputError):
            sv.build_index(scene, kappa=0.0)
        with pytest.raises(sv.InvalidInputError):
            sv.build_index(scene, kappa=-1.0)

    def test_no_duplicate_ids_per_cell(self, small_spec):
        scene = random_scene_in(small_spec, seed=3, count=200)
        index = sv.build_index(scene, kappa=3.0)
        for ids in index.cells.values():
            assert len(np.unique(ids)) == len(ids)

    def test_coverage_superset_on_random_scene(self, rng, small_spec):
        scene = random_scene_in(small_spec, seed=11, count=1000)
        index = sv.build_index(scene, kappa=3.0)
        cutoff = index.kernel_cutoff
        lo, hi = small_spec.extent_min, small_spec.extent_max
        for _ in range(100):
            x = rng.uniform(lo - 0.1, hi + 0.1)
            required = _exhaustive_neighborhood(scene, x, cutoff)
            returned = set(sv.neighbors(index, x).tolist())
            assert required <= returned


class TestNeighbors:
    def test_far_point_returns_empty(self, small_spec):
        scene = random_scene_in(small_spec, seed=5, count=50)
        index = sv.build_index(scene, kappa=3.0)
        far = small_spec.extent_max + 20 * index.radii.max()
        assert sv.neighbors(index, far).size == 0

    def test_contains_primitive_at_its_own_mean(self, small_spec):
        scene = random_scene_in(small_spec, seed=6, count=20)
        index = sv.build_index(scene, kappa=3.0)
        assert 7 in sv.neighbors(index, scene.means[7])

    def test_ascending_id_order(self, small_spec):
        scene = random_scene_in(small_spec, seed=8, count=300)
        index = sv.build_index(scene, kappa=3.0)
        for ids in index.cells.values():
            assert np.all(np.diff(ids) > 0)

    def test_deterministic_across_builds(self, small_spec):
        scene = random_scene_in(small_spec, seed=9, count=150)
        a = sv.build_index(scene, kappa=3.0)
        b = sv.build_index(scene, kappa=3.0)
        assert a.cell_size == b.cell_size
        assert set(a.cells) == set(b.cells)
        for key in a.cells:
            np.testing.assert_array_equal(a.cells[key], b.cells[key])

    def test_rejects_bad_query_point(self, small_spec):
        scene = random_scene_in(small_spec, seed=1, count=5)
        index = sv.build_index(scene, kappa=3.0)
        with pytest.raises(sv.InvalidInputError):
            sv.neighbors(index, [0.0, 0.0])
        with pytest.raises(sv.InvalidInputError):
            sv.neighbors(index, [np.nan, 0.0, 0.0])


class TestNeighborhoodAggregation:
    def test_neighbor_aggregation_matches_full_set(self, rng, small_spec):
        """With the cutoff that defines the neighborhood, aggregating over
        the index candidates equals aggregating over every primitive."""
        scene = random_scene_in(small_spec, seed=12, count=250)
        index = sv.build_index(scene, kappa=3.0)
        cutoff = index.kernel_cutoff
        all_ids = np.arange(len(scene))
        lo, hi = small_spec.extent_min, small_spec.extent_max
        for _ in range(50):
            x = rng.uniform(lo, hi)
            nbr = sv.neighbors(index, x)
            for occupancy in (sv.pgs_occupancy, sv.dga_occupancy):
                a = occupancy(x, nbr, scene, kernel_cutoff=cutoff)
                b = occupancy(x, all_ids, scene, kernel_cutoff=cutoff)
                assert a == pytest.approx(b, abs=1e-6)
            for semantics in (sv.pgs_semantics, sv.dga_semantics):
                a = semantics(x, nbr, scene, kernel_cutoff=cutoff)
                b = semantics(x, all_ids, scene, kernel_cutoff=cutoff)
                np.testing.assert_allclose(a, b, atol=1e-6)
