"""Gaussian primitive geometry: rotations, covariances, kernels, densities."""

import numpy as np
import pytest

import splatvox as sv
from conftest import random_primitive
from oracles import kernel_via_cramer, rotation_matrix_from_basis, softmax_logsumexp


class TestQuatToRotation:
    def test_identity_quaternion(self):
        np.testing.assert_allclose(sv.quat_to_rotation([1, 0, 0, 0]), np.eye(3))

    def test_half_turn_about_z(self):
        np.testing.assert_allclose(
            sv.quat_to_rotation([0, 0, 0, 1]), np.diag([-1.0, -1.0, 1.0]), atol=1e-15
        )

    def test_matches_sandwich_product_oracle(self, rng):
        for _ in range(50):
            q = rng.standard_normal(4)
            q /= np.linalg.norm(q)
            np.testing.assert_allclose(
                sv.quat_to_rotation(q), rotation_matrix_from_basis(q), atol=1e-9
            )

    def test_orthonormal_with_unit_determinant(self, rng):
        for _ in range(50):
            q = rng.standard_normal(4)
            r = sv.quat_to_rotation(q / np.linalg.norm(q))
            np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-9)
            assert abs(np.linalg.det(r) - 1.0) < 1e-9

    def test_renormalizes_slightly_off_unit_inputs(self):
        q = np.array([1.0, 0.0, 0.0, 0.0]) * (1 + 5e-7)
        np.testing.assert_allclose(sv.quat_to_rotation(q), np.eye(3))

    def test_rejects_zero_and_far_from_unit_quaternions(self):
        with pytest.raises(sv.InvalidInputError):
            sv.quat_to_rotation([0, 0, 0, 0])
        with pytest.raises(sv.InvalidInputError):
            sv.quat_to_rotation([2, 0, 0, 0])


class TestCovariance:
    def test_unit_scales_identity_rotation(self):
        np.testing.assert_allclose(sv.covariance([1, 1, 1], [1, 0, 0, 0]), np.eye(3))

    def test_axis_aligned_anisotropy(self):
        np.testing.assert_allclose(
            sv.covariance([2, 1, 1], [1, 0, 0, 0]), np.diag([4.0, 1.0, 1.0])
        )

    def test_eigenvalues_recover_squared_scales(self, rng):
        for _ in range(50):
            s = rng.uniform(0.2, 2.0, 3)
            q = rng.standard_normal(4)
            cov = sv.covariance(s, q / np.linalg.norm(q))
            np.testing.assert_allclose(cov, cov.T, atol=1e-12)
            np.testing.assert_allclose(
                np.sort(np.linalg.eigvalsh(cov)), np.sort(s**2), atol=1e-8
            )

    def test_condition_number_bound(self, rng):
        for _ in range(25):
            s = rng.uniform(0.1, 1.5, 3)
            q = rng.standard_normal(4)
            cov = sv.covariance(s, q / np.linalg.norm(q))
            bound = (s.max() / s.min()) ** 2
            assert np.linalg.cond(cov) <= bound * (1 + 1e-9)

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(sv.InvalidInputError):
            sv.covariance([1, 0, 1], [1, 0, 0, 0])
        with pytest.raises(sv.InvalidInputError):
            sv.covariance([1, -0.5, 1], [1, 0, 0, 0])


class TestGaussianKernel:
    def test_one_at_the_mean(self, rng):
        g = random_primitive(rng)
        assert sv.gaussian_kernel(g.mean, g) == 1.0

    def test_one_sigma_along_principal_axis(self):
        g = sv.GaussianPrimitive([0, 0, 0], [0.5, 1, 2], [1, 0, 0, 0], 1.0, [0.0])
        value = sv.gaussian_kernel([0.5, 0, 0], g)
        np.testing.assert_allclose(value, np.exp(-0.5), rtol=1e-12)

    def test_matches_cramer_solve_oracle(self, rng):
        for _ in range(50):
            g = random_primitive(rng)
            x = g.mean + rng.uniform(-2, 2, 3)
            np.testing.assert_allclose(
                sv.gaussian_kernel(x, g),
                kernel_via_cramer(x, g.mean, g.covariance),
                atol=1e-10,
            )

    def test_rotation_covariant(self, rng):
        for _ in range(20):
            g = random_primitive(rng)
            x = g.mean + rng.uniform(-1.5, 1.5, 3)
            q = rng.standard_normal(4)
            q /= np.linalg.norm(q)
            rot = sv.quat_to_rotation(q)
            rotated = sv.GaussianPrimitive(
                rot @ g.mean, g.scale, _quat_compose(q, g.rotation),
                g.opacity, g.semantic_logits,
            )
            np.testing.assert_allclose(
                sv.gaussian_kernel(rot @ x, rotated),
                sv.gaussian_kernel(x, g),
                atol=1e-10,
            )

    def test_batch_evaluation_matches_scalar(self, rng):
        g = random_primitive(rng)
        xs = g.mean + rng.uniform(-2, 2, (16, 3))
        batch = sv.gaussian_kernel(xs, g)
        for x, value in zip(xs, batch):
            assert value == sv.gaussian_kernel(x, g)

    def test_values_in_unit_interval(self, rng):
        g = random_primitive(rng)
        xs = g.mean + rng.uniform(-4, 4, (200, 3))
        values = sv.gaussian_kernel(xs, g)
        assert np.all(values > 0) and np.all(values <= 1.0)


class TestGaussianPdf:
    def test_unit_covariance_peak(self):
        g = sv.GaussianPrimitive([0, 0, 0], [1, 1, 1], [1, 0, 0, 0], 1.0, [0.0])
        np.testing.assert_allclose(
            sv.gaussian_pdf([0, 0, 0], g), (2 * np.pi) ** -1.5, rtol=1e-12
        )

    def test_monte_carlo_quadrature_integrates_to_one(self, rng):
        g = random_primitive(rng)
        half = 5.0 * g.scale.max()
        lo, hi = g.mean - half, g.mean + half
        n = 4_000_000
        samples = rng.uniform(lo, hi, size=(n, 3))
        volume = np.prod(hi - lo)
        integral = volume * sv.gaussian_pdf(samples, g).mean()
        assert abs(integral - 1.0) < 1e-2

    def test_doubling_scales_divides_peak_by_eight(self, rng):
        g = random_primitive(rng)
        doubled = sv.GaussianPrimitive(
            g.mean, 2 * g.scale, g.rotation, g.opacity, g.semantic_logits
        )
        ratio = sv.gaussian_pdf(g.mean, g) / sv.gaussian_pdf(doubled.mean, doubled)
        np.testing.assert_allclose(ratio, 8.0, rtol=1e-12)

    def test_factorizes_through_peak_exactly(self, rng):
        g = random_primitive(rng)
        for _ in range(20):
            x = g.mean + rng.uniform(-2, 2, 3)
            assert sv.gaussian_pdf(x, g) == sv.gaussian_kernel(x, g) * sv.gaussian_pdf(g.mean, g)


class TestNormalizedSemantics:
    def test_uniform_for_zero_logits(self):
        np.testing.assert_allclose(
            sv.normalized_semantics(np.zeros(11)), np.full(11, 1 / 11), atol=1e-15
        )

    def test_two_class_closed_form(self):
        np.testing.assert_allclose(
            sv.normalized_semantics([np.log(2.0), 0.0]), [2 / 3, 1 / 3], rtol=1e-12
        )

    def test_matches_logsumexp_oracle(self, rng):
        for _ in range(50):
            logits = rng.normal(0, 5, 11)
            np.testing.assert_allclose(
                sv.normalized_semantics(logits), softmax_logsumexp(logits), atol=1e-12
            )

    def test_sums_to_one_and_preserves_argmax(self, rng):
        for _ in range(50):
            logits = rng.normal(0, 10, 7)
            w = sv.normalized_semantics(logits)
            assert abs(w.sum() - 1.0) < 1e-9
            assert np.argmax(w) == np.argmax(logits)

    def test_rejects_non_finite(self):
        with pytest.raises(sv.InvalidInputError):
            sv.normalized_semantics([0.0, np.nan])
        with pytest.raises(sv.InvalidInputError):
            sv.normalized_semantics([np.inf, 0.0])


class TestGaussianPrimitive:
    def test_validates_fields(self):
        with pytest.raises(sv.InvalidInputError):
            sv.GaussianPrimitive([0, 0, 0], [1, 1, 1], [1, 0, 0, 0], 1.5, [0.0])
        with pytest.raises(sv.InvalidInputError):
            sv.GaussianPrimitive([0, 0, 0], [1, 1, -1], [1, 0, 0, 0], 0.5, [0.0])
        with pytest.raises(sv.InvalidInputError):
            sv.GaussianPrimitive([0, 0, np.inf], [1, 1, 1], [1, 0, 0, 0], 0.5, [0.0])

    def test_quaternion_normalized_on_construction(self):
        g = sv.GaussianPrimitive([0, 0, 0], [1, 1, 1],
                                 np.array([1, 0, 0, 0]) * (1 - 4e-7), 0.5, [0.0])
        assert abs(np.linalg.norm(g.rotation) - 1.0) < 1e-9

    def test_fields_are_immutable(self, rng):
        g = random_primitive(rng)
        with pytest.raises(ValueError):
            g.mean[0] = 5.0

    def test_cached_inverse_matches_covariance(self, rng):
        g = random_primitive(rng)
        np.testing.assert_allclose(g.covariance @ g.inv_covariance, np.eye(3), atol=1e-9)
        np.testing.assert_allclose(g.sqrt_det_cov, np.sqrt(np.linalg.det(g.covariance)),
                                   rtol=1e-9)


class TestGaussianSet:
    def test_pack_matches_primitives(self, rng):
        prims = [random_primitive(rng) for _ in range(10)]
        gset = sv.GaussianSet.from_primitives(prims)
        assert len(gset) == 10
        for i, p in enumerate(prims):
            np.testing.assert_array_equal(gset.means[i], p.mean)
            np.testing.assert_allclose(gset.inv_covariances[i], p.inv_covariance, atol=1e-12)
            np.testing.assert_allclose(gset.semantic_weights[i], p.semantic_weights, atol=1e-15)
            np.testing.assert_allclose(gset.pdf_peaks[i], p.pdf_peak, rtol=1e-15)

    def test_empty_set_roundtrip(self):
        gset = sv.GaussianSet.from_primitives([], num_classes=12)
        assert len(gset) == 0
        assert gset.num_classes == 12
        assert gset.max_scale == 0.0

    def test_with_opacities_shares_geometry(self, rng):
        gset = sv.GaussianSet.from_primitives([random_primitive(rng) for _ in range(5)])
        clone = gset.with_opacities(rng.uniform(0, 1, 5))
        assert clone.means is gset.means
        assert clone.inv_covariances is gset.inv_covariances
        assert not np.array_equal(clone.opacities, gset.opacities)


def _quat_compose(q1, q2):
    from oracles import quat_multiply

    return quat_multiply(q1, q2)
