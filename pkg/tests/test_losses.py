import numpy as np
import pytest

from pyrdepth import losses as L
from pyrdepth.network import DisparityPyramid
from pyrdepth.tensor import ShapeError
from pyrdepth.verify import make_textured_pair

from conftest import rand_image

C1 = 0.01 ** 2
C2 = 0.03 ** 2


def const(v, c, h, w):
    return np.full((1, c, h, w), v, np.float32)


def one_level_pyramid(disp):
    w = disp.shape[3]
    return DisparityPyramid(levels=(1,), maps=[disp / np.float32(0.3 * w)],
                            scaled=[disp])


class TestWarp:
    def test_zero_disparity_is_exact_identity(self):
        img = rand_image(np.random.default_rng(0), 3, 6, 11)
        out = L.warp_horizontal(img, np.zeros((1, 1, 6, 11), np.float32), -1)
        assert np.array_equal(out, img)

    def test_unit_shift_moves_columns(self):
        img = rand_image(np.random.default_rng(1), 2, 4, 9)
        out = L.warp_horizontal(img, const(1.0, 1, 4, 9), +1)
        assert np.array_equal(out[:, :, :, :-1], img[:, :, :, 1:])
        out = L.warp_horizontal(img, const(1.0, 1, 4, 9), -1)
        assert np.array_equal(out[:, :, :, 1:], img[:, :, :, :-1])

    def test_half_shift_averages_neighbours(self):
        img = rand_image(np.random.default_rng(2), 1, 3, 8)
        out = L.warp_horizontal(img, const(0.5, 1, 3, 8), +1)
        mean_adj = (img[:, :, :, :-1].astype(np.float64)
                    + img[:, :, :, 1:]) / 2
        np.testing.assert_allclose(out[:, :, :, :-1], mean_adj, atol=1e-6)

    def test_linear_in_image(self):
        rng = np.random.default_rng(3)
        a = rand_image(rng, 3, 5, 10)
        b = rand_image(rng, 3, 5, 10)
        d = rng.uniform(0, 2, (1, 1, 5, 10)).astype(np.float32)
        lhs = L.warp_horizontal((1.5 * a - 0.5 * b).astype(np.float32), d, +1)
        rhs = 1.5 * L.warp_horizontal(a, d, +1) - 0.5 * L.warp_horizontal(b, d, +1)
        np.testing.assert_allclose(lhs, rhs, atol=1e-5)

    def test_shape_errors(self):
        img = np.zeros((1, 3, 4, 8), np.float32)
        with pytest.raises(ShapeError):
            L.warp_horizontal(img, np.zeros((1, 1, 4, 7), np.float32), +1)
        with pytest.raises(ValueError):
            L.warp_horizontal(img, np.zeros((1, 1, 4, 8), np.float32), 2)


class TestSsim:
    def test_identity_is_one(self):
        x = rand_image(np.random.default_rng(4), 3, 8, 9)
        np.testing.assert_allclose(L.ssim_map(x, x), 1.0, atol=1e-6)

    def test_zero_variance_closed_form(self):
        k1, k2 = 0.2, 0.4
        expected = (2 * k1 * k2 + C1) / (k1 * k1 + k2 * k2 + C1)
        got = L.ssim_map(const(k1, 1, 5, 5), const(k2, 1, 5, 5))
        np.testing.assert_allclose(got, expected, atol=1e-7)

    def test_anticorrelated_below_one(self):
        x = rand_image(np.random.default_rng(5), 1, 7, 7)
        assert L.ssim_map(x, (1 - x).astype(np.float32)).max() < 1.0

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(6)
        a, b = rand_image(rng, 3, 8, 8), rand_image(rng, 3, 8, 8)
        np.testing.assert_allclose(L.ssim_map(a, b), L.ssim_map(b, a),
                                   atol=1e-6)
        s = L.ssim_map(a, b)
        assert s.min() >= -1.0 and s.max() <= 1.0


class TestAppearance:
    def test_identical_images_zero(self):
        x = rand_image(np.random.default_rng(7), 3, 6, 9)
        assert abs(L.appearance_loss(x, x, 0.85)) <= 1e-6

    def test_pure_l1(self):
        assert L.appearance_loss(const(0, 3, 5, 8), const(0.5, 3, 5, 8),
                                 0.0) == pytest.approx(0.5, abs=1e-9)

    def test_pure_ssim_closed_form(self):
        k1, k2 = 0.2, 0.4
        ssim = (2 * k1 * k2 + C1) / (k1 * k1 + k2 * k2 + C1)
        got = L.appearance_loss(const(k1, 1, 6, 6), const(k2, 1, 6, 6), 1.0)
        assert got == pytest.approx((1 - ssim) / 2, abs=1e-5)


class TestSmoothness:
    def test_constant_disparity_zero(self):
        img = rand_image(np.random.default_rng(8), 3, 5, 7)
        assert L.smoothness_loss(const(4.2, 1, 5, 7), img) == 0.0

    def test_unit_ramp(self):
        h, w = 5, 9
        ramp = np.tile(np.arange(w, dtype=np.float32), (h, 1))[None, None]
        got = L.smoothness_loss(np.ascontiguousarray(ramp), const(0.3, 3, h, w))
        assert got == pytest.approx(1.0, abs=1e-5)

    def test_edge_damping(self):
        h, w, g = 5, 9, 1.5
        ramp = np.tile(np.arange(w, dtype=np.float32), (h, 1))[None, None]
        img = np.repeat(ramp * g, 3, axis=1).astype(np.float32)
        got = L.smoothness_loss(np.ascontiguousarray(ramp),
                                np.ascontiguousarray(img))
        assert got == pytest.approx(np.exp(-g), abs=1e-5)
        assert got < 1.0


class TestLrConsistency:
    def test_zero_fields(self):
        z = np.zeros((1, 1, 4, 7), np.float32)
        assert L.lr_consistency_loss(z, z) == 0.0

    def test_equal_constant_fields(self):
        c = const(2.0, 1, 4, 9)
        assert abs(L.lr_consistency_loss(c, c)) <= 1e-6

    def test_constant_offset(self):
        got = L.lr_consistency_loss(const(1.0, 1, 4, 9), const(3.0, 1, 4, 9))
        assert got == pytest.approx(2.0, abs=1e-9)


class TestTotalLoss:
    def test_zero_fixed_point(self):
        img = rand_image(np.random.default_rng(9), 3, 8, 12)
        pair = L.StereoPair(left=img, right=img.copy())
        z = np.zeros((1, 1, 8, 12), np.float32)
        bd = L.total_loss(one_level_pyramid(z), one_level_pyramid(z), pair)
        t = bd.terms[1]
        assert bd.total == pytest.approx(0.0, abs=1e-9)
        assert t.ap_left == pytest.approx(0.0, abs=1e-9)
        assert t.ds_left == 0.0 and t.lr_left == 0.0

    def test_breakdown_recomposes(self):
        rng = np.random.default_rng(10)
        pair = make_textured_pair(8, 16, 2, 1)
        dl = rng.uniform(0, 3, (1, 1, 8, 16)).astype(np.float32)
        dr = rng.uniform(0, 3, (1, 1, 8, 16)).astype(np.float32)
        bd = L.total_loss(one_level_pyramid(dl), one_level_pyramid(dr), pair)
        assert bd.total == pytest.approx(bd.recompute_total(), abs=1e-6)
        for t in bd.terms.values():
            for name in ("ap_left", "ap_right", "ds_left", "ds_right",
                         "lr_left", "lr_right"):
                assert getattr(t, name) >= 0.0

    def test_constant_shift_pair_is_near_fixed_point(self):
        pair = make_textured_pair(12, 24, 2, 2)
        d = const(2.0, 1, 12, 24)
        bd = L.total_loss(one_level_pyramid(d), one_level_pyramid(d), pair)
        recon = L.warp_horizontal(pair.right, d, -1)
        interior = np.abs(recon - pair.left)[:, :, :, 4:-4]
        assert interior.max() <= 1e-5
        t = bd.terms[1]
        assert t.lr_left == 0.0 and t.ds_left == 0.0
        assert bd.total < 0.05

    def test_level_mismatch_rejected(self):
        pair = make_textured_pair(8, 16, 1, 3)
        d = const(1.0, 1, 8, 16)
        p1 = one_level_pyramid(d)
        p2 = DisparityPyramid(levels=(2,), maps=[d], scaled=[d])
        with pytest.raises(ShapeError):
            L.total_loss(p1, p2, pair)

    def test_smoothness_weight_halves_per_level(self):
        w = L.LossWeights()
        for s in range(1, 6):
            assert w.smoothness_weight(s + 1) / w.smoothness_weight(s) == 0.5
        assert w.smoothness_weight(1) == 0.05


class TestFdGradient:
    def test_smoothness_subgradient_zero_at_constant(self):
        img = rand_image(np.random.default_rng(11), 3, 5, 7)
        grad = L.fd_gradient(lambda d: L.smoothness_loss(d, img),
                             const(1.0, 1, 5, 7), 2.0 ** -10)
        assert np.abs(grad).max() <= 1e-6

    def test_appearance_gradient_small_at_minimum(self):
        pair = make_textured_pair(8, 16, 0, 4)
        grad = L.fd_gradient(
            lambda d: L.appearance_loss(
                pair.left, L.warp_horizontal(pair.right, d, -1), 0.85),
            np.zeros((1, 1, 8, 16), np.float32), 1e-3)
        assert np.abs(grad).max() < 1e-3

    def test_linearity_in_loss_scale(self):
        pair = make_textured_pair(6, 10, 1, 5)
        obj = L.photometric_objective(pair)
        d0 = np.random.default_rng(12).uniform(
            0, 2, (1, 1, 6, 10)).astype(np.float32)
        g1 = L.fd_gradient(obj, d0, 1e-3).astype(np.float64)
        g2 = L.fd_gradient(lambda d: 3.0 * obj(d), d0, 1e-3).astype(np.float64)
        np.testing.assert_allclose(g2, 3.0 * g1, rtol=1e-5, atol=1e-8)

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            L.fd_gradient(lambda d: 0.0, np.zeros((1, 1, 2, 2), np.float32), 0)


class TestOptimizeDisparity:
    def test_zero_steps_returns_initialization(self):
        pair = make_textured_pair(8, 16, 2, 6)
        out = L.optimize_disparity(pair, 0, 1.0)
        assert np.array_equal(out, np.zeros((1, 1, 8, 16), np.float32))

    def test_rejects_oversized_pair(self):
        big = L.StereoPair(left=np.zeros((1, 3, 64, 64), np.float32),
                           right=np.zeros((1, 3, 64, 64), np.float32))
        with pytest.raises(ValueError, match="too large"):
            L.optimize_disparity(big, 1, 1.0)

    def test_rejects_bad_steps(self):
        pair = make_textured_pair(8, 16, 2, 7)
        with pytest.raises(ValueError):
            L.optimize_disparity(pair, -1, 1.0)
        with pytest.raises(ValueError):
            L.optimize_disparity(pair, 5, 0.0)


class TestAugment:
    def test_deterministic_per_seed(self):
        pair = make_textured_pair(8, 16, 1, 8)
        a = L.augment(pair, 123)
        b = L.augment(pair, 123)
        assert np.array_equal(a.left, b.left)
        assert np.array_equal(a.right, b.right)

    def test_degenerate_ranges_are_identity(self):
        pair = make_textured_pair(8, 16, 1, 9)
        out = L.augment(pair, 5, flip_prob=0.0, gamma_range=(1, 1),
                        brightness_range=(1, 1), color_range=(1, 1))
        assert np.array_equal(out.left, pair.left)
        assert np.array_equal(out.right, pair.right)

    def test_gamma_closed_form(self):
        pair = L.StereoPair(left=const(0.5, 3, 4, 6), right=const(0.5, 3, 4, 6))
        out = L.augment(pair, 7, flip_prob=0.0, gamma_range=(1.2, 1.2),
                        brightness_range=(1, 1), color_range=(1, 1))
        np.testing.assert_allclose(out.left, 0.5 ** 1.2, rtol=1e-6)

    def test_flip_swaps_and_mirrors(self):
        pair = make_textured_pair(8, 16, 1, 10)
        out = L.augment(pair, 11, flip_prob=1.0, gamma_range=(1, 1),
                        brightness_range=(1, 1), color_range=(1, 1))
        assert np.array_equal(out.left, pair.right[:, :, :, ::-1])
        assert np.array_equal(out.right, pair.left[:, :, :, ::-1])

    def test_outputs_clamped(self):
        pair = make_textured_pair(8, 16, 1, 12)
        out = L.augment(pair, 13, brightness_range=(2.0, 2.0))
        assert out.left.max() <= 1.0 and out.left.min() >= 0.0

    def test_same_photometric_params_both_views(self):
        img = rand_image(np.random.default_rng(14), 3, 6, 10)
        pair = L.StereoPair(left=img, right=img.copy())
        out = L.augment(pair, 15, flip_prob=0.0)
        assert np.array_equal(out.left, out.right)
