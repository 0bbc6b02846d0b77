import numpy as np
import pytest

import motiondeblur as md
from motiondeblur import conv
from motiondeblur.core import BlurAxis, Psf, PsfKind


def clamped_convolve_oracle(a: np.ndarray, weights, center, axis=None) -> np.ndarray:
    # Scalar reference loop with explicit edge clamping; accumulates taps
    # in index order like the production code, so equality is exact.
    h, w = a.shape
    out = np.zeros_like(a)
    weights = np.asarray(weights)
    if weights.ndim == 2:
        cy, cx = center
        for y in range(h):
            for x in range(w):
                s = 0.0
                for jy in range(weights.shape[0]):
                    ty = min(max(y - (jy - cy), 0), h - 1)
                    for jx in range(weights.shape[1]):
                        tx = min(max(x - (jx - cx), 0), w - 1)
                        s += weights[jy, jx] * a[ty, tx]
                out[y, x] = s
        return out
    for y in range(h):
        for x in range(w):
            s = 0.0
            for j in range(weights.shape[0]):
                if axis is BlurAxis.VERTICAL:
                    t = min(max(y - (j - center), 0), h - 1)
                    s += weights[j] * a[t, x]
                else:
                    t = min(max(x - (j - center), 0), w - 1)
                    s += weights[j] * a[y, t]
            out[y, x] = s
    return out


class TestSpatialConvolve:
    def test_delta_identity(self, rng):
        img = md.Image(rng.uniform(0, 255, (16, 16)))
        delta = Psf.general_1d([1.0], BlurAxis.VERTICAL, center=0)
        np.testing.assert_array_equal(md.spatial_convolve(img, delta).values, img.values)

    def test_constant_preserved_exactly_at_boundary(self, rng):
        img = md.Image(np.full((20, 20), 55.0))
        psf = Psf.general_2d(rng.uniform(0, 1, (5, 5)))
        out = md.spatial_convolve(img, psf).values
        np.testing.assert_allclose(out, 55.0, rtol=1e-12)

    def test_vertical_5tap_matches_scalar_reference_exactly(self, rng):
        a = rng.uniform(0, 255, (32, 32))
        psf = Psf.general_1d(rng.uniform(0, 1, 5), BlurAxis.VERTICAL, center=2)
        got = md.spatial_convolve(md.Image(a), psf).values
        ref = clamped_convolve_oracle(a, psf.weights, psf.center, psf.axis)
        np.testing.assert_array_equal(got, ref)

    def test_2d_matches_scalar_reference_exactly(self, rng):
        a = rng.uniform(0, 255, (16, 12))
        psf = Psf.general_2d(rng.uniform(0, 1, (3, 4)), center=(1, 2))
        got = md.spatial_convolve(md.Image(a), psf).values
        np.testing.assert_array_equal(got, clamped_convolve_oracle(a, psf.weights, psf.center))

    def test_horizontal_matches_scalar_reference(self, rng):
        a = rng.uniform(0, 255, (8, 24))
        psf = Psf.general_1d(rng.uniform(0, 1, 6), BlurAxis.HORIZONTAL, center=4)
        got = md.spatial_convolve(md.Image(a), psf).values
        ref = clamped_convolve_oracle(a, psf.weights, psf.center, psf.axis)
        np.testing.assert_array_equal(got, ref)

    def test_corner_reads_clamp_to_corner_pixel(self):
        a = np.zeros((3, 3))
        a[0, 0] = 9.0
        k = np.zeros((3, 3))
        k[0, 0] = 1.0  # offset (-1, -1): out[y, x] = in[y + 1, x + 1] clamped
        psf = Psf.general_2d(k, center=(1, 1))
        out = md.spatial_convolve(md.Image(a), psf).values
        ref = clamped_convolve_oracle(a, psf.weights, psf.center)
        np.testing.assert_array_equal(out, ref)

    def test_rejects_oversized_support(self, rng):
        img = md.Image(rng.uniform(0, 1, (4, 4)))
        with pytest.raises(ValueError):
            md.spatial_convolve(img, Psf.general_1d(np.ones(5), BlurAxis.VERTICAL))


class TestBoxConvolve:
    def test_length_one_identity(self, rng):
        img = md.Image(rng.uniform(0, 255, (16, 16)))
        psf = Psf.uniform_box(BlurAxis.VERTICAL, 1)
        np.testing.assert_allclose(md.box_convolve(img, psf).values, img.values,
                                   rtol=0, atol=1e-12)

    @pytest.mark.parametrize("length", [1, 2, 5, 27, 21.5, 63])
    @pytest.mark.parametrize("axis", [BlurAxis.VERTICAL, BlurAxis.HORIZONTAL])
    def test_equals_direct_summation(self, rng, length, axis):
        for _ in range(5):
            img = md.Image(rng.uniform(0, 255, (80, 72)))
            psf = Psf.uniform_box(axis, length)
            got = md.box_convolve(img, psf).values
            ref = md.spatial_convolve(img, psf).values
            np.testing.assert_allclose(got, ref, rtol=0, atol=1e-9)

    def test_length_27_on_256_scene(self):
        img = md.make_test_image(256, 256)
        psf = Psf.uniform_box(BlurAxis.VERTICAL, 27)
        np.testing.assert_allclose(md.box_convolve(img, psf).values,
                                   md.spatial_convolve(img, psf).values,
                                   rtol=0, atol=1e-9)

    def test_fractional_length_on_random_128(self, rng):
        img = md.Image(rng.uniform(0, 255, (128, 128)))
        psf = Psf.uniform_box(BlurAxis.VERTICAL, 21.5)
        np.testing.assert_allclose(md.box_convolve(img, psf).values,
                                   md.spatial_convolve(img, psf).values,
                                   rtol=0, atol=1e-9)

    def test_running_sum_drift_over_512_column_sweep(self, rng):
        # Incremental sums after a full 512-pixel sweep stay within
        # 1e-9 relative of freshly computed direct sums.
        img = md.Image(rng.uniform(0, 255, (512, 64)))
        psf = Psf.uniform_box(BlurAxis.VERTICAL, 27)
        got = md.box_convolve(img, psf).values
        ref = md.spatial_convolve(img, psf).values
        assert (np.abs(got - ref) / np.abs(ref)).max() < 1e-9

    def test_rejects_wrong_kind(self, rng):
        img = md.Image(rng.uniform(0, 1, (8, 8)))
        psf = Psf.general_1d([0.5, 0.5], BlurAxis.VERTICAL)
        with pytest.raises(ValueError):
            md.box_convolve(img, psf)

    def test_adjoint_composition_equals_autocorrelation_kernel(self, rng):
        img = md.Image(rng.uniform(0, 255, (96, 64)))
        psf = Psf.general_1d(rng.uniform(0, 1, 7), BlurAxis.VERTICAL, center=2)
        twice = md.spatial_convolve(md.spatial_convolve(img, psf), md.adjoint(psf))
        acorr = np.convolve(psf.weights, psf.weights[::-1])
        combo = Psf.general_1d(acorr, BlurAxis.VERTICAL, center=len(psf.weights) - 1)
        direct = md.spatial_convolve(img, combo)
        inner = slice(2 * 7, -2 * 7)  # away from the boundary by a support width
        np.testing.assert_allclose(twice.values[inner], direct.values[inner],
                                   rtol=0, atol=1e-8)


class TestUpdateLoopInstrumentation:
    def run_counted(self, length, shape=(128, 64)):
        rng = np.random.default_rng(99)
        img = md.Image(rng.uniform(0, 255, shape))
        psf = Psf.uniform_box(BlurAxis.VERTICAL, length)
        with conv.count_box_ops() as counts:
            md.box_convolve(img, psf)
        return counts

    def test_integer_lengths_share_per_pixel_count(self):
        counts = [self.run_counted(L) for L in (5, 27, 63)]
        per_pixel = {c.per_pixel for c in counts}
        assert len(per_pixel) == 1
        assert per_pixel.pop() <= 4.0

    def test_fractional_lengths_share_per_pixel_count(self):
        counts = [self.run_counted(L) for L in (9.5, 21.5, 44.25)]
        per_pixel = {c.per_pixel for c in counts}
        assert len(per_pixel) == 1
        # At most two additions and two subtractions per pixel.
        assert per_pixel.pop() <= 4.0

    def test_counter_inactive_outside_context(self, rng):
        img = md.Image(rng.uniform(0, 255, (16, 16)))
        psf = Psf.uniform_box(BlurAxis.VERTICAL, 5)
        md.box_convolve(img, psf)  # must not touch any counter
        with conv.count_box_ops() as counts:
            pass
        assert counts.pixels == 0
