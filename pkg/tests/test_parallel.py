import os
import time

import numpy as np
import pytest

import motiondeblur as md
from motiondeblur.core import BlurAxis, Psf
from motiondeblur.deconv import DeblurPipeline, Scenario
from motiondeblur.parallel import ColumnSharpeningEngine, _even_slabs, rrrl_deblur_parallel


class TestSlabPartition:
    @pytest.mark.parametrize("width,workers", [(256, 1), (256, 2), (256, 5),
                                               (255, 4), (64, 8), (2, 8)])
    def test_covers_width_with_even_starts(self, width, workers):
        slabs = _even_slabs(width, workers)
        assert slabs[0][0] == 0
        assert slabs[-1][1] == width
        for (a0, b0), (a1, _) in zip(slabs, slabs[1:]):
            assert b0 == a1
        for a, b in slabs:
            assert a % 2 == 0
            assert b > a


class TestParallelDeterminism:
    @pytest.mark.parametrize("kind", ["box", "general"])
    def test_single_worker_bitwise_equal_to_serial(self, rng, kind):
        f = md.Image(rng.uniform(1, 255, (128, 96)))
        if kind == "box":
            psf = Psf.uniform_box(BlurAxis.VERTICAL, 13)
            mode = "box"
        else:
            psf = Psf.general_1d(rng.uniform(0, 1, 11), BlurAxis.VERTICAL)
            mode = "fourier"
        params = md.DeconvParams(iterations=4)
        serial = md.rrrl_deblur(f, psf, params, mode)
        parallel = rrrl_deblur_parallel(f, psf, params, 1)
        np.testing.assert_array_equal(parallel.values, serial.values)

    @pytest.mark.parametrize("workers", [2, 4, 8])
    @pytest.mark.parametrize("kind", ["box", "general"])
    def test_many_workers_match_serial_within_1e_12(self, rng, workers, kind):
        f = md.Image(rng.uniform(1, 255, (256, 256)))
        if kind == "box":
            psf = Psf.uniform_box(BlurAxis.VERTICAL, 17)
            mode = "box"
        else:
            psf = Psf.general_1d(rng.uniform(0, 1, 9), BlurAxis.VERTICAL)
            mode = "fourier"
        params = md.DeconvParams(iterations=5)
        serial = md.rrrl_deblur(f, psf, params, mode)
        parallel = rrrl_deblur_parallel(f, psf, params, workers)
        assert np.abs(parallel.values - serial.values).max() < 1e-12

    def test_horizontal_axis(self, rng):
        f = md.Image(rng.uniform(1, 255, (96, 128)))
        psf = Psf.uniform_box(BlurAxis.HORIZONTAL, 13)
        params = md.DeconvParams(iterations=3)
        serial = md.rrrl_deblur(f, psf, params, "box")
        parallel = rrrl_deblur_parallel(f, psf, params, 4)
        np.testing.assert_array_equal(parallel.values, serial.values)

    def test_pipeline_with_workers_matches_serial_pipeline(self):
        g = md.make_test_image(128, 128)
        psf = Psf.uniform_box(BlurAxis.VERTICAL, 11)
        f = md.synth_blur(g, psf)
        params = md.DeconvParams(iterations=5)
        serial = DeblurPipeline(f.shape, psf, params, Scenario.BOX_1D).run(f)
        threaded = DeblurPipeline(f.shape, psf, params, Scenario.BOX_1D, workers=3).run(f)
        np.testing.assert_array_equal(threaded.values, serial.values)

    def test_rejects_2d_psf(self, rng):
        psf = Psf.general_2d(rng.uniform(0, 1, (3, 3)))
        with pytest.raises(ValueError):
            rrrl_deblur_parallel(md.Image(rng.uniform(1, 2, (8, 8))), psf,
                                 md.DeconvParams(), 2)

    def test_worker_exception_propagates(self, rng):
        class Broken:
            def blur(self, a):
                raise RuntimeError("boom")

        engine = ColumnSharpeningEngine(md.DeconvParams(iterations=1), None, 2)
        u = rng.uniform(1, 2, (16, 16))
        with pytest.raises(RuntimeError, match="boom"):
            engine.run(u.copy(), u, Broken(), 1)


@pytest.mark.skipif((os.cpu_count() or 1) < 4,
                    reason="per-iteration speed comparison needs >= 4 cores")
def test_parallel_iteration_not_slower_than_serial():
    # No-slowdown check over 100-run means; speedup is not contracted
    # for short iteration counts.
    g = md.make_test_image(256, 256)
    psf = Psf.general_1d(md.materialize_box_kernel(27), BlurAxis.VERTICAL)
    f = md.synth_blur(g, psf)
    params = md.DeconvParams(iterations=5)
    from motiondeblur.deconv import make_convolver
    convolver = make_convolver(psf, f.shape, "fourier")
    fpos = np.maximum(f.values, params.floor)

    def mean_iteration_ms(workers: int) -> float:
        engine = ColumnSharpeningEngine(params, None, workers)
        times: list[float] = []
        for _ in range(100):
            engine.run(fpos.copy(), fpos, convolver, params.iterations, times)
        return sum(times) / len(times)

    serial = mean_iteration_ms(1)
    parallel = mean_iteration_ms(5)
    assert parallel <= serial * 1.15
