"""Multi-threaded RRRL for 1D motion blur.

The sharpening term of the RRRL update decomposes into columns parallel
to the blur direction, so contiguous column slabs go to worker threads
while the coordinating thread computes the diffusion term, whose 2D
stencil couples neighboring columns. Workers start before the first
iteration, persist until the last, and meet the coordinator at a
barrier twice per iteration (fields published, columns written).

Slab boundaries align to even column indices so the pair-packed column
transforms see exactly the serial pairings; results are therefore
independent of worker count and scheduling, and bitwise equal to the
serial path.
"""

from __future__ import annotations

import threading
import time

import numpy as np

from .core import BlurAxis, DeconvParams, Image, Psf, PsfKind
from .deconv import (
    DIVISION_GUARD,
    DivergenceLut,
    _combine,
    _diffusion_arrays,
    _weight_arrays,
    default_divergence_lut,
    make_convolver,
)

__all__ = ["ColumnSharpeningEngine", "rrrl_deblur_parallel"]


def _even_slabs(width: int, workers: int) -> list[tuple[int, int]]:
    bounds = [2 * ((i * width) // (2 * workers)) for i in range(workers)]
    bounds.append(width)
    return [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]


class ColumnSharpeningEngine:
    """Distributes RRRL sharpening columns across persistent threads."""

    def __init__(self, params: DeconvParams, lut: DivergenceLut | None,
                 workers: int):
        if workers < 1:
            raise ValueError("worker count must be at least 1")
        self.params = params
        self.lut = lut if lut is not None else default_divergence_lut()
        self.workers = int(workers)

    def run(self, u0: np.ndarray, fpos: np.ndarray, convolver,
            iterations: int, iteration_ms: list[float] | None = None) -> np.ndarray:
        """Iterate RRRL on ``u0`` (whose storage is reused as scratch)."""
        if iterations <= 0:
            return u0
        params, lut = self.params, self.lut
        slabs = _even_slabs(u0.shape[1], self.workers)
        barrier = threading.Barrier(len(slabs) + 1)
        shared = {"u": u0, "out": np.empty_like(u0), "diffusion": None,
                  "stop": False, "error": None}

        def work(lo: int, hi: int) -> None:
            try:
                while True:
                    barrier.wait()
                    if shared["stop"]:
                        return
                    u = shared["u"][:, lo:hi]
                    fs = fpos[:, lo:hi]
                    b = convolver.blur(u)
                    np.maximum(b, DIVISION_GUARD, out=b)
                    weight = _weight_arrays(fs, b, lut, params.eps_data,
                                            params.floor, assume_floored=True)
                    d = shared["diffusion"]
                    ds = None if d is None else d[:, lo:hi]
                    shared["out"][:, lo:hi] = _combine(
                        u, fs, b, weight, ds, params.alpha, convolver
                    )
                    barrier.wait()
            except BaseException as exc:  # propagate through the coordinator
                shared["error"] = exc
                barrier.abort()

        threads = [threading.Thread(target=work, args=slab, daemon=True)
                   for slab in slabs]
        for t in threads:
            t.start()
        u, out = u0, shared["out"]
        try:
            for _ in range(iterations):
                t0 = time.perf_counter()
                shared["u"], shared["out"] = u, out
                shared["diffusion"] = (
                    _diffusion_arrays(u, params.eps_reg)
                    if params.alpha > 0.0 else None
                )
                barrier.wait()  # fields ready, workers go
                barrier.wait()  # all columns written
                u, out = out, u
                if iteration_ms is not None:
                    iteration_ms.append((time.perf_counter() - t0) * 1e3)
            shared["stop"] = True
            barrier.wait()
        except threading.BrokenBarrierError:
            if shared["error"] is not None:
                raise shared["error"] from None
            raise
        finally:
            for t in threads:
                t.join()
        return u


def rrrl_deblur_parallel(f: Image, h: Psf, params: DeconvParams,
                         worker_count: int = 1, *, convolver=None) -> Image:
    """RRRL deconvolution with the sharpening term split across threads.

    Requires a 1D PSF: uniform-box kernels run their convolutions
    through the sliding-window filter, general 1D kernels through
    per-column FFTs (override via ``convolver``). The result matches
    the serial path with the same convolver exactly, for any worker
    count.
    """
    if not h.is_1d:
        raise ValueError("parallel RRRL requires a 1D PSF")
    transpose = h.axis is BlurAxis.HORIZONTAL
    a = np.ascontiguousarray(f.values.T) if transpose else f.values
    psf = h if not transpose else Psf(h.kind, h.weights, h.center,
                                      axis=BlurAxis.VERTICAL, length=h.length)
    if convolver is None or isinstance(convolver, str):
        if convolver is None:
            convolver = "box" if psf.kind is PsfKind.UNIFORM_BOX_1D else "fourier"
        convolver = make_convolver(psf, a.shape, convolver)
    fpos = np.maximum(a, params.floor)
    engine = ColumnSharpeningEngine(params, None, worker_count)
    u = engine.run(fpos.copy(), fpos, convolver, params.iterations)
    if transpose:
        u = np.ascontiguousarray(u.T)
    return Image._wrap(u)
