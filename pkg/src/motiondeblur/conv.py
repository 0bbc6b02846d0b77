"""Spatial-domain convolution with constant boundary continuation.

Out-of-domain reads take the value of the nearest boundary pixel along
the normal; diagonal reads clamp both indices, so corners replicate the
corner pixel. The box filter follows the classic sliding-window scheme:
the window sum is accumulated once per column and every further output
pixel costs a constant number of updates, independent of the kernel
length, for an overall O(n_x * (n_y + m)) on an n_x * n_y image with a
length-m kernel. Non-integer lengths add two end-weight corrections per
pixel, staying within two additions and two subtractions.

Running sums are kept in double precision and restarted every 4096 rows
to bound accumulation drift on tall images.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass

import numpy as np

from .core import BlurAxis, Image, Psf, PsfKind

__all__ = [
    "spatial_convolve",
    "convolve_array",
    "box_convolve",
    "box_filter_array",
    "BoxOpCounts",
    "count_box_ops",
]

_RESUM_INTERVAL = 4096


@dataclass
class BoxOpCounts:
    """Arithmetic issued by the box-filter update loop (per-element)."""

    pixels: int = 0
    window_adds: int = 0  # running-sum accumulation
    window_subs: int = 0  # sliding-window differences
    end_adds: int = 0     # fractional end-weight corrections

    @property
    def per_pixel(self) -> float:
        return (self.window_adds + self.window_subs + self.end_adds) / self.pixels


_active_counter: BoxOpCounts | None = None


@contextlib.contextmanager
def count_box_ops():
    """Instrument box_convolve update loops within the context."""
    global _active_counter
    counter = BoxOpCounts()
    prev, _active_counter = _active_counter, counter
    try:
        yield counter
    finally:
        _active_counter = prev


def _check_support(psf: Psf, shape: tuple[int, int]) -> None:
    sy, sx = psf.support
    if sy > shape[0] or sx > shape[1]:
        raise ValueError(
            f"PSF support {psf.support} exceeds image dimensions {shape}"
        )


def spatial_convolve(image: Image, psf: Psf) -> Image:
    """Direct-summation convolution with edge-replicating boundaries.

    Taps are accumulated in index order, so results match a scalar
    reference loop exactly. Cost is linear in image size times kernel
    size; prefer :func:`box_convolve` for uniform-box kernels.
    """
    return Image._wrap(convolve_array(image.values, psf))


def convolve_array(a: np.ndarray, psf: Psf) -> np.ndarray:
    """Array-level direct-summation convolution (see spatial_convolve)."""
    _check_support(psf, a.shape)
    h, w = a.shape
    if psf.kind is PsfKind.GENERAL_2D:
        k = psf.weights
        sy, sx = k.shape
        cy, cx = psf.center
        padded = np.pad(a, ((sy - 1 - cy, cy), (sx - 1 - cx, cx)), mode="edge")
        acc = np.zeros_like(a)
        for jy in range(sy):
            row = padded[sy - 1 - jy:sy - 1 - jy + h]
            for jx in range(sx):
                if k[jy, jx] != 0.0:
                    acc += k[jy, jx] * row[:, sx - 1 - jx:sx - 1 - jx + w]
        return acc
    k = psf.weights
    s = k.shape[0]
    c = psf.center
    if psf.axis is BlurAxis.VERTICAL:
        padded = np.pad(a, ((s - 1 - c, c), (0, 0)), mode="edge")
        acc = np.zeros_like(a)
        for j in range(s):
            if k[j] != 0.0:
                acc += k[j] * padded[s - 1 - j:s - 1 - j + h]
    else:
        padded = np.pad(a, ((0, 0), (s - 1 - c, c)), mode="edge")
        acc = np.zeros_like(a)
        for j in range(s):
            if k[j] != 0.0:
                acc += k[j] * padded[:, s - 1 - j:s - 1 - j + w]
    return acc


def box_convolve(image: Image, psf: Psf) -> Image:
    """Uniform-box convolution via constant-time sliding-window updates."""
    if psf.kind is not PsfKind.UNIFORM_BOX_1D:
        raise ValueError("box_convolve requires a uniform-box PSF")
    _check_support(psf, image.shape)
    a = image.values
    if psf.axis is BlurAxis.VERTICAL:
        return Image._wrap(_box_columns(a, psf.length, psf.center))
    out = _box_columns(np.ascontiguousarray(a.T), psf.length, psf.center)
    return Image._wrap(np.ascontiguousarray(out.T))


def box_filter_array(a: np.ndarray, length: float, center: int,
                     axis: int = 0) -> np.ndarray:
    """Array-level box filter used by the deconvolution fast paths."""
    if axis == 0:
        return _box_columns(a, length, center)
    return np.ascontiguousarray(
        _box_columns(np.ascontiguousarray(a.T), length, center).T
    )


def _box_columns(a: np.ndarray, length: float, center: int) -> np.ndarray:
    h, w = a.shape
    whole = math.floor(length)
    fractional = length != whole
    taps = whole + 2 if fractional else whole
    out = np.empty_like(a)
    counter = _active_counter
    for r0 in range(0, h, _RESUM_INTERVAL):
        r1 = min(r0 + _RESUM_INTERVAL, h)
        nk = r1 - r0
        # Rows the windows touch, clamped to the image (constant continuation).
        idx = np.clip(np.arange(r0 + center - taps + 1, r1 + center), 0, h - 1)
        seg = a[idx]
        csum = np.empty((seg.shape[0] + 1, w))
        csum[0] = 0.0
        np.cumsum(seg, axis=0, out=csum[1:])
        if fractional:
            interior = csum[whole + 1:whole + 1 + nk] - csum[1:1 + nk]
            block = interior * (1.0 / length)
            end_w = (length - whole) / (2.0 * length)
            block += end_w * seg[0:nk]
            block += end_w * seg[taps - 1:taps - 1 + nk]
        else:
            block = (csum[whole:whole + nk] - csum[0:nk]) * (1.0 / whole)
        out[r0:r1] = block
        if counter is not None:
            counter.pixels += nk * w
            # Cumulative-sum adds beyond the first window buildup.
            counter.window_adds += (nk if fractional else nk - 1) * w
            counter.window_subs += nk * w
            if fractional:
                counter.end_adds += 2 * nk * w
    return out
