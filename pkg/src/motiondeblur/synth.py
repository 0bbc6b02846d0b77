"""Synthetic degradation (blur + noise) and quality metrics.

Degradation always blurs through the spatial domain with constant
continuation, never through the Fourier path the restoration algorithms
use, so synthetic test cases stay honest. Noise generators draw from
numpy's PCG64 generator seeded per call, which makes corpora
reproducible across platforms.
"""

from __future__ import annotations

import math

import numpy as np

from .conv import spatial_convolve
from .core import Image, Psf

__all__ = [
    "synth_blur",
    "add_gaussian_noise",
    "add_impulse_noise",
    "snr",
    "quantize",
    "make_test_image",
]


def quantize(img: Image) -> Image:
    """Emulate 8-bit capture: round half up, clamp to [0, 255]."""
    return Image._wrap(np.clip(np.floor(img.values + 0.5), 0.0, 255.0))


def synth_blur(g: Image, psf: Psf, quantize_output: bool = True) -> Image:
    """Blur a sharp image through the spatial domain.

    Quantization to integer grey levels is on by default to match 8-bit
    test material.
    """
    blurred = spatial_convolve(g, psf)
    return quantize(blurred) if quantize_output else blurred


def add_gaussian_noise(img: Image, sigma: float, seed: int) -> Image:
    """Add i.i.d. zero-mean Gaussian noise, clipped to [0, 255].

    sigma = 0 returns the image unchanged.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return img
    rng = np.random.default_rng(seed)
    noisy = img.values + rng.normal(0.0, sigma, img.shape)
    return Image._wrap(np.clip(noisy, 0.0, 255.0))


def add_impulse_noise(img: Image, density: float, seed: int) -> Image:
    """Replace each pixel with probability ``density`` by uniform noise.

    Replacement values are drawn uniformly from [0, 255]. Two fields are
    drawn in fixed order (replacement mask first, values second) so the
    output is fully determined by (input, seed).
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    mask = rng.random(img.shape) < density
    values = rng.uniform(0.0, 255.0, img.shape)
    return Image._wrap(np.where(mask, values, img.values))


def snr(u: Image, u0: Image) -> float:
    """Signal-to-noise ratio 10*log10(var(u) / var(u - u0)) in dB.

    Variances are population variances over all pixels. A vanishing
    difference variance reports +inf, a vanishing signal variance -inf.
    """
    if u.shape != u0.shape:
        raise ValueError(f"image dimensions differ: {u.shape} vs {u0.shape}")
    var_diff = float(np.var(u.values - u0.values))
    if var_diff == 0.0:
        return math.inf
    var_u = float(np.var(u.values))
    if var_u == 0.0:
        return -math.inf
    return 10.0 * math.log10(var_u / var_diff)


def make_test_image(width: int = 256, height: int = 256, seed: int = 7) -> Image:
    """Deterministic grey-value test scene with natural-image statistics.

    Combines smooth gradients, high-contrast discs and bars, a line
    target and a speckle patch, quantized to integer grey levels. Serves
    as stand-in material for restoration experiments at any size.
    """
    if width < 16 or height < 16:
        raise ValueError("test scene needs at least 16x16 pixels")
    y, x = np.mgrid[0:height, 0:width]
    xn = x / (width - 1)
    yn = y / (height - 1)
    a = 70.0 + 60.0 * xn + 30.0 * yn

    def disc(cx, cy, r, value):
        m = (xn - cx) ** 2 + (yn - cy) ** 2 < r * r
        a[m] = value

    disc(0.32, 0.30, 0.17, 215.0)
    disc(0.32, 0.30, 0.05, 55.0)
    disc(0.72, 0.68, 0.12, 30.0)
    # Dark vertical bar and bright horizontal bar.
    a[(xn > 0.55) & (xn < 0.61) & (yn > 0.12) & (yn < 0.88)] = 25.0
    a[(yn > 0.46) & (yn < 0.52) & (xn > 0.08) & (xn < 0.46)] = 235.0
    # Line target: thin bright rows at increasing pitch.
    for pitch in (4, 6, 9, 14):
        band = (yn > 0.62) & (yn < 0.92) & (x % pitch == 0)
        region = (xn > 0.66 + (pitch - 4) * 0.02)
        a[band & region] += 90.0
    # Sinusoidal texture patch.
    tex = (xn > 0.05) & (xn < 0.40) & (yn > 0.60) & (yn < 0.92)
    a[tex] += 28.0 * np.sin(2 * np.pi * x[tex] / 7.0) * np.sin(2 * np.pi * y[tex] / 11.0)
    # Seeded speckle patch in the upper-right corner.
    rng = np.random.default_rng(seed)
    ph, pw = max(8, height // 6), max(8, width // 6)
    a[4:4 + ph, width - pw - 4:width - 4] += rng.uniform(-45.0, 45.0, (ph, pw))
    return quantize(Image(np.clip(a, 5.0, 250.0)))
