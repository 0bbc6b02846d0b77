"""Self-contained radix-2 FFT with precomputed twiddle tables.

Transforms are decimation-in-time over power-of-two lengths, vectorized
over a trailing batch axis so a whole stack of image columns moves
through each butterfly stage at once. Convention: the forward transform
is unnormalized, the inverse divides by n.

Real-valued image data is handled by packing two real signals into one
complex transform (real part, imaginary part). Any frequency response
with Hermitian symmetry, convolution kernels and Wiener multipliers
alike, filters both packed signals in a single pass, which is where the
real-input adaptation pays off.

Fourier-domain convolution uses the natural periodic continuation; the
kernel is embedded into a signal-sized grid with its center pixel at
index 0 and the remainder wrapped around.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BlurAxis, Image, Psf, PsfKind

__all__ = [
    "FourierPlan",
    "Spectrum",
    "plan_fft",
    "fft_forward_real",
    "fft_inverse_real",
    "fft2_forward",
    "fft2_inverse",
    "fourier_convolve",
    "embed_psf_1d",
    "embed_psf_2d",
    "psf_spectrum_1d",
    "psf_spectrum_2d",
    "apply_column_filter",
    "filter_real_pair",
    "filter_real_pair_2d",
]

MAX_LENGTH = 1 << 20


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class FourierPlan:
    """Reusable transform plan for one power-of-two length.

    Holds the bit-reversal permutation and one twiddle table per
    butterfly stage (forward and conjugate), covering every root of
    unity a length-n transform touches. Plans are immutable after
    construction; scratch buffers are allocated per invocation, so a
    single plan may serve any number of concurrent transforms.
    """

    def __init__(self, n: int):
        if int(n) != n or not _is_pow2(int(n)) or n > MAX_LENGTH:
            raise ValueError(
                f"transform length must be a power of two in [1, {MAX_LENGTH}], got {n}"
            )
        self.n = int(n)
        idx = np.arange(self.n)
        rev = np.zeros(self.n, dtype=np.intp)
        for _ in range(self.n.bit_length() - 1):
            rev = (rev << 1) | (idx & 1)
            idx >>= 1
        rev.setflags(write=False)
        self._perm = rev
        self._tw_fwd = []
        self._tw_inv = []
        half = 1
        while half < self.n:
            w = np.exp(-1j * np.pi * np.arange(half) / half)
            w.setflags(write=False)
            wc = np.conj(w)
            wc.setflags(write=False)
            self._tw_fwd.append(w)
            self._tw_inv.append(wc)
            half *= 2

    def _run(self, a: np.ndarray, tables) -> np.ndarray:
        a = np.asarray(a)
        if a.shape[0] != self.n:
            raise ValueError(f"signal length {a.shape[0]} does not match plan length {self.n}")
        z = np.asarray(a, dtype=np.complex128)[self._perm]
        extra = (1,) * (z.ndim - 1)
        n = self.n
        if n == 1:
            return z
        # One scratch buffer of n/2 elements serves every butterfly stage.
        scratch = np.empty((n // 2,) + z.shape[1:], dtype=np.complex128)
        half = 1
        for w in tables:
            v = z.reshape(n // (2 * half), 2, half, *z.shape[1:])
            wb = w.reshape((half,) + extra)
            t = scratch.reshape(v.shape[0], half, *z.shape[1:])
            np.multiply(v[:, 1], wb, out=t)
            np.subtract(v[:, 0], t, out=v[:, 1])
            v[:, 0] += t
            half *= 2
        return z

    def forward(self, a: np.ndarray) -> np.ndarray:
        """Unnormalized DFT along axis 0; trailing axes are batch."""
        return self._run(a, self._tw_fwd)

    def inverse(self, a: np.ndarray) -> np.ndarray:
        """Inverse DFT along axis 0, scaled by 1/n."""
        z = self._run(a, self._tw_inv)
        z *= 1.0 / self.n
        return z


def plan_fft(n: int) -> FourierPlan:
    """Build a reusable plan for length-n transforms (n a power of two)."""
    return FourierPlan(n)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Full-length complex spectrum of a length-n signal.

    For spectra of real signals, coefficient[k] equals the complex
    conjugate of coefficient[n - k].
    """

    n: int
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=np.complex128, copy=True)
        if c.ndim != 1 or c.shape[0] != self.n:
            raise ValueError("spectrum must hold exactly n coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)


def fft_forward_real(plan: FourierPlan, signal) -> Spectrum:
    """Forward transform of a real signal, returned as a full spectrum."""
    s = np.asarray(signal, dtype=np.float64)
    if s.ndim != 1:
        raise ValueError("expected a 1D real signal")
    return Spectrum(plan.n, plan.forward(s))


def fft_inverse_real(plan: FourierPlan, spectrum) -> np.ndarray:
    """Inverse transform of a (Hermitian) spectrum back to real samples."""
    c = spectrum.coefficients if isinstance(spectrum, Spectrum) else np.asarray(spectrum)
    if c.ndim != 1:
        raise ValueError("expected a 1D spectrum")
    return np.ascontiguousarray(plan.inverse(c).real)


def plans_for_shape(shape: tuple[int, int]) -> tuple[FourierPlan, FourierPlan]:
    """Plan pair (columns, rows) for a 2D transform of the given shape."""
    return plan_fft(shape[0]), plan_fft(shape[1])


def _fft2(z, plan_h: FourierPlan, plan_w: FourierPlan, inverse: bool = False):
    # Separable row-column application; each 1D pass copies into a
    # contiguous work buffer via the bit-reversal gather.
    if inverse:
        return plan_h.inverse(plan_w.inverse(z.T).T)
    return plan_h.forward(plan_w.forward(z.T).T)


def fft2_forward(image: Image, plans=None) -> np.ndarray:
    """2D spectrum of an image with power-of-two dimensions."""
    a = image.values
    if plans is None:
        plans = plans_for_shape(a.shape)
    return _fft2(a, *plans)


def fft2_inverse(spectrum2d: np.ndarray, plans=None) -> Image:
    """Image recovered from a 2D spectrum (real part of the inverse)."""
    z = np.asarray(spectrum2d)
    if z.ndim != 2:
        raise ValueError("expected a 2D spectrum")
    if plans is None:
        plans = plans_for_shape(z.shape)
    out = _fft2(z, *plans, inverse=True)
    return Image._wrap(np.ascontiguousarray(out.real))


def embed_psf_1d(psf: Psf, n: int) -> np.ndarray:
    """Kernel taps placed on a length-n grid, center at index 0, wrapped."""
    w = psf.weights
    if w.ndim != 1:
        raise ValueError("expected a 1D PSF")
    if w.shape[0] > n:
        raise ValueError("PSF support exceeds the transform length")
    z = np.zeros(n)
    z[(np.arange(w.shape[0]) - psf.center) % n] = w
    return z


def embed_psf_2d(psf: Psf, shape: tuple[int, int]) -> np.ndarray:
    """Kernel embedded into an image-sized grid, center at (0, 0), wrapped."""
    if psf.kind is PsfKind.GENERAL_2D:
        w = psf.weights
        cy, cx = psf.center
    elif psf.axis is BlurAxis.VERTICAL:
        w = psf.weights[:, None]
        cy, cx = psf.center, 0
    else:
        w = psf.weights[None, :]
        cy, cx = 0, psf.center
    if w.shape[0] > shape[0] or w.shape[1] > shape[1]:
        raise ValueError("PSF support exceeds the image dimensions")
    z = np.zeros(shape)
    oy = (np.arange(w.shape[0]) - cy) % shape[0]
    ox = (np.arange(w.shape[1]) - cx) % shape[1]
    z[np.ix_(oy, ox)] = w
    return z


def psf_spectrum_1d(psf: Psf, plan: FourierPlan) -> np.ndarray:
    """Frequency response of a 1D kernel on a length-n periodic grid."""
    return plan.forward(embed_psf_1d(psf, plan.n))


def psf_spectrum_2d(psf: Psf, shape: tuple[int, int], plans=None) -> np.ndarray:
    """Frequency response of a kernel on a 2D periodic grid."""
    if plans is None:
        plans = plans_for_shape(shape)
    return _fft2(embed_psf_2d(psf, shape), *plans)


def apply_column_filter(a: np.ndarray, filt: np.ndarray, plan: FourierPlan) -> np.ndarray:
    """Apply a Hermitian frequency filter along every column of a real array.

    Column pairs are packed into complex signals, so two columns share
    one forward and one inverse transform. Hermitian symmetry of the
    filter keeps both filtered columns real and separable again as real
    and imaginary parts.
    """
    h, w = a.shape
    out = np.empty_like(a)
    pairs = w // 2
    if pairs:
        z = a[:, 0:2 * pairs:2] + 1j * a[:, 1:2 * pairs:2]
        zf = plan.forward(z)
        zf *= filt[:, None]
        z = plan.inverse(zf)
        out[:, 0:2 * pairs:2] = z.real
        out[:, 1:2 * pairs:2] = z.imag
    if w % 2:
        zf = plan.forward(a[:, -1].astype(np.complex128))
        zf *= filt
        out[:, -1] = plan.inverse(zf).real
    return out


def filter_real_pair(p: np.ndarray, q: np.ndarray, filt: np.ndarray,
                     plan: FourierPlan) -> tuple[np.ndarray, np.ndarray]:
    """Filter two real arrays along columns with one shared transform.

    ``p`` rides in the real part, ``q`` in the imaginary part; ``filt``
    must be Hermitian for the outputs to separate exactly.
    """
    zf = plan.forward(p + 1j * q)
    zf *= filt[:, None]
    z = plan.inverse(zf)
    return z.real, z.imag


def filter_real_pair_2d(p: np.ndarray, q: np.ndarray, filt2d: np.ndarray,
                        plans) -> tuple[np.ndarray, np.ndarray]:
    """2D variant of :func:`filter_real_pair` for image-sized filters."""
    zf = _fft2(p + 1j * q, *plans)
    zf *= filt2d
    z = _fft2(zf, *plans, inverse=True)
    return z.real, z.imag


def fourier_convolve(image: Image, psf: Psf, plans=None) -> Image:
    """Circular convolution of an image with a kernel.

    2D kernels use the full 2D transform; 1D kernels transform only the
    blur axis, one 1D FFT per column (or row). The transformed axes must
    have power-of-two extent.
    """
    a = image.values
    if psf.kind is PsfKind.GENERAL_2D:
        if not (_is_pow2(a.shape[0]) and _is_pow2(a.shape[1])):
            raise ValueError("2D Fourier convolution needs power-of-two dimensions")
        if plans is None:
            plans = plans_for_shape(a.shape)
        spec = psf_spectrum_2d(psf, a.shape, plans)
        out = _fft2(_fft2(a, *plans) * spec, *plans, inverse=True)
        return Image._wrap(np.ascontiguousarray(out.real))
    along = a if psf.axis is BlurAxis.VERTICAL else a.T
    n = along.shape[0]
    if not _is_pow2(n):
        raise ValueError("the blur axis must have power-of-two extent")
    plan = plans if isinstance(plans, FourierPlan) else plan_fft(n)
    out = apply_column_filter(along, psf_spectrum_1d(psf, plan), plan)
    if psf.axis is BlurAxis.HORIZONTAL:
        out = np.ascontiguousarray(out.T)
    return Image._wrap(out)
