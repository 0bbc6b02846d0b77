"""Image and point-spread-function data model shared by all other modules.

Grey values are carried as double precision floats throughout; 8-bit
quantization happens only at file I/O. All value objects are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ContractError",
    "Image",
    "Psf",
    "PsfKind",
    "BlurAxis",
    "DeconvParams",
    "adjoint",
    "clamp_floor",
    "materialize_box_kernel",
    "parse_psf",
    "load_psf",
    "DEFAULT_FLOOR",
]

# Positivity clamp on the [0, 255] grey scale: small relative to one
# quantization level, large enough to keep divisions well conditioned.
DEFAULT_FLOOR = 0.1

_UNIT_SUM_TOL = 1e-12


class ContractError(ValueError):
    """Raised when input data violates an operation's contract."""


@dataclass(frozen=True, eq=False)
class Image:
    """2D grid of real-valued grey levels, nominal range [0, 255].

    ``values`` is a read-only float64 array of shape (height, width).
    """

    values: np.ndarray

    def __post_init__(self):
        a = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("image values must form a non-empty 2D grid")
        if not np.all(np.isfinite(a)):
            raise ValueError("image values must all be finite")
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    @classmethod
    def _wrap(cls, a: np.ndarray) -> "Image":
        # Fast path for freshly computed arrays we own: skips copy and
        # finiteness validation.
        obj = object.__new__(cls)
        a.setflags(write=False)
        object.__setattr__(obj, "values", a)
        return obj

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


class PsfKind(enum.Enum):
    GENERAL_2D = "2d"
    GENERAL_1D = "1d"
    UNIFORM_BOX_1D = "box"


class BlurAxis(enum.Enum):
    """Image axis along which a 1D point-spread function acts."""

    VERTICAL = "v"    # along columns (numpy axis 0)
    HORIZONTAL = "h"  # along rows (numpy axis 1)

    @classmethod
    def parse(cls, token: str) -> "BlurAxis":
        token = token.strip().lower()
        for axis in cls:
            if token in (axis.value, axis.name.lower()):
                return axis
        raise ValueError(f"unknown blur axis {token!r} (expected 'h' or 'v')")


def materialize_box_kernel(length: float) -> np.ndarray:
    """Weights of a uniform motion-blur kernel of the given length in pixels.

    Integer lengths m yield m equal weights 1/m. Non-integer lengths L
    yield floor(L) interior weights 1/L framed by two end weights of
    (L - floor(L)) / (2L) each, so the kernel stays symmetric and keeps
    unit sum. Matches the continuous box of width L integrated over unit
    pixel cells centered on the kernel's midpoint.
    """
    length = float(length)
    if not math.isfinite(length) or length < 1.0:
        raise ValueError(f"box kernel length must be >= 1, got {length}")
    whole = math.floor(length)
    if length == whole:
        return np.full(whole, 1.0 / whole)
    w = np.full(whole + 2, 1.0 / length)
    w[0] = w[-1] = (length - whole) / (2.0 * length)
    return w


def _normalized(weights: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    w = np.array(weights, dtype=np.float64, copy=True)
    if w.size == 0:
        raise ValueError(f"{what} must have at least one weight")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise ValueError(f"{what} weights must be finite and non-negative")
    total = float(w.sum())
    if total <= 0.0:
        raise ValueError(f"{what} weights must not all be zero")
    w /= total
    w.setflags(write=False)
    return w, total


@dataclass(frozen=True, eq=False)
class Psf:
    """Space-invariant point-spread function.

    ``weights`` is always materialized (2D for GENERAL_2D kernels, 1D
    otherwise), non-negative and normalized to unit sum at construction.
    ``center`` is the offset of the origin pixel within the support:
    an ``(row, col)`` pair for 2D kernels, a single index for 1D kinds.
    Convolution reads ``image[x - (j - center)]`` for tap ``j``.
    """

    kind: PsfKind
    weights: np.ndarray
    center: tuple[int, int] | int
    axis: BlurAxis | None = None
    length: float | None = field(default=None)  # UNIFORM_BOX_1D only, pixels

    def __post_init__(self):
        w = self.weights
        if np.any(w < 0.0):
            raise ValueError("PSF weights must be non-negative")
        if abs(float(w.sum()) - 1.0) > _UNIT_SUM_TOL:
            raise ValueError("PSF weights must sum to 1 within 1e-12")
        if self.kind is not PsfKind.GENERAL_2D and self.axis is None:
            raise ValueError("1D PSF kinds need a blur axis")

    @classmethod
    def general_2d(cls, weights, center: tuple[int, int] | None = None) -> "Psf":
        w, _ = _normalized(np.atleast_2d(np.asarray(weights, dtype=np.float64)), "2D PSF")
        if w.ndim != 2:
            raise ValueError("2D PSF weights must be a 2D array")
        if center is None:
            center = (w.shape[0] // 2, w.shape[1] // 2)
        cy, cx = int(center[0]), int(center[1])
        if not (0 <= cy < w.shape[0] and 0 <= cx < w.shape[1]):
            raise ValueError("PSF center must lie inside the support")
        return cls(PsfKind.GENERAL_2D, w, (cy, cx))

    @classmethod
    def general_1d(cls, weights, axis: BlurAxis, center: int | None = None) -> "Psf":
        w, _ = _normalized(np.ravel(np.asarray(weights, dtype=np.float64)), "1D PSF")
        c = w.shape[0] // 2 if center is None else int(center)
        if not 0 <= c < w.shape[0]:
            raise ValueError("PSF center must lie inside the support")
        return cls(PsfKind.GENERAL_1D, w, c, axis=axis)

    @classmethod
    def uniform_box(cls, axis: BlurAxis, length: float) -> "Psf":
        w = materialize_box_kernel(length)
        w.setflags(write=False)
        return cls(PsfKind.UNIFORM_BOX_1D, w, w.shape[0] // 2, axis=axis,
                   length=float(length))

    @property
    def support(self) -> tuple[int, int]:
        """Kernel extent as (rows, cols)."""
        if self.kind is PsfKind.GENERAL_2D:
            return self.weights.shape
        n = self.weights.shape[0]
        return (n, 1) if self.axis is BlurAxis.VERTICAL else (1, n)

    @property
    def is_1d(self) -> bool:
        return self.kind is not PsfKind.GENERAL_2D


def adjoint(psf: Psf) -> Psf:
    """Adjoint PSF: the kernel reflected at the origin.

    Weights are reversed along every axis and the center is remapped so
    that adjoint(adjoint(p)) == p exactly. Kind and normalization are
    preserved.
    """
    if psf.kind is PsfKind.GENERAL_2D:
        w = np.ascontiguousarray(psf.weights[::-1, ::-1])
        w.setflags(write=False)
        cy, cx = psf.center
        center = (w.shape[0] - 1 - cy, w.shape[1] - 1 - cx)
        return Psf(psf.kind, w, center)
    w = np.ascontiguousarray(psf.weights[::-1])
    w.setflags(write=False)
    center = w.shape[0] - 1 - psf.center
    return Psf(psf.kind, w, center, axis=psf.axis, length=psf.length)


def clamp_floor(img: Image, floor: float = DEFAULT_FLOOR) -> Image:
    """Replace every grey value below ``floor`` by ``floor``."""
    if not floor > 0.0:
        raise ValueError(f"floor must be positive, got {floor}")
    return Image._wrap(np.maximum(img.values, floor))


@dataclass(frozen=True)
class DeconvParams:
    """Parameters shared by the deconvolution algorithms.

    wiener_k: Wiener filter damping constant K > 0.
    alpha: weight of the edge-preserving regularization term.
    iterations: number of multiplicative update steps.
    eps_data: smoothing of the robust data penalizer (grey-value scale).
    eps_reg: smoothing of the total-variation diffusivity.
    floor: positivity clamp applied to iteration inputs.
    """

    wiener_k: float = 0.006
    alpha: float = 0.003
    iterations: int = 5
    eps_data: float = 1.0
    eps_reg: float = 0.01
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if not self.wiener_k > 0.0:
            raise ValueError("wiener_k must be positive")
        if self.alpha < 0.0:
            raise ValueError("alpha must be non-negative")
        if self.iterations < 0 or int(self.iterations) != self.iterations:
            raise ValueError("iterations must be a non-negative integer")
        if not (self.eps_data > 0.0 and self.eps_reg > 0.0 and self.floor > 0.0):
            raise ValueError("eps_data, eps_reg and floor must be positive")


def parse_psf(text: str) -> Psf:
    """Parse the PSF text format.

    First line is one of ``2D w h cx cy``, ``1D axis n c`` or
    ``BOX axis length``; general kinds are followed by whitespace
    separated weights. Weights are renormalized to unit sum; a
    renormalization factor outside [0.999, 1.001] emits a warning.
    """
    tokens = text.split()
    if not tokens:
        raise ValueError("empty PSF specification")
    head = tokens[0].upper()
    if head == "BOX":
        if len(tokens) != 3:
            raise ValueError("BOX header must read 'BOX axis length'")
        return Psf.uniform_box(BlurAxis.parse(tokens[1]), float(tokens[2]))
    if head == "2D":
        if len(tokens) < 5:
            raise ValueError("2D header must read '2D w h cx cy'")
        w, h, cx, cy = (int(t) for t in tokens[1:5])
        values = [float(t) for t in tokens[5:]]
        if len(values) != w * h:
            raise ValueError(f"expected {w * h} weights, got {len(values)}")
        raw = np.asarray(values).reshape(h, w)
        _warn_if_badly_scaled(raw)
        return Psf.general_2d(raw, center=(cy, cx))
    if head == "1D":
        if len(tokens) < 4:
            raise ValueError("1D header must read '1D axis n c'")
        axis = BlurAxis.parse(tokens[1])
        n, c = int(tokens[2]), int(tokens[3])
        values = [float(t) for t in tokens[4:]]
        if len(values) != n:
            raise ValueError(f"expected {n} weights, got {len(values)}")
        raw = np.asarray(values)
        _warn_if_badly_scaled(raw)
        return Psf.general_1d(raw, axis, center=c)
    raise ValueError(f"unknown PSF kind {tokens[0]!r}")


def _warn_if_badly_scaled(raw: np.ndarray) -> None:
    total = float(np.sum(raw))
    if total > 0 and not 0.999 <= total <= 1.001:
        warnings.warn(
            f"PSF weights sum to {total:.6g}; renormalizing to unit sum",
            stacklevel=3,
        )


def load_psf(path) -> Psf:
    """Read a PSF from a text file in the :func:`parse_psf` format."""
    with open(path, "r", encoding="ascii") as fh:
        return parse_psf(fh.read())
