"""Deconvolution toolkit for grey-value images with known space-invariant
blur: Wiener filtering combined with robust regularized Richardson-Lucy
iterations, with fast paths for axis-aligned 1D and uniform motion blur,
plus synthetic degradation and benchmarking tooling.
"""

from .bench import StageStats, TimingStats, bench_pipeline, report
from .conv import box_convolve, spatial_convolve
from .core import (
    BlurAxis,
    ContractError,
    DeconvParams,
    Image,
    Psf,
    PsfKind,
    adjoint,
    clamp_floor,
    load_psf,
    materialize_box_kernel,
    parse_psf,
)
from .deconv import (
    DeblurPipeline,
    DivergenceLut,
    Scenario,
    SharpeningState,
    StageTimes,
    default_divergence_lut,
    default_scenario,
    diffusion_energy,
    diffusion_term,
    make_convolver,
    prepare_state,
    rl_deblur,
    rl_step,
    robust_weight,
    rrrl_deblur,
    rrrl_step,
    wiener_1d,
    wiener_2d,
    wr3l,
)
from .fft import (
    FourierPlan,
    Spectrum,
    fft2_forward,
    fft2_inverse,
    fft_forward_real,
    fft_inverse_real,
    fourier_convolve,
    plan_fft,
)
from .parallel import rrrl_deblur_parallel
from .pgm import read_pgm, write_pgm
from .synth import (
    add_gaussian_noise,
    add_impulse_noise,
    make_test_image,
    quantize,
    snr,
    synth_blur,
)

__version__ = "0.1.0"
