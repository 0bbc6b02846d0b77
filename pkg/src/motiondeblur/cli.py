"""Command-line front end: degradation, deconvolution, evaluation and
benchmarking over binary PGM files.

Exit codes: 0 success, 1 usage error, 2 runtime error. Output files are
written to a temporary sibling and renamed on success, so failed
invocations never leave partial output behind.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile

from . import bench as bench_mod
from . import synth
from .core import BlurAxis, DeconvParams, Image, Psf, load_psf
from .deconv import (
    DeblurPipeline,
    Scenario,
    default_scenario,
    rl_deblur,
    rrrl_deblur,
    wiener_1d,
    wiener_2d,
)
from .parallel import rrrl_deblur_parallel
from .pgm import read_pgm, write_pgm

__all__ = ["main"]


class UsageError(Exception):
    """Bad flag values or malformed specifications."""


def _parse_psf_spec(spec: str) -> Psf:
    parts = spec.split(":")
    if parts[0] == "box":
        if len(parts) != 3:
            raise UsageError(f"bad PSF spec {spec!r}: expected box:AXIS:LENGTH")
        try:
            return Psf.uniform_box(BlurAxis.parse(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise UsageError(f"bad PSF spec {spec!r}: {exc}") from None
    if parts[0] == "file":
        if len(parts) < 2:
            raise UsageError(f"bad PSF spec {spec!r}: expected file:PATH")
        return load_psf(spec.split(":", 1)[1])
    raise UsageError(f"bad PSF spec {spec!r}: expected box:... or file:...")


def _parse_noise_spec(spec: str) -> tuple[str, float]:
    if spec == "none":
        return ("none", 0.0)
    parts = spec.split(":")
    if len(parts) == 2 and parts[0] in ("gauss", "impulse"):
        try:
            return (parts[0], float(parts[1]))
        except ValueError:
            pass
    raise UsageError(
        f"bad noise spec {spec!r}: expected none, gauss:SIGMA or impulse:DENSITY"
    )


def _atomic_write(image: Image, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(suffix=".pgm.part", dir=directory)
    os.close(fd)
    try:
        write_pgm(image, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _scenario_from_flag(flag: str, psf: Psf) -> Scenario:
    if flag == "auto":
        return default_scenario(psf)
    for sc in Scenario:
        if sc.value == flag:
            return sc
    raise UsageError(f"unknown scenario {flag!r}")


_CONVOLVER_FOR_SCENARIO = {
    Scenario.BOX_1D: "box",
    Scenario.FOURIER_1D: "fourier",
    Scenario.FOURIER_2D: "fourier2d",
}


def _cmd_blur(args) -> int:
    psf = _parse_psf_spec(args.psf)
    noise_kind, level = _parse_noise_spec(args.noise)
    img = read_pgm(args.input)
    out = synth.synth_blur(img, psf)
    if noise_kind == "gauss":
        out = synth.add_gaussian_noise(out, level, args.seed)
    elif noise_kind == "impulse":
        out = synth.add_impulse_noise(out, level, args.seed)
    out = synth.quantize(out)
    _atomic_write(out, args.output)
    manifest = (
        f"source={args.input} psf={args.psf} noise={args.noise} "
        f"seed={args.seed} clip=on quantize=on\n"
    )
    with open(args.output + ".manifest", "w", encoding="ascii") as fh:
        fh.write(manifest)
    return 0


def _params_from_args(args) -> DeconvParams:
    try:
        return DeconvParams(
            wiener_k=args.k,
            alpha=args.alpha,
            iterations=args.iters,
            eps_data=args.eps_data,
            eps_reg=args.eps_reg,
            floor=args.floor,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_deblur(args) -> int:
    psf = _parse_psf_spec(args.psf)
    params = _params_from_args(args)
    f = read_pgm(args.input)
    scenario = _scenario_from_flag(args.scenario, psf)
    threads = max(1, args.threads)
    parallel_ok = threads > 1 and scenario is not Scenario.FOURIER_2D and psf.is_1d
    timings = None
    if args.method == "wiener":
        if scenario is Scenario.FOURIER_2D:
            out = wiener_2d(f, psf, params.wiener_k)
        else:
            out = wiener_1d(f, psf, params.wiener_k)
    elif args.method == "rl":
        out = rl_deblur(f, psf, params.iterations,
                        _CONVOLVER_FOR_SCENARIO[scenario], floor=params.floor)
    elif args.method == "rrrl":
        if parallel_ok:
            out = rrrl_deblur_parallel(f, psf, params, threads,
                                       convolver=_CONVOLVER_FOR_SCENARIO[scenario])
        else:
            out = rrrl_deblur(f, psf, params, _CONVOLVER_FOR_SCENARIO[scenario])
    elif args.method == "wr3l":
        pipeline = DeblurPipeline(f.shape, psf, params, scenario,
                                  workers=threads if parallel_ok else 1)
        out, timings = pipeline.run_timed(f)
    else:
        raise UsageError(f"unknown method {args.method!r}")
    _atomic_write(out, args.output)
    if args.time and timings is not None:
        print(f"wiener: {timings.wiener_ms:.3f} ms")
        for i, ms in enumerate(timings.iteration_ms, 1):
            print(f"rrrl iteration {i}: {ms:.3f} ms")
        print(f"rrrl total: {timings.rrrl_total_ms:.3f} ms")
        print(f"total: {timings.total_ms:.3f} ms")
    return 0


def _cmd_snr(args) -> int:
    restored = read_pgm(args.restored)
    reference = read_pgm(args.reference)
    value = synth.snr(restored, reference)
    if math.isinf(value):
        print("inf" if value > 0 else "-inf")
    else:
        print(f"{value:.2f}")
    return 0


def _cmd_bench(args) -> int:
    psf = _parse_psf_spec(args.psf)
    params = _params_from_args(args)
    f = read_pgm(args.input)
    scenario = _scenario_from_flag(args.scenario, psf)
    if args.runs < 1:
        raise UsageError("--runs must be at least 1")
    stats = bench_mod.bench_pipeline(
        f, psf, params, scenario, runs=args.runs, warmup=args.warmup,
        workers=max(1, args.threads),
        split_first_iteration=args.split_first_iteration,
    )
    sys.stdout.write(bench_mod.report(stats, args.format))
    return 0


def _cmd_testimage(args) -> int:
    img = synth.make_test_image(args.width, args.height, args.seed)
    _atomic_write(img, args.output)
    return 0


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--psf", required=True,
                   help="PSF spec: box:AXIS:LENGTH or file:PATH")
    p.add_argument("--k", type=float, default=0.006, help="Wiener damping K")
    p.add_argument("--alpha", type=float, default=0.003,
                   help="regularization weight")
    p.add_argument("--iters", type=int, default=5, help="iteration count")
    p.add_argument("--eps-data", type=float, default=1.0, dest="eps_data")
    p.add_argument("--eps-reg", type=float, default=0.01, dest="eps_reg")
    p.add_argument("--floor", type=float, default=0.1)
    p.add_argument("--scenario", default="auto",
                   choices=["auto", "box", "fourier1d", "fourier2d"])
    p.add_argument("--threads", type=int, default=1,
                   help="parallel RRRL workers (1D scenarios only)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motiondeblur",
        description="Deconvolution of grey-value images with known blur",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("blur", help="synthetically degrade an image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--psf", required=True)
    p.add_argument("--noise", default="none",
                   help="none, gauss:SIGMA or impulse:DENSITY")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_blur)

    p = sub.add_parser("deblur", help="restore a degraded image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--method", default="wr3l",
                   choices=["wiener", "rl", "rrrl", "wr3l"])
    _add_param_flags(p)
    p.add_argument("--time", action="store_true",
                   help="print per-stage timings (wr3l)")
    p.set_defaults(func=_cmd_deblur)

    p = sub.add_parser("snr", help="signal-to-noise ratio of two images")
    p.add_argument("restored")
    p.add_argument("reference")
    p.set_defaults(func=_cmd_snr)

    p = sub.add_parser("bench", help="benchmark the deconvolution pipeline")
    p.add_argument("input")
    _add_param_flags(p)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--format", default="human", choices=["human", "csv"])
    p.add_argument("--warmup", action="store_true",
                   help="one untimed run before measuring")
    p.add_argument("--split-first-iteration", action="store_true",
                   dest="split_first_iteration",
                   help="report the first iteration separately")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("testimage", help="write the bundled synthetic scene")
    p.add_argument("output")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_testimage)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
