"""Command-line pipeline: simulate data, reconstruct, and compare results.

Every run option lives in one flat config namespace (see ``io._CONFIG_SCHEMA``);
a ``--config FILE`` supplies ``key = value`` lines and every key is also
available as a ``--key value`` flag that overrides the file.  Outputs are
deterministic functions of the configuration, including the noise seed.

Exit codes:
    0  success
    1  unexpected internal error
    2  command-line usage error
    3  bad configuration (unknown key, bad value, missing required key)
    4  matrix container format error
    5  dimension or value mismatch between inputs
    6  file system error (missing or unreadable file)
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any

from . import __version__
from .controller import ControllerConfig, cwds_run, prior_sparsity_from_image
from .fbp import FilterSpec, fbp_reconstruct
from .geometry import assemble_system_matrix, normalize_system
from .io import (
    _CONFIG_SCHEMA,
    ConfigError,
    MatrixFormatError,
    RunConfig,
    read_matrix,
    relative_error,
    write_matrix,
    write_trace_csv,
)
from .phantom import SHEPP_LOGAN, add_gaussian_noise, shepp_logan, simulate_sinogram
from .recon import PdfpParams
from .wavelet import WaveletPlan

_EXIT_INTERNAL = 1
_EXIT_CONFIG = 3
_EXIT_FORMAT = 4
_EXIT_DIMENSION = 5
_EXIT_IO = 6

_KEY_HELP = {
    "n": "image side in pixels",
    "num_angles": "number of views over the angular range",
    "noise": "noise variance as a fraction of the squared reference level",
    "C_pr": "target fraction of significant wavelet coefficients",
    "sinogram_in": "input sinogram container",
    "sinogram_out": "output sinogram container",
    "image_out": "output image container",
    "trace_out": "output per-iteration trace (CSV)",
    "prior_image": "image container used to measure the sparsity target",
    "truth_image": "ground-truth image container used for the error summary",
}


def _add_run_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="FILE", help="key = value file, applied before flag overrides")
    sub.add_argument("--json-summary", action="store_true", help="print a one-line JSON run summary")
    for key in _CONFIG_SCHEMA:
        sub.add_argument(
            "--" + key.replace("_", "-"),
            dest=key,
            metavar="VALUE",
            default=None,
            help=_KEY_HELP.get(key, f"override config key {key!r}"),
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cwds",
        description="Sparsity-controlled tomographic reconstruction.",
        epilog="Exit codes: 0 ok, 1 internal, 2 usage, 3 config, 4 file format, "
        "5 dimension mismatch, 6 file system.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="project the head phantom and add noise")
    _add_run_options(sim)

    prior = commands.add_parser("sparsity-prior", help="measure the sparsity target of an image")
    _add_run_options(prior)

    cwds = commands.add_parser("reconstruct-cwds", help="sparsity-controlled reconstruction")
    _add_run_options(cwds)

    fbp = commands.add_parser("reconstruct-fbp", help="filtered backprojection reference")
    _add_run_options(fbp)

    metrics = commands.add_parser("metrics", help="relative error between two image containers")
    metrics.add_argument("recon", help="reconstructed image container")
    metrics.add_argument("truth", help="reference image container")
    metrics.add_argument("--json-summary", action="store_true", help="print the result as JSON")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for key in _CONFIG_SCHEMA:
        raw = getattr(args, key, None)
        if raw is not None:
            from .io import _parse_value

            overrides[key] = _parse_value(key, raw)
    return RunConfig.from_sources(args.config, overrides)


def _require(cfg: RunConfig, *keys: str) -> None:
    from .io import _KEY_TO_FIELD

    missing = [k for k in keys if getattr(cfg, _KEY_TO_FIELD.get(k, k)) is None]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")


def _emit(summary: dict[str, Any], wanted: bool) -> None:
    if wanted:
        print(json.dumps(summary, sort_keys=True))


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _require(cfg, "sinogram_out")
    grid = cfg.build_grid()
    geom = cfg.build_geometry()
    clean = simulate_sinogram(SHEPP_LOGAN, geom, grid, supersample=cfg.supersample)
    noisy = add_gaussian_noise(clean, cfg.noise, cfg.seed, ref=cfg.noise_ref)
    write_matrix(cfg.sinogram_out, noisy.reshape(geom.num_angles, geom.num_detectors))
    if cfg.image_out is not None:
        write_matrix(cfg.image_out, shepp_logan(cfg.n))
    _emit(
        {
            "sinogram_out": cfg.sinogram_out,
            "num_angles": geom.num_angles,
            "num_detectors": geom.num_detectors,
            "noise": cfg.noise,
            "seed": cfg.seed,
            "supersample": cfg.supersample,
        },
        args.json_summary,
    )
    return 0


def _cmd_sparsity_prior(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _require(cfg, "prior_image")
    image = read_matrix(cfg.prior_image)
    if image.shape[0] != image.shape[1]:
        raise ValueError(f"prior image must be square, got {image.shape}")
    plan = WaveletPlan(image.shape[0], cfg.levels)
    target = prior_sparsity_from_image(image, plan, cfg.kappa)
    print(repr(target))
    _emit({"C_pr": target, "levels": cfg.levels, "kappa": cfg.kappa}, args.json_summary)
    return 0


def _resolve_target_sparsity(cfg: RunConfig) -> float:
    if cfg.c_pr is not None:
        return cfg.c_pr
    if cfg.prior_image is None:
        raise ConfigError("need either C_pr or prior_image to set the sparsity target")
    image = read_matrix(cfg.prior_image)
    if image.shape[0] != image.shape[1]:
        raise ValueError(f"prior image must be square, got {image.shape}")
    return prior_sparsity_from_image(image, WaveletPlan(image.shape[0], cfg.levels), cfg.kappa)


def _read_sinogram(cfg: RunConfig):
    sino = read_matrix(cfg.sinogram_in)
    geom = cfg.build_geometry()
    if sino.shape != (geom.num_angles, geom.num_detectors):
        raise ValueError(
            f"sinogram shape {sino.shape} does not match geometry "
            f"({geom.num_angles}, {geom.num_detectors})"
        )
    return sino, geom


def _maybe_truth_error(cfg: RunConfig, image) -> float | None:
    if cfg.truth_image is None:
        return None
    truth = read_matrix(cfg.truth_image)
    return relative_error(image, truth)


def _cmd_reconstruct_cwds(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _require(cfg, "sinogram_in", "image_out", "trace_out")
    sino, geom = _read_sinogram(cfg)
    grid = cfg.build_grid()
    plan = WaveletPlan(cfg.n, cfg.levels)
    target = _resolve_target_sparsity(cfg)
    control = ControllerConfig(
        c_pr=target,
        kappa=cfg.kappa,
        omega=cfg.omega,
        eps_error=cfg.eps1,
        eps_step=cfg.eps2,
        i_max=cfg.imax,
    )
    params = PdfpParams(plan=plan, tau=cfg.tau, lam=cfg.lam)
    system = assemble_system_matrix(geom, grid)
    normalized, data = normalize_system(system, sino.ravel())
    echo = {k: v for k, v in cfg.effective().items() if v is not None}
    echo["C_pr"] = target
    image, trace = cwds_run(normalized, data, plan, control, params, metadata=echo)
    write_matrix(cfg.image_out, grid.as_image(image))
    write_trace_csv(cfg.trace_out, trace)
    last = trace.records[-1]
    summary: dict[str, Any] = {
        "iterations": len(trace),
        "final_mu": last.mu,
        "final_sparsity": last.c,
        "final_step": last.d,
        "stop_reason": trace.stop_reason,
        "image_out": cfg.image_out,
        "trace_out": cfg.trace_out,
    }
    truth_err = _maybe_truth_error(cfg, grid.as_image(image))
    if truth_err is not None:
        summary["relative_error"] = truth_err
    _emit(summary, args.json_summary)
    return 0


def _cmd_reconstruct_fbp(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    _require(cfg, "sinogram_in", "image_out")
    sino, geom = _read_sinogram(cfg)
    grid = cfg.build_grid()
    image = fbp_reconstruct(sino.ravel(), geom, grid, FilterSpec(cutoff=cfg.fbp_cutoff))
    write_matrix(cfg.image_out, grid.as_image(image))
    summary: dict[str, Any] = {"image_out": cfg.image_out, "cutoff": cfg.fbp_cutoff}
    truth_err = _maybe_truth_error(cfg, grid.as_image(image))
    if truth_err is not None:
        summary["relative_error"] = truth_err
    _emit(summary, args.json_summary)
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    recon = read_matrix(args.recon)
    truth = read_matrix(args.truth)
    value = relative_error(recon, truth)
    print(repr(value))
    _emit({"relative_error": value}, args.json_summary)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sparsity-prior": _cmd_sparsity_prior,
    "reconstruct-cwds": _cmd_reconstruct_cwds,
    "reconstruct-fbp": _cmd_reconstruct_fbp,
    "metrics": _cmd_metrics,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles --help/--version/usage itself
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except MatrixFormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return _EXIT_FORMAT
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return _EXIT_DIMENSION
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return _EXIT_IO
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {exc}", file=sys.stderr)
        return _EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
