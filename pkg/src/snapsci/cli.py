"""Command-line pipeline: simulate, reconstruct, benchmark, verify, make masks.

Every mode is deterministic under a fixed seed and config. Exit codes:
0 success, 2 configuration or validation problem, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import MODES, ConfigError, RunConfig
from .denoisers import Denoiser, IdentityDenoiser, TVDenoiser
from .errors import EmptyDataset, ShapeMismatch
from .forward import NoiseSpec, SpectralGeometry, spectral_forward, video_forward
from .metrics import psnr, ssim
from .operators import SciOperator
from .solvers import (
    SolverConfig,
    admm_net_reconstruct,
    gap_net_reconstruct,
    gap_tv_reconstruct,
    pnp_gap_reconstruct,
)
from .synthetic import bernoulli_masks, crop_mask, gaussian_masks
from .tensors import read_pgm, read_tensor, write_tensor
from .theory import TheoremParams, run_contraction_experiment, xi_statistics


def _load_plane_or_cube(path: str) -> np.ndarray:
    if path.endswith(".pgm"):
        return read_pgm(path)
    return read_tensor(path)


def _noise_from(cfg: RunConfig) -> NoiseSpec:
    return NoiseSpec(
        kind=cfg.get("noise", "none"),
        sigma=cfg.get_float("sigma", 0.0),
        seed=cfg.get_int("seed", 0),
    )


def _write_sidecar(path: Path, entries: dict) -> None:
    text = "\n".join(f"{k}={v}" for k, v in entries.items()) + "\n"
    path.write_text(text)


def cmd_simulate(cfg: RunConfig) -> int:
    kind = cfg.get("kind")
    cube = _load_plane_or_cube(cfg.get("cube"))
    mask = _load_plane_or_cube(cfg.get("mask"))
    noise = _noise_from(cfg)
    out = Path(cfg.get("out"))
    if kind == "video":
        if mask.ndim != 3:
            raise ShapeMismatch("video simulation needs a rank-3 mask stack")
        meas = video_forward(cube, mask, noise)
        geom_entries = {}
    elif kind == "spectral":
        if mask.ndim != 2:
            raise ShapeMismatch("spectral simulation needs a rank-2 mask")
        geom = SpectralGeometry(
            n_lambda=cfg.get_int("n_lambda", cube.shape[2]),
            shift_step=cfg.get_int("shift_step", 2),
        )
        meas = spectral_forward(cube, mask, geom, noise)
        geom_entries = {"n_lambda": geom.n_lambda, "shift_step": geom.shift_step}
    else:
        raise ConfigError(f"kind must be video or spectral, got {kind!r}")
    write_tensor(out, meas)
    truth_out = Path(cfg.get("truth_out", str(out.with_suffix("")) + "_truth.sct"))
    write_tensor(truth_out, cube)
    _write_sidecar(
        out.with_suffix(out.suffix + ".meta"),
        {
            "mode": "simulate",
            "kind": kind,
            "cube_dims": "x".join(map(str, cube.shape)),
            "meas_dims": "x".join(map(str, meas.shape)),
            **geom_entries,
            "noise": noise.kind,
            "sigma": noise.sigma,
            "seed": noise.seed,
            "truth": str(truth_out),
        },
    )
    print(f"wrote {out} ({meas.shape[0]}x{meas.shape[1]}) and {truth_out}")
    return 0


def _build_denoisers(cfg: RunConfig, stages: int) -> Denoiser | list[Denoiser]:
    kind = cfg.get("denoiser", "identity")
    if kind == "identity":
        return IdentityDenoiser()
    if kind == "tv":
        return TVDenoiser(
            cfg.get_float("lambda_tv", 0.07), cfg.get_int("tv_iters", 10)
        )
    if kind == "network":
        from .denoisers import NetworkDenoiser
        from .networks import load_weights

        paths = [p for p in (cfg.get("weights") or "").split(",") if p]
        if not paths:
            raise ConfigError("denoiser=network needs weights=<file[,file...]>")
        nets = [NetworkDenoiser(load_weights(p)) for p in paths]
        if len(nets) == 1:
            return nets[0]
        if len(nets) != stages:
            raise ConfigError(
                f"got {len(nets)} weight files for {stages} stages; "
                "give one shared file or one per stage"
            )
        return nets
    raise ConfigError(f"unknown denoiser kind {kind!r}")


def _run_solver(cfg: RunConfig, op: SciOperator, meas, truth):
    algorithm = cfg.get("algorithm")
    stages = cfg.get_int("stages", 100 if algorithm == "gap_tv" else 9)
    scale_raw = cfg.get("projection_scale", "1")
    scale = float(op.n_channels) if scale_raw.upper() == "B" else float(scale_raw)
    if algorithm == "gap_tv":
        return gap_tv_reconstruct(
            op,
            meas,
            iters=stages,
            lambda_tv=cfg.get_float("lambda_tv", 0.07),
            tv_iters=cfg.get_int("tv_iters", 10),
            truth=truth,
        )
    denoisers = _build_denoisers(cfg, stages)
    if algorithm == "pnp_gap":
        if isinstance(denoisers, list):
            raise ConfigError("pnp_gap shares a single denoiser")
        return pnp_gap_reconstruct(
            op, meas, denoisers, stages, projection_scale=scale, truth=truth
        )
    solver_cfg = SolverConfig(
        algorithm=algorithm,
        stages=stages,
        denoisers=denoisers,
        gamma=cfg.get_float("gamma", 0.01),
        projection_scale=scale,
    )
    if algorithm == "gap_net":
        return gap_net_reconstruct(op, meas, solver_cfg, truth=truth)
    if algorithm == "admm_net":
        return admm_net_reconstruct(op, meas, solver_cfg, truth=truth)
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def cmd_reconstruct(cfg: RunConfig) -> int:
    meas = _load_plane_or_cube(cfg.get("meas"))
    mask = _load_plane_or_cube(cfg.get("mask"))
    if mask.ndim != 3:
        raise ShapeMismatch("reconstruction needs a rank-3 mask stack")
    truth = _load_plane_or_cube(cfg.get("truth")) if cfg.get("truth") else None
    op = SciOperator(mask)
    start = time.perf_counter()
    cube, trace = _run_solver(cfg, op, meas, truth)
    elapsed = time.perf_counter() - start
    out = Path(cfg.get("out"))
    write_tensor(out, cube)
    report_lines = [
        f"algorithm={cfg.get('algorithm')}",
        f"stages={len(trace.residuals) - 1}",
        f"wall_clock_s={elapsed:.6f}",
    ]
    report_lines += [
        f"residual_{k}={r:.9e}" for k, r in enumerate(trace.residuals)
    ]
    if truth is not None:
        peak = cfg.get_float("peak", 1.0)
        score = psnr(truth, cube, peak=peak)
        similarity = ssim(truth, cube, peak=peak)
        report_lines += [f"psnr_db={score:.4f}", f"ssim={similarity:.6f}"]
        print(f"PSNR {score:.2f} dB  SSIM {similarity:.4f}  ({elapsed:.2f} s)")
    else:
        print(f"reconstructed in {elapsed:.2f} s")
    report = Path(cfg.get("report", str(out) + ".report.txt"))
    report.write_text("\n".join(report_lines) + "\n")
    print(f"wrote {out} and {report}")
    return 0


def _benchmark_scene(cfg: RunConfig, scene: Path):
    mask_path = scene / "mask.sct"
    if not mask_path.exists():
        return None
    mask = read_tensor(mask_path)
    truth = None
    if (scene / "meas.sct").exists():
        meas = read_tensor(scene / "meas.sct")
        if (scene / "truth.sct").exists():
            truth = read_tensor(scene / "truth.sct")
    elif (scene / "truth.sct").exists():
        truth = read_tensor(scene / "truth.sct")
        meas = video_forward(truth, mask, _noise_from(cfg))
    else:
        return None
    op = SciOperator(mask)
    start = time.perf_counter()
    cube, _ = _run_solver(cfg, op, meas, truth)
    elapsed = time.perf_counter() - start
    peak = cfg.get_float("peak", 1.0)
    if truth is not None:
        frame_scores = [
            psnr(truth[:, :, b], cube[:, :, b], peak=peak)
            for b in range(truth.shape[2])
        ]
        score = float(np.mean(frame_scores))
        similarity = ssim(truth, cube, peak=peak)
    else:
        score = float("nan")
        similarity = float("nan")
    return scene.name, score, similarity, elapsed


def cmd_benchmark(cfg: RunConfig) -> int:
    root = Path(cfg.get("dir"))
    scenes = sorted(p for p in root.iterdir() if p.is_dir())
    workers = cfg.get_int("workers", 4)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = [r for r in pool.map(lambda s: _benchmark_scene(cfg, s), scenes) if r]
    if not rows:
        raise EmptyDataset(f"no scenes with mask.sct plus truth.sct/meas.sct in {root}")
    mean_psnr = float(np.mean([r[1] for r in rows]))
    mean_ssim = float(np.mean([r[2] for r in rows]))
    mean_time = float(np.mean([r[3] for r in rows]))
    rows.append(("average", mean_psnr, mean_ssim, mean_time))
    csv_lines = ["scene,psnr_db,ssim,time_s"]
    csv_lines += [f"{n},{p:.4f},{s:.6f},{t:.4f}" for n, p, s, t in rows]
    out_csv = Path(cfg.get("out_csv"))
    out_csv.write_text("\n".join(csv_lines) + "\n")
    width = max(len(r[0]) for r in rows)
    print(f"{'scene'.ljust(width)}  psnr_db   ssim    time_s")
    for n, p, s, t in rows:
        print(f"{n.ljust(width)}  {p:7.2f}  {s:6.4f}  {t:7.3f}")
    print(f"wrote {out_csv}")
    return 0


def cmd_make_masks(cfg: RunConfig) -> int:
    kind = cfg.get("kind")
    out = Path(cfg.get("out"))
    seed = cfg.get_int("seed", 0)
    if kind == "bernoulli":
        masks = bernoulli_masks(
            cfg.get_int("nx"), cfg.get_int("ny"), cfg.get_int("frames", 8),
            seed=seed, p=cfg.get_float("p", 0.5),
        )
    elif kind == "gaussian":
        masks = gaussian_masks(
            cfg.get_int("nx"), cfg.get_int("ny"), cfg.get_int("frames", 8), seed=seed
        )
    elif kind == "crop":
        source = _load_plane_or_cube(cfg.get("source"))
        offset = (cfg.get_int("offset_x", 0), cfg.get_int("offset_y", 0))
        size = (cfg.get_int("nx"), cfg.get_int("ny"))
        if source.ndim == 2:
            masks = crop_mask(source, offset, size)
        else:
            masks = np.stack(
                [
                    crop_mask(source[:, :, b], offset, size)
                    for b in range(source.shape[2])
                ],
                axis=2,
            )
    else:
        raise ConfigError(f"kind must be bernoulli, gaussian or crop, got {kind!r}")
    write_tensor(out, masks)
    print(f"wrote {out} {'x'.join(map(str, masks.shape))}")
    return 0


def cmd_verify_theory(cfg: RunConfig) -> int:
    params = TheoremParams(
        n=cfg.get_int("n", 256),
        B=cfg.get_int("frames", 4),
        eta=(cfg.get_int("eta", 5),),
        delta=(cfg.get_float("delta", 1e-3),),
        lipschitz=(1.0,),
        zeta=cfg.get_float("zeta", 0.9),
        lam=cfg.get_float("lam", 0.1),
        rho=cfg.get_float("rho", 1.0),
    )
    report = run_contraction_experiment(
        params,
        trials=cfg.get_int("trials", 100),
        seed=cfg.get_int("seed", 0),
        stages=cfg.get_int("stages", 30),
        target=cfg.get_float("target", 1e-6),
    )
    for line in report.lines():
        print(line)
    csv_path = cfg.get("csv")
    if csv_path:
        Path(csv_path).write_text(report.ratios_csv())
        print(f"wrote {csv_path}")

    # operator-norm bound over fresh ensembles
    rng = np.random.default_rng(cfg.get_int("seed", 0))
    worst = 0.0
    count = cfg.get_int("opnorm_trials", 20)
    for _ in range(count):
        masks = rng.standard_normal((8, 8, params.B))
        worst = max(worst, SciOperator(masks).operator_norm())
    print(f"opnorm_trials={count}")
    print(f"opnorm_worst={worst:.12f}")
    print(f"opnorm_bound_ok={worst <= 1.0 + 1e-8}")

    # concentration statistics
    samples = cfg.get_int("xi_samples", 2000)
    nx = ny = int(np.sqrt(params.n))
    op = SciOperator(rng.standard_normal((nx, ny, params.B)))
    e = rng.standard_normal(params.nB)
    ep = rng.standard_normal(params.nB)
    xi = xi_statistics(
        op, e / np.linalg.norm(e), ep / np.linalg.norm(ep), samples,
        seed=cfg.get_int("seed", 0) + 1,
    )
    for line in xi.lines():
        print(line)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "benchmark": cmd_benchmark,
    "make-masks": cmd_make_masks,
    "verify-theory": cmd_verify_theory,
}

# flag names per mode, mirrored into config keys
MODE_FLAGS = {
    "simulate": (
        "kind", "cube", "mask", "out", "truth_out",
        "n_lambda", "shift_step", "noise", "sigma", "seed",
    ),
    "reconstruct": (
        "meas", "mask", "out", "truth", "report", "algorithm", "stages",
        "lambda_tv", "tv_iters", "gamma", "projection_scale", "denoiser",
        "weights", "peak",
    ),
    "benchmark": (
        "dir", "out_csv", "algorithm", "stages", "lambda_tv", "tv_iters",
        "gamma", "projection_scale", "denoiser", "weights", "peak",
        "noise", "sigma", "seed", "workers",
    ),
    "make-masks": (
        "out", "kind", "nx", "ny", "frames", "seed", "p",
        "source", "offset_x", "offset_y",
    ),
    "verify-theory": (
        "n", "frames", "eta", "delta", "zeta", "lam", "rho", "trials",
        "stages", "seed", "target", "csv", "xi_samples", "opnorm_trials",
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snapsci",
        description="Snapshot compressive imaging toolkit",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", help="flat key=value config file")
        for flag in MODE_FLAGS[mode]:
            p.add_argument(f"--{flag.replace('_', '-')}", dest=flag)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    mode = args.mode
    overrides = {
        flag: getattr(args, flag)
        for flag in MODE_FLAGS[mode]
        if getattr(args, flag) is not None
    }
    try:
        cfg = RunConfig.load(mode, args.config, overrides)
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[mode](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: bad files, shape errors, ...
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
