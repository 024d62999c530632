"""Command-line drivers for the synthetic sweep, the C0 estimate and the image experiment.

Exit codes: 0 success, 1 usage or validation error, 2 I/O or file-format
error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imaging, simulation
from .errors import NumericError, PgmFormatError, ValidationError
from .gmm import make_power_law_gaussian

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

SWEEP_HEADER = ["k", "mse_adaptive", "mse_standard", "online_err_rate", "final_err_rate",
                "comp1", "comp2", "comp3", "comp4", "stderr_adaptive", "stderr_standard",
                "trials"]
C0_HEADER = ["matrix_kind", "m", "trials", "c0_estimate", "stderr"]
PSNR_HEADER = ["k", "psnr_adaptive_db", "psnr_standard_db"]


def fmt(v) -> str:
    """17 significant digits for floats so CSV output is byte-stable."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    n: int = 64
    alpha: float = 2.0
    m: int = 16
    k_min: int = 1
    k_max: int | None = None
    trials: int = 10_000
    seed: int = 0
    matrix_kind: str = "gaussian"
    freeze_matrix: bool = False
    workers: int | None = None
    input: Path | None = None
    output: Path | None = None
    output_dir: Path | None = None
    j: int = 19
    gmm_seed: int = 0

    @property
    def k_values(self) -> list[int]:
        hi = self.m if self.k_max is None else self.k_max
        return list(range(self.k_min, hi + 1))

    def validate(self) -> None:
        if self.n < 1:
            raise UsageError("--n must be at least 1")
        if self.command in ("sweep", "image"):
            if not 1 <= self.m <= self.n:
                raise UsageError(f"--m must lie in 1..{self.n}")
            ks = self.k_values
            if not ks or ks[0] < 1 or ks[-1] > self.m:
                raise UsageError(f"K range must be non-empty and within 1..{self.m}")
        if self.command == "c0" and not 1 <= self.m < self.n:
            raise UsageError(f"--m must lie in 1..{self.n - 1} (the ratio is undefined at M=N)")
        if self.trials < 1:
            raise UsageError("--trials must be at least 1")
        if self.seed < 0:
            raise UsageError("--seed must be non-negative")
        if self.alpha <= 0:
            raise UsageError("--alpha must be positive")
        if self.input is not None and not self.input.is_file():
            raise FileNotFoundError(f"input file not found: {self.input}")
        if self.output is not None and not self.output.parent.is_dir():
            raise FileNotFoundError(f"output directory does not exist: {self.output.parent}")


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def cmd_synthetic_sweep(cfg: RunConfig) -> int:
    gmm = simulation.make_synthetic_gmm(cfg.n, cfg.alpha)
    result = simulation.sweep_k(gmm, cfg.m, cfg.trials, cfg.seed, cfg.matrix_kind,
                                cfg.freeze_matrix, cfg.workers, cfg.k_values)
    rows = []
    for r in result.records:
        rows.append([r.K, r.mse_adaptive, r.mse_standard, r.online_error_rate,
                     r.final_error_rate, *r.components.contributions,
                     r.stderr_adaptive, r.stderr_standard, r.trials])
    _emit(_csv_text(SWEEP_HEADER, rows), cfg.output)
    return EXIT_OK


def cmd_c0(cfg: RunConfig) -> int:
    g = make_power_law_gaussian(cfg.n, cfg.alpha)
    ratios = simulation.c0_samples(g, cfg.matrix_kind, cfg.m, cfg.trials, cfg.seed)
    est = math.fsum(ratios) / cfg.trials
    se = float(np.std(ratios, ddof=1) / math.sqrt(cfg.trials)) if cfg.trials > 1 else 0.0
    print(f"C0 estimate ({cfg.matrix_kind}, M={cfg.m}, {cfg.trials} trials): "
          f"{est:.4f} +/- {se:.4f}", file=sys.stderr)
    _emit(_csv_text(C0_HEADER, [[cfg.matrix_kind, cfg.m, cfg.trials, est, se]]), cfg.output)
    return EXIT_OK


def cmd_image(cfg: RunConfig) -> int:
    img = imaging.load_pgm(cfg.input)
    patch = math.isqrt(cfg.n)
    if patch * patch != cfg.n:
        raise UsageError("--n must be a perfect square for the image experiment")
    gmm = imaging.build_directional_gmm(cfg.j, patch, np.random.default_rng(cfg.gmm_seed))
    report = imaging.run_image_experiment(img, gmm, cfg.m, cfg.k_values, cfg.seed,
                                          image_id=cfg.input.name)
    out = cfg.output_dir or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    for key, recon in report.reconstructions.items():
        name = "recon_standard.pgm" if key == "standard" else f"recon_k{key}.pgm"
        imaging.save_pgm(recon, out / name)
    rows = [[r.K, r.psnr_adaptive, r.psnr_standard] for r in report.records]
    rows.append(["standard", report.psnr_standard, report.psnr_standard])
    text = _csv_text(PSNR_HEADER, rows)
    (out / "psnr.csv").write_text(text)
    if cfg.output is not None:
        cfg.output.write_text(text)
    return EXIT_OK


def cmd_stripes(cfg: RunConfig, args) -> int:
    img = imaging.stripe_image(args.width, args.height, args.theta, args.period)
    if cfg.output is None:
        raise UsageError("--output is required")
    imaging.save_pgm(img, cfg.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="online-scs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, trials=10_000):
        p.add_argument("--n", type=int, default=64, help="signal dimension")
        p.add_argument("--alpha", type=float, default=2.0, help="eigenvalue decay exponent")
        p.add_argument("--m", type=int, default=16, help="measurement budget M")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", type=Path, help="CSV output path (stdout when omitted)")
        p.add_argument("--trials", type=int, default=trials)

    def k_range(p):
        p.add_argument("--k", type=int, help="single K (overrides --k-min/--k-max)")
        p.add_argument("--k-min", type=int, default=1)
        p.add_argument("--k-max", type=int, help="defaults to M")

    p = sub.add_parser("sweep", help="adaptive vs. random MSE for every K")
    common(p)
    k_range(p)
    p.add_argument("--matrix-kind", choices=["gaussian", "bernoulli"], default="gaussian")
    p.add_argument("--freeze-matrix", action="store_true",
                   help="draw the random matrices once per K instead of once per trial")
    p.add_argument("--workers", type=int,
                   help=f"worker processes (default: ${simulation.WORKERS_ENV} or 1)")

    p = sub.add_parser("c0", help="Monte Carlo estimate of the MAP error constant")
    common(p, trials=20_000)
    p.add_argument("--matrix-kind", choices=["gaussian", "bernoulli", "principal"],
                   default="gaussian")

    p = sub.add_parser("image", help="adaptive vs. random PSNR on a PGM image")
    common(p)
    k_range(p)
    p.add_argument("--input", type=Path, required=True, help="binary PGM (P5, maxval 255)")
    p.add_argument("--output-dir", type=Path, default=Path("."))
    p.add_argument("--j", type=int, default=19, help="number of GMM components")
    p.add_argument("--gmm-seed", type=int, default=0)

    p = sub.add_parser("stripes", help="write a synthetic oriented-stripe PGM")
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--period", type=float, default=11.0)
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for name in ("n", "alpha", "m", "trials", "seed", "matrix_kind", "freeze_matrix",
                 "workers", "input", "output", "output_dir", "j", "gmm_seed",
                 "k_min", "k_max"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if getattr(args, "k", None) is not None:
        cfg.k_min = cfg.k_max = args.k
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config(args)
    try:
        cfg.validate()
        if args.command == "sweep":
            return cmd_synthetic_sweep(cfg)
        if args.command == "c0":
            return cmd_c0(cfg)
        if args.command == "image":
            return cmd_image(cfg)
        return cmd_stripes(cfg, args)
    except (UsageError, ValidationError) as exc:
        print(f"online-scs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, PgmFormatError) as exc:
        print(f"online-scs: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"online-scs: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
