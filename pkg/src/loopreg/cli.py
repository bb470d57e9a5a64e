"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 I/O or parse error,
3 domain guard (collision, monotonicity, resolution).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .bov import regularize, time_rescale, time_residual
from .diffeo import DELTA_MONO
from .errors import (
    CollisionError,
    ConfigurationError,
    NotADiffeomorphismError,
    ResolutionError,
)
from .loop import (
    EPS_COLLISION,
    Loop,
    check_grid,
    level_profile,
    load_loop,
    loop_to_json,
    min_modulus,
    resample,
    winding_number,
)
from .verify import Tolerances, fd_suite, sc1_suite, write_reports, write_series_csv

EXIT_OK, EXIT_VERIFY, EXIT_IO, EXIT_DOMAIN = 0, 1, 2, 3


@dataclass
class Config:
    n: int | None = None
    eps_collision: float = EPS_COLLISION
    delta_mono: float = DELTA_MONO
    seed: int = 0
    k_max: int = 3
    tolerances: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n is not None:
            check_grid(self.n)
        if self.k_max < 0:
            raise ConfigurationError("k_max must be >= 0")
        for name, value in [("eps_collision", self.eps_collision), ("delta_mono", self.delta_mono),
                            *self.tolerances.items()]:
            if not value > 0:
                raise ConfigurationError(f"{name} must be > 0, got {value}")


def _dump(data) -> str:
    return json.dumps(data, indent=1, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def sidecar_path(output: Path) -> Path:
    return output.with_name(output.stem + ".diagnostics.json")


def diagnostics(z: Loop, r: Loop, cfg: Config) -> dict:
    return {
        "n_in": z.n,
        "n_out": r.n,
        "winding": [winding_number(z, cfg.eps_collision), winding_number(r, cfg.eps_collision)],
        "min_modulus": [min_modulus(z), min_modulus(r)],
        "level_profile_in": level_profile(z, cfg.k_max).to_dict(),
        "level_profile_out": level_profile(r, cfg.k_max).to_dict(),
        "time_residual": time_residual(z, cfg.eps_collision),
    }


def cmd_regularize(input_path: Path, output_path: Path, cfg: Config) -> int:
    z = load_loop(input_path)
    if cfg.n is not None and cfg.n != z.n:
        z = resample(z, cfg.n)
    r = regularize(z, cfg.eps_collision)
    diag = diagnostics(z, r, cfg)
    _write(output_path, json.dumps(loop_to_json(r)) + "\n")
    _write(sidecar_path(output_path), _dump(diag))
    print(f"regularized n={z.n} -> n={r.n}; winding {diag['winding'][0]} -> {diag['winding'][1]}")
    return EXIT_OK


def _parse_levels(text: str) -> list[int]:
    try:
        levels = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad level list {text!r}") from exc
    if not levels or min(levels) < 0:
        raise ConfigurationError(f"bad level list {text!r}")
    return levels


def cmd_verify(suite: str, cfg: Config, levels: list[int], corrupt: bool = False,
               out_dir: Path | None = None) -> int:
    n = cfg.n or 64
    tol = Tolerances().with_overrides(cfg.tolerances)
    reports = []
    if suite in ("fd", "all"):
        reports += fd_suite(n, cfg.seed, corrupt=corrupt, tol=tol, delta_mono=cfg.delta_mono)
    if suite in ("sc1", "all"):
        reports += sc1_suite(n, cfg.seed, levels=levels, corrupt=corrupt, tol=tol,
                             delta_mono=cfg.delta_mono)
    failing = [r for r in reports if not r.ok]
    for r in reports:
        mark = "ok  " if r.ok else "FAIL"
        print(f"{mark} {r.kind:4s} m={r.level} {r.map_name:28s} slope={r.fitted_slope:7.3f} "
              f"min_err={r.min_error:.2e} verdict={'pass' if r.verdict else 'fail'} "
              f"expected={'pass' if r.expect_pass else 'fail'}")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_reports(reports, out_dir / f"reports_{suite}.json")
        write_series_csv(reports, out_dir / f"series_{suite}.csv")
    print(f"{len(reports) - len(failing)}/{len(reports)} cases as expected (backend: {kernels.backend()})")
    for r in failing:
        print(f"unexpected verdict: {r.map_name} [{r.base_descriptor}] {r.criterion}", file=sys.stderr)
    return EXIT_OK if not failing else EXIT_VERIFY


# -- gallery ------------------------------------------------------------------

def _closed_form_t(tau):
    return tau + np.sin(2 * np.pi * tau) / (2.5 * np.pi)


def _bisect_inverse(f, targets, lo=-1.0, hi=2.0, iterations=80):
    a = np.full_like(targets, lo)
    b = np.full_like(targets, hi)
    for _ in range(iterations):
        mid = 0.5 * (a + b)
        below = f(mid) < targets
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


def _gallery_examples(n: int) -> list[tuple[str, Loop, np.ndarray]]:
    t2 = lambda m: np.arange(m) / m  # noqa: E731
    out = [
        ("constant", Loop(np.full(8, 2.0)), np.full(16, 4.0 + 0j)),
        ("pure_mode", Loop.from_modes({1: 1.0}, 32), np.exp(4j * np.pi * t2(64))),
    ]
    tau = _bisect_inverse(_closed_form_t, t2(2 * n))
    out.append(("shifted_circle", Loop.from_modes({0: 1.0, 1: 0.5}, n),
                (1.0 + 0.5 * np.exp(2j * np.pi * tau)) ** 2))
    return out


def cmd_gallery(out_dir: Path, cfg: Config) -> int:
    n = cfg.n or 64
    manifest = {"examples": [], "n": n}
    for name, z, expected in _gallery_examples(n):
        got = regularize(z, cfg.eps_collision)
        _write(out_dir / f"{name}.json", json.dumps(loop_to_json(z)) + "\n")
        _write(out_dir / f"{name}.expected.json", json.dumps(loop_to_json(Loop(expected))) + "\n")
        manifest["examples"].append({
            "name": name,
            "input": f"{name}.json",
            "expected": f"{name}.expected.json",
            "n_in": z.n,
            "n_out": got.n,
            "max_error": float(np.max(np.abs(got.samples - expected))),
        })
    z = Loop.from_modes({0: 1.0, 1: 0.5}, n)
    t = time_rescale(z, cfg.eps_collision)
    grid = np.linspace(0.0, 1.0, 1001)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tau", "t_z", "closed_form"])
    for tau, v, c in zip(grid, t(grid), _closed_form_t(grid)):
        writer.writerow([repr(float(tau)), repr(float(v)), repr(float(c))])
    _write(out_dir / "shifted_circle.tz.csv", buf.getvalue())
    manifest["tz_profile"] = "shifted_circle.tz.csv"
    _write(out_dir / "manifest.json", _dump(manifest))
    print(f"wrote {len(manifest['examples'])} example pairs to {out_dir}")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def _tolerance(text: str) -> tuple[str, float]:
    name, _, value = text.partition("=")
    try:
        return name.strip(), float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=None, help="grid size (power of two >= 8)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--eps-collision", type=float, default=EPS_COLLISION)
    common.add_argument("--delta-mono", type=float, default=DELTA_MONO)
    common.add_argument("--k-max", type=int, default=3)
    common.add_argument("--tol", type=_tolerance, action="append", default=[],
                        metavar="NAME=VALUE", help="override a verification tolerance")
    common.add_argument("--backend", choices=["c", "python"], default=None,
                        help="force a kernel backend")

    parser = argparse.ArgumentParser(prog="loopreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("regularize", parents=[common], help="apply R to a loop file")
    p.add_argument("input", type=Path)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument("suite", choices=["fd", "sc1", "all"])
    p.add_argument("--k", default="0,1", help="comma-separated levels m for the sc1 suite")
    p.add_argument("--corrupt", action="store_true",
                   help="inject a 1%% corruption into every differential; all cases must fail")
    p.add_argument("--out", type=Path, default=None, help="directory for JSON/CSV reports")

    p = sub.add_parser("gallery", parents=[common], help="write worked examples and expected outputs")
    p.add_argument("--out", type=Path, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.backend:
            kernels.use_backend(args.backend)
        cfg = Config(n=args.n, eps_collision=args.eps_collision, delta_mono=args.delta_mono,
                     seed=args.seed, k_max=args.k_max, tolerances=dict(args.tol))
        if args.command == "regularize":
            return cmd_regularize(args.input, args.out, cfg)
        if args.command == "verify":
            Tolerances().with_overrides(cfg.tolerances)
            return cmd_verify(args.suite, cfg, _parse_levels(args.k), args.corrupt, args.out)
        return cmd_gallery(args.out, cfg)
    except (CollisionError, NotADiffeomorphismError, ResolutionError) as exc:
        print(f"domain guard: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConfigurationError, KeyError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
