"""Numerical certification of the differentials and of sc^1 remainder decay.

Every check produces a :class:`ScReport`.  Slopes are least-squares fits of
``log(error)`` against ``log(h)`` over the steps whose error sits above a
roundoff floor; excluded steps are recorded in the report.  Suites mix
genuine cases with corrupted differentials (negative controls) that must
fail.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .bov import d_regularize, d_time_rescale, regularize, time_rescale
from .diffeo import DELTA_MONO, CircleDiffeo, TangentDiffeo, d2_invert, d_invert, invert
from .errors import CollisionError, NotADiffeomorphismError
from .loop import (
    LevelProfile,
    Loop,
    coefficients_of,
    level_profile,
    min_modulus,
    resample_samples,
    sobolev_norm_coefficients,
    square,
)

EPS = np.finfo(float).eps

FD_STEPS = tuple(10.0 ** -np.arange(2.0, 5.01, 0.5))
FD2_STEPS = tuple(10.0 ** -np.arange(1.0, 3.01, 0.5))
SC1_STEPS = tuple(10.0 ** -np.arange(2.5, 5.51, 0.5))
# squaring has an exactly quadratic remainder: large steps keep cancellation out of the
# fit, while the small end must pass below the point where a 1% linear error dominates
SQUARE_STEPS = tuple(10.0 ** -np.arange(1.0, 4.51, 0.5))


@dataclass(frozen=True)
class Tolerances:
    fd_slope: tuple[float, float] = (1.8, 2.2)
    fd_rel_error: float = 1e-6
    fd2_rel_error: float = 1e-4
    sc1_margin: float = 0.5
    roundoff_factor: float = 100.0
    corruption: float = 1.01

    def with_overrides(self, overrides: dict[str, float]) -> Tolerances:
        known = {f for f in self.__dataclass_fields__}
        values: dict[str, Any] = {}
        for key, value in overrides.items():
            if key == "fd_slope_min":
                values["fd_slope"] = (float(value), values.get("fd_slope", self.fd_slope)[1])
            elif key == "fd_slope_max":
                values["fd_slope"] = (values.get("fd_slope", self.fd_slope)[0], float(value))
            elif key in known:
                values[key] = float(value)
            else:
                raise KeyError(f"unknown tolerance {key!r}")
        return replace(self, **values)


@dataclass
class ScReport:
    map_name: str
    base_descriptor: str
    kind: str
    level: int
    steps: list[float]
    errors: list[float]
    fitted_slope: float
    verdict: bool
    min_error: float = float("nan")
    excluded_steps: list[float] = field(default_factory=list)
    expect_pass: bool = True
    criterion: str = ""

    @property
    def ok(self) -> bool:
        """Whether the verdict is the expected one (negative controls must fail)."""
        return self.verdict == self.expect_pass

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = "pass" if self.verdict else "fail"
        d["expected"] = "pass" if self.expect_pass else "fail"
        return d


# -- generic vector handling -------------------------------------------------

def _vec(value) -> np.ndarray:
    if isinstance(value, Loop):
        return np.asarray(value.samples)
    if isinstance(value, TangentDiffeo):
        return np.asarray(value.samples)
    if isinstance(value, CircleDiffeo):
        return np.asarray(value.lift)
    raise TypeError(f"cannot treat {type(value).__name__} as a vector")


def _wrap(like, arr: np.ndarray):
    if isinstance(like, Loop):
        return Loop(arr)
    return TangentDiffeo(arr)


def _shift(base, direction, h: float, delta_mono: float = DELTA_MONO):
    if isinstance(base, Loop):
        return Loop(base.samples + h * direction.samples)
    if isinstance(base, CircleDiffeo):
        return base.perturb(direction, h, delta_mono)
    raise TypeError(f"cannot perturb {type(base).__name__}")


def _norm(arr: np.ndarray, level: int) -> float:
    return sobolev_norm_coefficients(coefficients_of(arr), level)


def _roundoff_scale(arr: np.ndarray, level: int) -> float:
    """``W^{2+level,2}`` norm of white noise of one ulp of ``max |arr|`` per sample."""
    n = arr.shape[-1]
    m = np.arange(-(n // 2), n // 2)
    weight = (1.0 + (2.0 * np.pi * m) ** 2) ** (2 + level)
    return EPS * float(np.max(np.abs(arr))) * float(np.sqrt(np.mean(weight)))


def _fit_slope(steps: np.ndarray, errors: np.ndarray) -> float:
    if steps.size < 2:
        return float("nan")
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


_GUARDS = (CollisionError, NotADiffeomorphismError)


def _fd(map_fn: Callable, base, direction, h: float, h_floor: float = 1e-12,
        delta_mono: float = DELTA_MONO):
    while True:
        try:
            plus = _vec(map_fn(_shift(base, direction, h, delta_mono)))
            minus = _vec(map_fn(_shift(base, direction, -h, delta_mono)))
            return (plus - minus) / (2.0 * h), h
        except _GUARDS:
            h *= 0.5
            if h < h_floor:
                raise


def fd_directional(map_fn: Callable, base, direction, h: float, delta_mono: float = DELTA_MONO):
    """Central difference ``(map(base + h dir) - map(base - h dir)) / 2h``.

    When a perturbed point violates a validity guard the step is halved and
    retried down to ``1e-12``.
    """
    vec, _ = _fd(map_fn, base, direction, h, delta_mono=delta_mono)
    return Loop(vec) if np.iscomplexobj(vec) else TangentDiffeo(vec)


def corrupted(d_map: Callable, factor: float = 1.01) -> Callable:
    """A differential scaled by ``factor``; used as a negative control."""

    def bad(*args):
        value = d_map(*args)
        return _wrap(value, factor * _vec(value))

    return bad


# -- checks -------------------------------------------------------------------

def check_differential(map_fn: Callable, d_map: Callable, base, dirs: Sequence,
                       steps: Sequence[float] = FD_STEPS, level: int = 0, *,
                       name: str = "map", descriptor: str = "",
                       tol: Tolerances = Tolerances(), expect_pass: bool = True,
                       delta_mono: float = DELTA_MONO) -> ScReport:
    """Compare ``d_map(base, dir)`` with central differences of ``map_fn``.

    The error at each step is the largest relative ``W^{2+level,2}`` error
    over the directions.
    """
    scale = _roundoff_scale(_vec(map_fn(base)), level)
    exact = [_vec(d_map(base, d)) for d in dirs]
    exact_norms = [max(_norm(e, level), 1e-300) for e in exact]
    errs, used, floors = [], [], []
    for h in steps:
        worst, floor = 0.0, 0.0
        for d, e, en in zip(dirs, exact, exact_norms):
            fd, h_used = _fd(map_fn, base, d, h, delta_mono=delta_mono)
            worst = max(worst, _norm(fd - e, level) / en)
            floor = max(floor, tol.roundoff_factor * scale / (h_used * en))
        errs.append(worst)
        used.append(h_used)
        floors.append(floor)
    return _report(name, descriptor, "fd", level, used, errs, floors, tol, expect_pass,
                   lambda slope, emin: tol.fd_slope[0] <= slope <= tol.fd_slope[1]
                   and emin <= tol.fd_rel_error,
                   f"slope in [{tol.fd_slope[0]}, {tol.fd_slope[1]}] and min error <= {tol.fd_rel_error:g}")


def check_second_differential(map_fn: Callable, d2_map: Callable, base, dir1, dir2,
                              steps: Sequence[float] = FD2_STEPS, level: int = 0, *,
                              name: str = "map", descriptor: str = "",
                              tol: Tolerances = Tolerances(), expect_pass: bool = True,
                              delta_mono: float = DELTA_MONO) -> ScReport:
    """Compare ``d2_map(base, dir1, dir2)`` with the nested central difference."""
    scale = _roundoff_scale(_vec(map_fn(base)), level)
    exact = _vec(d2_map(base, dir1, dir2))
    en = max(_norm(exact, level), 1e-300)
    errs, floors = [], []
    for h in steps:
        def at(s1, s2):
            moved = _shift(_shift(base, dir1, s1 * h, delta_mono), dir2, s2 * h, delta_mono)
            return _vec(map_fn(moved))

        fd = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h)
        errs.append(_norm(fd - exact, level) / en)
        floors.append(tol.roundoff_factor * scale / (h * h * en))
    return _report(name, descriptor, "fd2", level, list(steps), errs, floors, tol, expect_pass,
                   lambda slope, emin: tol.fd_slope[0] <= slope <= tol.fd_slope[1]
                   and emin <= tol.fd2_rel_error,
                   f"slope in [{tol.fd_slope[0]}, {tol.fd_slope[1]}] and min error <= {tol.fd2_rel_error:g}")


def sc1_remainder_slope(map_fn: Callable, d_map: Callable, base, direction, m: int,
                        steps: Sequence[float] = SC1_STEPS, *, name: str = "map",
                        descriptor: str = "", tol: Tolerances = Tolerances(),
                        expect_pass: bool = True, delta_mono: float = DELTA_MONO) -> ScReport:
    """Decay of ``|map(base + h dir) - map(base) - h d_map(base, dir)|`` in
    ``W^{2+m,2}`` for base and direction taken at level ``m + 1``.

    sc^1 requires the remainder to vanish faster than ``h``; the check
    passes when the fitted slope is at least ``1 + sc1_margin``.
    """
    v0 = _vec(map_fn(base))
    lin = _vec(d_map(base, direction))
    scale = _roundoff_scale(v0, m)
    dir_norm = _norm(_vec(direction), m + 1)
    errs, floors = [], []
    for h in steps:
        vh = _vec(map_fn(_shift(base, direction, h, delta_mono)))
        errs.append(_norm(vh - v0 - h * lin, m))
        floors.append(tol.roundoff_factor * scale)
    threshold = 1.0 + tol.sc1_margin
    rep = _report(name, descriptor + f" |dir|_{{m+1}}={dir_norm:.3e}", "sc1", m, list(steps),
                  errs, floors, tol, expect_pass,
                  lambda slope, emin: slope >= threshold,
                  f"remainder slope >= {threshold:g} (level {m} remainder, level {m + 1} inputs)")
    return rep


def _report(name, descriptor, kind, level, steps, errors, floors, tol, expect_pass,
            rule, criterion) -> ScReport:
    steps_a = np.asarray(steps, dtype=float)
    errs_a = np.asarray(errors, dtype=float)
    keep = errs_a > np.asarray(floors)
    slope = _fit_slope(steps_a[keep], errs_a[keep])
    emin = float(np.min(errs_a)) if errs_a.size else float("nan")
    verdict = bool(np.isfinite(slope) and rule(slope, emin))
    return ScReport(
        map_name=name,
        base_descriptor=descriptor,
        kind=kind,
        level=level,
        steps=[float(s) for s in steps_a],
        errors=[float(e) for e in errs_a],
        fitted_slope=slope,
        verdict=verdict,
        min_error=emin,
        excluded_steps=[float(s) for s in steps_a[~keep]],
        expect_pass=expect_pass,
        criterion=criterion,
    )


def level_norm_profile(z: Loop, k_max: int) -> LevelProfile:
    return level_profile(z, k_max)


# -- seeded generators --------------------------------------------------------

def random_loop(rng: np.random.Generator, n: int, max_mode: int = 5,
                min_mod: float = 0.1) -> Loop:
    """Band-limited loop dominated by one mode, resampled until
    ``min_modulus > min_mod``."""
    while True:
        coeffs = np.zeros(n, dtype=np.complex128)
        m = np.arange(-max_mode, max_mode + 1)
        pert = (rng.normal(size=m.size) + 1j * rng.normal(size=m.size)) * 0.1 / (1.0 + np.abs(m))
        coeffs[m + n // 2] = pert
        lead = int(rng.integers(-1, 3))
        coeffs[lead + n // 2] += np.exp(2j * np.pi * rng.random())
        z = Loop.from_coefficients(coeffs)
        if min_modulus(z) > min_mod:
            return z


def random_loop_direction(rng: np.random.Generator, n: int, max_mode: int = 5) -> Loop:
    coeffs = np.zeros(n, dtype=np.complex128)
    m = np.arange(-max_mode, max_mode + 1)
    coeffs[m + n // 2] = (rng.normal(size=m.size) + 1j * rng.normal(size=m.size)) / (1.0 + np.abs(m))
    z = Loop.from_coefficients(coeffs)
    return z * (1.0 / np.sqrt(np.mean(np.abs(z.samples) ** 2)))


def random_tangent(rng: np.random.Generator, n: int, max_mode: int = 5) -> TangentDiffeo:
    """Band-limited tangent vector scaled so that ``max |psi_hat'| = 1``."""
    t = np.arange(n) / n
    out = rng.normal() * 0.1 * np.ones(n)
    slope = np.zeros(n)
    for k in range(1, max_mode + 1):
        a, b = rng.normal(size=2) / k
        w = 2 * np.pi * k
        out += a * np.cos(w * t) + b * np.sin(w * t)
        slope += w * (b * np.cos(w * t) - a * np.sin(w * t))
    return TangentDiffeo(out / np.max(np.abs(slope)))


def random_diffeo(rng: np.random.Generator, n: int, max_mode: int = 3,
                  max_slope_dev: float = 0.3, delta_mono: float = DELTA_MONO) -> CircleDiffeo:
    """Diffeo ``tau + c + p(tau)`` with ``|p'| <= max_slope_dev``."""
    t = np.arange(n) / n
    p = np.zeros(n)
    dev = 0.0
    for k in range(1, max_mode + 1):
        a, b = rng.normal(size=2) / k ** 2
        p += a * np.sin(2 * np.pi * k * t) + b * np.cos(2 * np.pi * k * t)
        dev += 2 * np.pi * k * np.hypot(a, b)
    p *= max_slope_dev * rng.uniform(0.3, 1.0) / dev
    return CircleDiffeo(t + rng.random() + p, delta_mono)


# -- suites -------------------------------------------------------------------

def _d_time(z, zh):
    return d_time_rescale(z, zh)


def fd_suite(n: int = 64, seed: int = 0, cases: int = 20, level: int = 0,
             corrupt: bool = False, tol: Tolerances = Tolerances(),
             delta_mono: float = DELTA_MONO) -> list[ScReport]:
    """Finite-difference validation of ``DI``, ``Dt``, ``DR`` and ``D^2 I``.

    Each differential gets one corrupted negative control.  With
    ``corrupt=True`` every case uses the corrupted differential and must fail.
    """
    rng = np.random.default_rng(seed)
    bad = tol.corruption
    reports: list[ScReport] = []

    def pick(d):
        return corrupted(d, bad) if corrupt else d

    for i in range(cases):
        psi, ph = random_diffeo(rng, n, delta_mono=delta_mono), random_tangent(rng, n)
        reports.append(check_differential(invert, pick(d_invert), psi, [ph], level=level,
                                          name="d_invert", descriptor=f"seed={seed} case={i}",
                                          tol=tol, expect_pass=not corrupt, delta_mono=delta_mono))
    for i in range(max(cases // 4, 1)):
        z, zh = random_loop(rng, n), random_loop_direction(rng, n)
        reports.append(check_differential(time_rescale, pick(_d_time), z, [zh], level=level,
                                          name="d_time_rescale", descriptor=f"seed={seed} case={i}",
                                          tol=tol, expect_pass=not corrupt, delta_mono=delta_mono))
    for i in range(cases):
        z, zh = random_loop(rng, n), random_loop_direction(rng, n)
        reports.append(check_differential(regularize, pick(d_regularize), z, [zh], level=level,
                                          name="d_regularize", descriptor=f"seed={seed} case={i}",
                                          tol=tol, expect_pass=not corrupt, delta_mono=delta_mono))
    d2 = lambda psi, a, b: d2_invert(psi, a, b)  # noqa: E731
    for i in range(max(cases // 2, 1)):
        psi, h1, h2 = random_diffeo(rng, n, delta_mono=delta_mono), random_tangent(rng, n), random_tangent(rng, n)
        reports.append(check_second_differential(invert, pick(d2), psi, h1, h2, level=level,
                                                 name="d2_invert", descriptor=f"seed={seed} case={i}",
                                                 tol=tol, expect_pass=not corrupt, delta_mono=delta_mono))
    if not corrupt:
        psi, ph = random_diffeo(rng, n, delta_mono=delta_mono), random_tangent(rng, n)
        reports.append(check_differential(invert, corrupted(d_invert, bad), psi, [ph], level=level,
                                          name="d_invert[corrupted]", descriptor=f"seed={seed}",
                                          tol=tol, expect_pass=False, delta_mono=delta_mono))
        z, zh = random_loop(rng, n), random_loop_direction(rng, n)
        reports.append(check_differential(time_rescale, corrupted(_d_time, bad), z, [zh], level=level,
                                          name="d_time_rescale[corrupted]", descriptor=f"seed={seed}",
                                          tol=tol, expect_pass=False, delta_mono=delta_mono))
        reports.append(check_differential(regularize, corrupted(d_regularize, bad), z, [zh], level=level,
                                          name="d_regularize[corrupted]", descriptor=f"seed={seed}",
                                          tol=tol, expect_pass=False, delta_mono=delta_mono))
        psi, h1, h2 = random_diffeo(rng, n, delta_mono=delta_mono), random_tangent(rng, n), random_tangent(rng, n)
        reports.append(check_second_differential(invert, corrupted(d2, bad), psi, h1, h2, level=level,
                                                 name="d2_invert[corrupted]", descriptor=f"seed={seed}",
                                                 tol=tol, expect_pass=False, delta_mono=delta_mono))
    return reports


def _d_square(z, zh):
    return Loop(2.0 * resample_samples(z.samples, 2 * z.n) * resample_samples(zh.samples, 2 * z.n))


def sc1_suite(n: int = 64, seed: int = 0, levels: Sequence[int] = (0, 1), cases: int = 10,
              corrupt: bool = False, tol: Tolerances = Tolerances(),
             delta_mono: float = DELTA_MONO) -> list[ScReport]:
    """Remainder-decay checks for ``R``, inversion and squaring at each level pair
    ``(m, m+1)``, plus corrupted negative controls."""
    rng = np.random.default_rng(seed)
    bad = tol.corruption
    reports: list[ScReport] = []

    def pick(d):
        return corrupted(d, bad) if corrupt else d

    for m in levels:
        for i in range(cases):
            z, zh = random_loop(rng, n), random_loop_direction(rng, n)
            reports.append(sc1_remainder_slope(regularize, pick(d_regularize), z, zh, m,
                                               name="regularize", descriptor=f"seed={seed} case={i}",
                                               tol=tol, expect_pass=not corrupt, delta_mono=delta_mono))
        for i in range(cases):
            psi, ph = random_diffeo(rng, n, delta_mono=delta_mono), random_tangent(rng, n)
            reports.append(sc1_remainder_slope(invert, pick(d_invert), psi, ph, m,
                                               name="invert", descriptor=f"seed={seed} case={i}",
                                               tol=tol, expect_pass=not corrupt, delta_mono=delta_mono))
        z, zh = random_loop(rng, n), random_loop_direction(rng, n)
        reports.append(sc1_remainder_slope(square, pick(_d_square), z, zh, m, SQUARE_STEPS,
                                           name="square", descriptor=f"seed={seed}",
                                           tol=tol, expect_pass=not corrupt, delta_mono=delta_mono))
        if not corrupt:
            z, zh = random_loop(rng, n), random_loop_direction(rng, n)
            reports.append(sc1_remainder_slope(regularize, corrupted(d_regularize, bad), z, zh, m,
                                               name="regularize[corrupted]", descriptor=f"seed={seed}",
                                               tol=tol, expect_pass=False, delta_mono=delta_mono))
            psi, ph = random_diffeo(rng, n, delta_mono=delta_mono), random_tangent(rng, n)
            reports.append(sc1_remainder_slope(invert, corrupted(d_invert, bad), psi, ph, m,
                                               name="invert[corrupted]", descriptor=f"seed={seed}",
                                               tol=tol, expect_pass=False, delta_mono=delta_mono))
            reports.append(sc1_remainder_slope(square, corrupted(_d_square, bad), z, zh, m,
                                               name="square[corrupted]", descriptor=f"seed={seed}",
                                               tol=tol, expect_pass=False, delta_mono=delta_mono))
    return reports


# -- output -------------------------------------------------------------------

def write_reports(reports: Sequence[ScReport], path: str | Path) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in reports], indent=1) + "\n")


def write_series_csv(reports: Sequence[ScReport], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case", "map", "kind", "level", "h", "error"])
        for i, r in enumerate(reports):
            for h, e in zip(r.steps, r.errors):
                writer.writerow([i, r.map_name, r.kind, r.level, repr(h), repr(e)])

