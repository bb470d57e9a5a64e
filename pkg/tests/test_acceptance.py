"""Acceptance checks for the package, one test per criterion.

Each test records a one-line PASS/FAIL summary before asserting; the lines are
printed in the pytest terminal summary, or directly when this file is run as a
script.
"""
import numpy as np
import pytest

from loopreg.bov import d_regularize, d_time_rescale, regularize, time_rescale, time_residual
from loopreg.diffeo import (
    TangentDiffeo,
    compose_diffeo,
    compose_loop,
    d2_invert,
    d_invert,
    identity,
    invert,
    rotation,
)
from loopreg.loop import Loop, evaluate, level_profile, winding_number
from loopreg.verify import (
    SQUARE_STEPS,
    _d_square,
    check_differential,
    check_second_differential,
    fd_suite,
    random_diffeo,
    random_loop,
    random_loop_direction,
    random_tangent,
    sc1_remainder_slope,
    sc1_suite,
)
from loopreg.loop import square

SUMMARY: dict[int, str] = {}


def record(index: int, label: str, ok: bool, detail: str) -> None:
    SUMMARY[index] = f"[{'PASS' if ok else 'FAIL'}] {index:2d} {label}: {detail}"
    assert ok, SUMMARY[index]


def closed_form_t(tau):
    return tau + np.sin(2 * np.pi * tau) / (2.5 * np.pi)


def test_golden_time_rescale():
    t = time_rescale(Loop.from_modes({0: 1.0, 1: 0.5}, 64))
    tau = np.linspace(0.0, 1.0, 1000)
    err = np.max(np.abs(t(tau) - closed_form_t(tau)))
    record(1, "golden time rescale", err <= 1e-10, f"max error {err:.2e} (bound 1e-10)")


def test_golden_regularize():
    r = regularize(Loop.from_modes({1: 1.0}, 64))
    t = np.linspace(0.0, 1.0, 1000)
    err_mode = max(np.max(np.abs(r.samples - np.exp(4j * np.pi * r.grid()))),
                   np.max(np.abs(evaluate(r, t) - np.exp(4j * np.pi * t))))
    err_const = 0.0
    for c in [2.0, -1.5 + 0.5j, 1e-3j, 7.0 - 3.0j]:
        err_const = max(err_const, np.max(np.abs(regularize(Loop(np.full(8, c))).samples - c * c)) / abs(c * c))
    ok = err_mode <= 1e-10 and err_const <= 1e-12
    record(2, "golden regularize", ok,
           f"single mode {err_mode:.2e} (bound 1e-10), constants rel {err_const:.2e} (bound 1e-12)")


def test_inversion_residual():
    rng = np.random.default_rng(101)
    worst = max(time_residual(random_loop(rng, 64)) for _ in range(50))
    record(3, "time rescale inversion residual", worst <= 1e-12,
           f"worst over 50 loops {worst:.2e} (bound 1e-12)")


def test_first_differential_of_inversion():
    rng = np.random.default_rng(202)
    reps = [check_differential(invert, d_invert, random_diffeo(rng, 64), [random_tangent(rng, 64)])
            for _ in range(20)]
    slopes = [r.fitted_slope for r in reps]
    errs = [r.min_error for r in reps]
    ph = TangentDiffeo.from_function(lambda s: 0.2 * np.sin(2 * np.pi * s) - 0.1 * np.cos(8 * np.pi * s), 64)
    at_id = np.max(np.abs(d_invert(identity(64), ph).samples + ph.samples))
    ok = all(r.verdict for r in reps) and at_id <= 1e-15
    record(4, "inversion differential", ok,
           f"20 pairs, slopes [{min(slopes):.3f}, {max(slopes):.3f}] (range [1.8, 2.2]), "
           f"worst rel error {max(errs):.2e} (bound 1e-6), identity error {at_id:.1e}")


def test_second_differential_of_inversion():
    rng = np.random.default_rng(303)
    reps = []
    for _ in range(10):
        psi, h1, h2 = random_diffeo(rng, 64), random_tangent(rng, 64), random_tangent(rng, 64)
        reps.append(check_second_differential(invert, d2_invert, psi, h1, h2))
    worst_fd = max(r.min_error for r in reps)

    h1, h2 = random_tangent(rng, 64), random_tangent(rng, 64)
    grid = np.arange(64) / 64
    expected = h2(grid, 1) * h1.samples + h1(grid, 1) * h2.samples
    at_id = np.max(np.abs(d2_invert(identity(64), h1, h2).samples - expected))

    sym = 0.0
    for _ in range(5):
        psi, a, b = random_diffeo(rng, 64), random_tangent(rng, 64), random_tangent(rng, 64)
        sym = max(sym, np.max(np.abs(d2_invert(psi, a, b).samples - d2_invert(psi, b, a).samples)))
    ok = all(r.min_error <= 1e-4 for r in reps) and at_id <= 1e-12 and sym <= 1e-12
    record(5, "second differential of inversion", ok,
           f"10 triples worst nested-FD rel error {worst_fd:.2e} (bound 1e-4), "
           f"identity error {at_id:.1e}, swap asymmetry {sym:.1e} (bound 1e-12)")


def test_regularize_differential():
    rng = np.random.default_rng(404)
    reps = [check_differential(regularize, d_regularize, random_loop(rng, 64), [random_loop_direction(rng, 64)])
            for _ in range(20)]
    worst = max(r.min_error for r in reps)
    dt = 0.0
    for _ in range(5):
        z = random_loop(rng, 64)
        dt = max(dt, np.max(np.abs(d_time_rescale(z, z).samples)),
                 np.max(np.abs(d_time_rescale(z, 1j * z).samples)))
    ok = all(r.verdict for r in reps) and worst <= 1e-6 and dt <= 1e-12
    record(6, "regularize differential", ok,
           f"20 pairs worst rel error {worst:.2e} (bound 1e-6), "
           f"time differential along z and iz {dt:.1e}")


def test_sc1_remainders():
    rng = np.random.default_rng(505)
    low = {}
    for m in (0, 1):
        for name, gen, fn, dfn in [
            ("regularize", lambda: (random_loop(rng, 64), random_loop_direction(rng, 64)), regularize, d_regularize),
            ("invert", lambda: (random_diffeo(rng, 64), random_tangent(rng, 64)), invert, d_invert),
        ]:
            slopes = []
            for _ in range(10):
                base, direction = gen()
                slopes.append(sc1_remainder_slope(fn, dfn, base, direction, m).fitted_slope)
            low[(name, m)] = min(slopes)
    sq = []
    for m in (0, 1):
        z, zh = random_loop(rng, 64), random_loop_direction(rng, 64)
        sq.append(sc1_remainder_slope(square, _d_square, z, zh, m, SQUARE_STEPS).fitted_slope)
    sq_dev = max(abs(s - 2.0) for s in sq)
    ok = all(v >= 1.5 for v in low.values()) and sq_dev <= 1e-6
    detail = ", ".join(f"{k[0]} m={k[1]} min {v:.3f}" for k, v in low.items())
    record(7, "sc1 remainder decay", ok, f"{detail} (bound 1.5); square slope deviation {sq_dev:.1e}")


def test_equivariances():
    rng = np.random.default_rng(606)
    sign_exact, scale_err, winding_ok = True, 0.0, True
    for _ in range(20):
        z = random_loop(rng, 64)
        r = regularize(z)
        sign_exact &= bool(np.array_equal(regularize(-z).samples, r.samples))
        c = complex(*rng.normal(size=2))
        scale_err = max(scale_err, np.max(np.abs(regularize(c * z).samples - c * c * r.samples)) / abs(c * c))
        winding_ok &= winding_number(r) == 2 * winding_number(z)
    shift_err = 0.0
    for _ in range(3):
        z, s = random_loop(rng, 64), float(rng.random())
        lhs = regularize(compose_loop(z, rotation(s, 64)), n_out=1024)
        rhs = evaluate(regularize(z, n_out=1024), lhs.grid() + time_rescale(z)(s))
        shift_err = max(shift_err, np.max(np.abs(lhs.samples - rhs)))
    ok = sign_exact and scale_err <= 1e-10 and shift_err <= 1e-9 and winding_ok
    record(8, "equivariances", ok,
           f"sign {'exact' if sign_exact else 'broken'}, scaling {scale_err:.1e} (bound 1e-10), "
           f"time shift {shift_err:.1e} (bound 1e-9), winding doubling {'exact' if winding_ok else 'broken'}")


def test_structural():
    rng = np.random.default_rng(707)
    parseval, monotone = 0.0, True
    for _ in range(50):
        z = random_loop(rng, 64)
        energy = np.mean(np.abs(z.samples) ** 2)
        parseval = max(parseval, abs(np.sum(np.abs(z.coefficients) ** 2) - energy) / energy)
        monotone &= bool(np.all(np.diff(level_profile(z, 4).norms) >= 0))
    involution = 0.0
    for _ in range(10):
        psi = random_diffeo(rng, 128)
        involution = max(involution, np.max(np.abs(invert(invert(psi)).lift - psi.lift)))
        involution = max(involution, np.max(np.abs(compose_diffeo(psi, invert(psi)).lift - identity(128).lift)))
    ok = parseval <= 1e-12 and monotone and involution <= 1e-10
    record(9, "structural identities", ok,
           f"Parseval {parseval:.1e} (bound 1e-12), level monotonicity {'holds' if monotone else 'broken'}, "
           f"involution {involution:.1e} (bound 1e-10)")


def test_negative_controls():
    honest = fd_suite(n=64, seed=808, cases=4) + sc1_suite(n=64, seed=808, levels=(0, 1), cases=2)
    controls = [r for r in honest if not r.expect_pass]
    corrupt = fd_suite(n=64, seed=809, cases=4, corrupt=True) + sc1_suite(n=64, seed=809, cases=2, corrupt=True)
    detected = sum(not r.verdict for r in controls + corrupt)
    total = len(controls) + len(corrupt)
    ok = detected == total and all(r.ok for r in honest)
    record(10, "negative controls", ok, f"{detected}/{total} corrupted differentials rejected")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    for _, line in sorted(SUMMARY.items()):
        print(line)
    sys.exit(1 if failed else 0)
