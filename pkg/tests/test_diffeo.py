import numpy as np
import pytest

from loopreg.diffeo import (
    CircleDiffeo,
    TangentDiffeo,
    compose_diffeo,
    compose_loop,
    d2_invert,
    d_invert,
    diffeo_from_function,
    diffeo_from_json,
    diffeo_to_json,
    identity,
    invert,
    load_diffeo,
    make_diffeo,
    rotation,
    save_diffeo,
)
from loopreg.errors import CollisionError, ConfigurationError, NotADiffeomorphismError
from loopreg.loop import Loop, winding_number
from loopreg.verify import random_diffeo, random_loop, random_tangent

TWO_PI = 2 * np.pi


def wobble(n, amp=0.1):
    return diffeo_from_function(lambda t: t + amp * np.sin(TWO_PI * t), n)


def bisect(f, targets, lo=-1.0, hi=2.0):
    a, b = np.full_like(targets, lo), np.full_like(targets, hi)
    for _ in range(100):
        mid = 0.5 * (a + b)
        below = f(mid) < targets
        a, b = np.where(below, mid, a), np.where(below, b, mid)
    return 0.5 * (a + b)


def wobble_inverse(n, amp=0.1):
    """Bisection oracle on the closed-form lift."""
    return bisect(lambda x: x + amp * np.sin(TWO_PI * x), np.arange(n) / n)


def cos_tangent(n, k=1):
    return TangentDiffeo.from_function(lambda t: np.cos(TWO_PI * k * t), n)


# -- construction ------------------------------------------------------------------

def test_identity_diffeo():
    psi = make_diffeo(np.arange(8) / 8)
    assert np.array_equal(psi.periodic, np.zeros(8))
    assert psi.min_slope() == pytest.approx(1.0)


def test_small_wobble_valid():
    assert wobble(32).min_slope() >= 1 - 0.2 * np.pi - 1e-12


def test_large_wobble_rejected():
    with pytest.raises(NotADiffeomorphismError):
        wobble(32, amp=0.2)


def test_rejects_non_power_of_two():
    with pytest.raises(ConfigurationError):
        make_diffeo(np.arange(12) / 12)


def test_delta_mono_floor_is_configurable():
    psi = diffeo_from_function(lambda t: t + 0.15 * np.sin(TWO_PI * t), 32)
    slope = 1 - 0.3 * np.pi
    with pytest.raises(NotADiffeomorphismError):
        CircleDiffeo(psi.lift, delta_mono=slope + 0.01)
    CircleDiffeo(psi.lift, delta_mono=slope - 0.01)


# -- compose_loop -----------------------------------------------------------------

def test_compose_with_identity():
    z = Loop.from_modes({0: 1.0, 1: 0.5, -2: 0.1j}, 32)
    np.testing.assert_allclose(compose_loop(z, identity(32)).samples, z.samples, atol=1e-12)


def test_compose_with_rotation():
    z = Loop.from_modes({1: 1.0}, 32)
    c = 0.137
    expected = np.exp(TWO_PI * 1j * c) * np.exp(TWO_PI * 1j * z.grid())
    np.testing.assert_allclose(compose_loop(z, rotation(c, 32)).samples, expected, atol=1e-12)


def test_compose_closed_form_sample():
    z = Loop.from_modes({0: 1.0, 1: 0.5}, 32)
    w = compose_loop(z, wobble(32))
    expected = 1 + 0.5 * np.exp(TWO_PI * 1j * (0.25 + 0.1))
    assert abs(w.samples[8] - expected) <= 1e-10


def test_compose_guards_collision():
    z = Loop.from_modes({0: -1.0, 1: 1.0}, 16)
    with pytest.raises(CollisionError):
        compose_loop(z, identity(16))
    compose_loop(z, identity(16), eps_collision=None)


def test_reparametrization_preserves_winding():
    rng = np.random.default_rng(11)
    for _ in range(10):
        z, psi = random_loop(rng, 64), random_diffeo(rng, 64)
        assert winding_number(compose_loop(z, psi)) == winding_number(z)


# -- compose_diffeo / invert ------------------------------------------------------

def test_compose_with_identity_diffeo():
    psi = wobble(32)
    np.testing.assert_allclose(compose_diffeo(psi, identity(32)).lift, psi.lift, atol=1e-15)


def test_shifts_compose_additively():
    out = compose_diffeo(rotation(0.2, 16), rotation(0.45, 16))
    np.testing.assert_allclose(out.lift, np.arange(16) / 16 + 0.65, atol=1e-15)


def test_compose_with_inverse_is_identity():
    psi = wobble(128)
    grid = np.arange(128) / 128
    np.testing.assert_allclose(compose_diffeo(psi, invert(psi)).lift, grid, atol=1e-10)
    np.testing.assert_allclose(compose_diffeo(invert(psi), psi).lift, grid, atol=1e-10)


def test_invert_identity():
    np.testing.assert_allclose(invert(identity(16)).lift, np.arange(16) / 16, atol=1e-15)


def test_invert_rotation():
    np.testing.assert_allclose(invert(rotation(0.3, 16)).lift, np.arange(16) / 16 - 0.3, atol=1e-15)


def test_invert_wobble_residual_and_oracle():
    psi = wobble(64)
    chi = invert(psi)
    grid = np.arange(64) / 64
    assert np.max(np.abs(psi(chi.lift) - grid)) <= 1e-12
    np.testing.assert_allclose(chi.lift, wobble_inverse(64), atol=1e-12)


def test_involution_random():
    rng = np.random.default_rng(3)
    for _ in range(20):
        psi = random_diffeo(rng, 128)
        assert np.max(np.abs(invert(invert(psi)).lift - psi.lift)) <= 1e-10


# -- differentials --------------------------------------------------------------

def test_d_invert_at_identity():
    ph = TangentDiffeo.from_function(lambda t: np.sin(TWO_PI * t) + 0.3 * np.cos(6 * np.pi * t), 32)
    np.testing.assert_allclose(d_invert(identity(32), ph).samples, -ph.samples, atol=1e-12)


def test_d_invert_at_rotation():
    c = 0.21
    ph = cos_tangent(32, 2)
    expected = -np.cos(2 * TWO_PI * (np.arange(32) / 32 - c))
    np.testing.assert_allclose(d_invert(rotation(c, 32), ph).samples, expected, atol=1e-12)


def test_d_invert_closed_form_oracle():
    # -psi_hat(chi) / psi'(chi) with chi from bisection on the closed-form lift
    chi = wobble_inverse(64)
    expected = -np.cos(TWO_PI * chi) / (1 + 0.2 * np.pi * np.cos(TWO_PI * chi))
    np.testing.assert_allclose(d_invert(wobble(64), cos_tangent(64)).samples, expected, atol=1e-12)


def test_d_invert_matches_central_differences():
    psi, ph = wobble(64), cos_tangent(64)
    exact = d_invert(psi, ph).samples
    errs = []
    for h in 10.0 ** -np.arange(2, 6.1, 0.5):
        fd = (invert(psi.perturb(ph, h)) - invert(psi.perturb(ph, -h))).samples / (2 * h)
        errs.append(np.max(np.abs(fd - exact)) / np.max(np.abs(exact)))
    assert min(errs) <= 1e-6


def test_d2_invert_at_identity():
    n = 32
    t = np.arange(n) / n
    h1 = TangentDiffeo(np.sin(TWO_PI * t))
    h2 = TangentDiffeo(np.cos(2 * TWO_PI * t))
    expected = (-2 * TWO_PI * np.sin(2 * TWO_PI * t)) * np.sin(TWO_PI * t) \
        + TWO_PI * np.cos(TWO_PI * t) * np.cos(2 * TWO_PI * t)
    np.testing.assert_allclose(d2_invert(identity(n), h1, h2).samples, expected, atol=1e-11)


def test_d2_invert_symmetric():
    rng = np.random.default_rng(5)
    psi, h1, h2 = random_diffeo(rng, 64), random_tangent(rng, 64), random_tangent(rng, 64)
    a = d2_invert(psi, h1, h2).samples
    b = d2_invert(psi, h2, h1).samples
    assert np.max(np.abs(a - b)) <= 1e-12


def test_d2_invert_closed_form_oracle():
    chi = wobble_inverse(64)
    a = 1 / (1 + 0.2 * np.pi * np.cos(TWO_PI * chi))
    curv = -0.1 * TWO_PI ** 2 * np.sin(TWO_PI * chi)
    u1, v1 = np.cos(TWO_PI * chi), -TWO_PI * np.sin(TWO_PI * chi)
    u2, v2 = np.sin(2 * TWO_PI * chi), 2 * TWO_PI * np.cos(2 * TWO_PI * chi)
    expected = a ** 2 * v2 * u1 - a ** 3 * curv * u2 * u1 + a ** 2 * v1 * u2
    h2 = TangentDiffeo.from_function(lambda t: np.sin(2 * TWO_PI * t), 64)
    np.testing.assert_allclose(d2_invert(wobble(64), cos_tangent(64), h2).samples, expected, atol=1e-10)


def test_d2_invert_matches_nested_differences():
    psi, h1 = wobble(128), cos_tangent(128)
    h2 = TangentDiffeo.from_function(lambda t: 0.1 * np.sin(2 * TWO_PI * t), 128)
    exact = d2_invert(psi, h1, h2).samples
    errs = []
    for h in [1e-2, 1e-3, 3e-4, 1e-4]:
        def at(s1, s2):
            return invert(psi.perturb(h1, s1 * h).perturb(h2, s2 * h)).lift
        fd = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h)
        errs.append(np.max(np.abs(fd - exact)) / np.max(np.abs(exact)))
    assert min(errs) <= 1e-4


def test_d_invert_fd_order_randomized():
    rng = np.random.default_rng(17)
    steps = np.array([1e-2, 10 ** -2.5, 1e-3, 10 ** -3.5])
    for _ in range(8):
        psi, ph = random_diffeo(rng, 64), random_tangent(rng, 64)
        exact = d_invert(psi, ph).samples
        errs = [np.max(np.abs((invert(psi.perturb(ph, h)) - invert(psi.perturb(ph, -h))).samples / (2 * h) - exact))
                for h in steps]
        slope = np.polyfit(np.log(steps), np.log(errs), 1)[0]
        assert 1.8 <= slope <= 2.2


@pytest.mark.parametrize("k", [0, 1])
def test_d2_invert_level_loss_probe(k):
    """|D^2 I(h1, h2)|_k / (|h1|_{k+1} |h2|_{k+1}) stays bounded and does not
    grow under grid refinement."""
    rng = np.random.default_rng(23 + k)
    for _ in range(5):
        psi, h1, h2 = random_diffeo(rng, 64), random_tangent(rng, 64), random_tangent(rng, 64)
        ratios = []
        for n in [64, 128, 256]:
            up = lambda v: np.fft.irfft(np.fft.rfft(v), n) * n / len(v)  # noqa: E731
            p = CircleDiffeo(np.arange(n) / n + up(psi.periodic))
            a, b = TangentDiffeo(up(h1.samples)), TangentDiffeo(up(h2.samples))
            ratios.append(d2_invert(p, a, b).sobolev_norm(k) / (a.sobolev_norm(k + 1) * b.sobolev_norm(k + 1)))
        assert np.isfinite(ratios).all()
        assert max(ratios) < 1.0
        assert ratios[-1] <= ratios[0] * (1 + 1e-6)


# -- file format ------------------------------------------------------------------

def test_diffeo_json_round_trip(tmp_path):
    psi = compose_diffeo(rotation(1.3, 32), wobble(32))
    save_diffeo(psi, tmp_path / "psi.json")
    data = diffeo_to_json(psi)
    assert 0.0 <= data["lift"][0] < 1.0
    back = load_diffeo(tmp_path / "psi.json")
    np.testing.assert_allclose(back.lift, psi.lift - 1.0, atol=1e-15)


@pytest.mark.parametrize("data", [
    {"n": 8, "lift": list(np.arange(7) / 8)},
    {"n": 12, "lift": list(np.arange(12) / 12)},
    {"n": 8, "lift": list(np.arange(8) / 8 + 1.5)},
    {"n": 8},
])
def test_diffeo_json_rejects_malformed(data):
    with pytest.raises(ConfigurationError):
        diffeo_from_json(data)


def test_diffeo_json_rejects_non_monotone():
    lift = list(np.arange(8) / 8 + 0.2 * np.sin(TWO_PI * np.arange(8) / 8) + 0.3)
    with pytest.raises(NotADiffeomorphismError):
        diffeo_from_json({"n": 8, "lift": lift})
