"""The rescale-square regularization ``R(z) = z^2 o tau_z`` and its differential.

``t_z`` reparametrizes the circle with speed ``|z|^2 / |z|_{L^2}^2``;
``tau_z`` is its inverse.  Everything is assembled from the loop and
diffeomorphism primitives, so each factor of the chain rule can be tested on
its own.  Outputs live on the doubled grid ``2n`` where ``|z|^2`` and ``z^2``
are represented without aliasing.
"""

from __future__ import annotations

import numpy as np

from .diffeo import (
    CircleDiffeo,
    TangentDiffeo,
    compose_loop,
    d_invert,
    invert,
)
from .errors import ConfigurationError
from .loop import (
    EPS_COLLISION,
    Loop,
    check_punctured,
    coefficients_of,
    interpolate,
    is_power_of_two,
    modes,
    resample_samples,
    samples_of,
)


def _antiderivative(density: np.ndarray) -> tuple[float, np.ndarray]:
    """Split ``int_0^tau f`` into ``mean * tau + q(tau)`` with ``q`` periodic
    and ``q(0) = 0``.  Returns ``(mean, q samples)``."""
    c = coefficients_of(density)
    mean = float(c[len(c) // 2].real)
    m = modes(len(c))
    c[len(c) // 2] = 0.0
    c[0] = 0.0
    nz = m != 0
    c[nz] /= 2j * np.pi * m[nz]
    q = samples_of(c).real
    return mean, q - q[0]


def _output_grid(z: Loop, n_out: int | None) -> int:
    if n_out is None:
        return 2 * z.n
    if not is_power_of_two(n_out) or n_out < 2 * z.n:
        raise ConfigurationError(f"n_out must be a power of two >= {2 * z.n}, got {n_out!r}")
    return int(n_out)


def _fine(z: Loop, n_out: int) -> np.ndarray:
    return resample_samples(z.samples, n_out)


def time_rescale(z: Loop, eps_collision: float = EPS_COLLISION,
                 n_out: int | None = None) -> CircleDiffeo:
    """``t_z(tau) = int_0^tau |z|^2 / |z|_{L^2}^2`` as a diffeomorphism.

    Sampled on ``n_out`` points (default ``2n``; any power of two ``>= 2n``
    represents ``t_z`` exactly).  The normalisation uses the mean of
    ``|z|^2`` itself, so the lift gains exactly 1 over a period.
    """
    check_punctured(z, eps_collision)
    n_out = _output_grid(z, n_out)
    fz = _fine(z, n_out)
    norm_sq, q = _antiderivative((fz * fz.conj()).real)
    tau = np.arange(n_out) / n_out
    return CircleDiffeo(tau + q / norm_sq, delta_mono=0.0)


def inverse_time(z: Loop, eps_collision: float = EPS_COLLISION,
                 n_out: int | None = None) -> CircleDiffeo:
    return invert(time_rescale(z, eps_collision, n_out), delta_mono=0.0)


def time_residual(z: Loop, eps_collision: float = EPS_COLLISION, n_out: int | None = None) -> float:
    """``max_j |t_z(tau_z(j/m)) - j/m|`` on the output grid."""
    t = time_rescale(z, eps_collision, n_out)
    chi = invert(t, delta_mono=0.0)
    return float(np.max(np.abs(t(chi.lift) - np.arange(t.n) / t.n)))


def regularize(z: Loop, eps_collision: float = EPS_COLLISION, n_out: int | None = None) -> Loop:
    """``R(z) = z^2 o tau_z`` sampled on ``n_out`` points (default ``2n``).

    ``z^2`` is exact on the output grid, but ``R(z)`` is not band-limited:
    when ``min |z|`` is small relative to ``|z|_{L^2}`` its spectrum decays
    slowly and off-grid interpolation needs a larger ``n_out``.
    """
    check_punctured(z, eps_collision)
    n_out = _output_grid(z, n_out)
    w = Loop(_fine(z, n_out) ** 2)
    return compose_loop(w, inverse_time(z, eps_collision, n_out), eps_collision=None)


def _check_tangent(z: Loop, z_hat: Loop) -> None:
    if z_hat.n != z.n:
        raise ConfigurationError(f"tangent grid {z_hat.n} does not match loop grid {z.n}")


def d_time_rescale(z: Loop, z_hat: Loop, eps_collision: float = EPS_COLLISION,
                   n_out: int | None = None) -> TangentDiffeo:
    """Differential of ``z -> t_z`` along ``z_hat``.

    With ``g = 2 Re(conj(z) z_hat)``, ``N = |z|_{L^2}^2`` and ``I(tau) =
    int_0^tau |z|^2``::

        Dt(tau) = (1/N) int_0^tau g - I(tau)/N^2 int_0^1 g

    which vanishes at both ends of the period.
    """
    check_punctured(z, eps_collision)
    _check_tangent(z, z_hat)
    n_out = _output_grid(z, n_out)
    fz, fh = _fine(z, n_out), _fine(z_hat, n_out)
    norm_sq, q = _antiderivative((fz * fz.conj()).real)
    g_mean, qg = _antiderivative(2.0 * (fz.conj() * fh).real)
    return TangentDiffeo((qg - (g_mean / norm_sq) * q) / norm_sq)


def d_regularize(z: Loop, z_hat: Loop, eps_collision: float = EPS_COLLISION,
                 n_out: int | None = None) -> Loop:
    """Differential of ``R`` at ``z`` along ``z_hat`` via the chain rule.

    ``DR = (2 z z_hat) o psi + (w' o psi) * DI(t_z)[Dt(z_hat)]`` with
    ``w = z^2`` and ``psi = tau_z``.
    """
    check_punctured(z, eps_collision)
    _check_tangent(z, z_hat)
    n_out = _output_grid(z, n_out)
    fz = _fine(z, n_out)
    w = Loop(fz * fz)
    w_hat = Loop(2.0 * fz * _fine(z_hat, n_out))
    t = time_rescale(z, eps_collision, n_out)
    psi = invert(t, delta_mono=0.0)
    psi_hat = d_invert(t, d_time_rescale(z, z_hat, eps_collision, n_out), inverse=psi)
    dw = interpolate(w.samples, psi.lift, 1, coeffs=w.coefficients)
    moved = interpolate(w_hat.samples, psi.lift, coeffs=w_hat.coefficients)
    return Loop(moved + dw * psi_hat.samples)
