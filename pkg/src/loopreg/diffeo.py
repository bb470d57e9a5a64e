"""Orientation-preserving circle diffeomorphisms and their action on loops.

A diffeomorphism is stored through its degree-one lift ``phi(tau) = tau +
p(tau)`` sampled on a uniform grid; the periodic part ``p`` is interpolated
with the same trigonometric machinery as loops.
"""

from __future__ import annotations

import json
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from . import kernels
from .errors import ConfigurationError, ConvergenceError, NotADiffeomorphismError
from .loop import (
    EPS_COLLISION,
    Loop,
    check_grid,
    check_punctured,
    coefficients_of,
    interpolate,
    is_power_of_two,
    sobolev_norm_coefficients,
    symmetric_coefficients,
)

DELTA_MONO = 1e-6
INVERT_TOL = 1e-13
INVERT_MAXITER = 50


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class TangentDiffeo:
    """A periodic real function on the grid, i.e. a tangent vector to the group."""

    def __init__(self, samples):
        arr = np.array(samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ConfigurationError("tangent samples must be one-dimensional")
        check_grid(arr.size)
        self.samples = _frozen(arr)

    @property
    def n(self) -> int:
        return self.samples.size

    @cached_property
    def coefficients(self) -> np.ndarray:
        return _frozen(coefficients_of(self.samples))

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], n: int) -> TangentDiffeo:
        check_grid(n)
        return cls(f(np.arange(n) / n))

    def __call__(self, t, order: int = 0):
        return interpolate(self.samples, t, order, coeffs=self.coefficients)

    def sobolev_norm(self, k: int) -> float:
        return sobolev_norm_coefficients(self.coefficients, k)

    def __add__(self, other: TangentDiffeo) -> TangentDiffeo:
        return TangentDiffeo(self.samples + other.samples)

    def __sub__(self, other: TangentDiffeo) -> TangentDiffeo:
        return TangentDiffeo(self.samples - other.samples)

    def __mul__(self, c: float) -> TangentDiffeo:
        return TangentDiffeo(self.samples * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> TangentDiffeo:
        return TangentDiffeo(-self.samples)

    def __repr__(self) -> str:
        return f"TangentDiffeo(n={self.n})"


class CircleDiffeo:
    """Circle diffeomorphism given by lift samples ``phi(j/n)``.

    Construction validates strict monotonicity: the slope of the
    interpolated lift must exceed ``delta_mono`` on the 4n-refined grid.
    """

    def __init__(self, lift, delta_mono: float = DELTA_MONO):
        arr = np.array(lift, dtype=np.float64)
        if arr.ndim != 1:
            raise ConfigurationError("lift samples must be one-dimensional")
        check_grid(arr.size)
        if not np.all(np.isfinite(arr)):
            raise NotADiffeomorphismError("lift contains non-finite values")
        self.lift = _frozen(arr)
        slope = self.min_slope()
        if not slope > delta_mono:
            raise NotADiffeomorphismError(
                f"lift is not strictly increasing: min slope {slope:.3e} <= delta_mono {delta_mono:.1e}"
            )

    @property
    def n(self) -> int:
        return self.lift.size

    @cached_property
    def periodic(self) -> np.ndarray:
        return _frozen(self.lift - np.arange(self.n) / self.n)

    @cached_property
    def coefficients(self) -> np.ndarray:
        """Fourier coefficients of the periodic part ``phi(tau) - tau``."""
        return _frozen(coefficients_of(self.periodic))

    def __call__(self, t):
        """Lift evaluated at real ``t`` (no reduction mod 1)."""
        t = np.asarray(t, dtype=np.float64)
        out = t + interpolate(self.periodic, t, coeffs=self.coefficients)
        return float(out) if out.ndim == 0 else out

    def slope(self, t):
        """Derivative of the lift at ``t``."""
        return 1.0 + interpolate(self.periodic, t, 1, coeffs=self.coefficients)

    def curvature(self, t):
        """Second derivative of the lift at ``t``."""
        return interpolate(self.periodic, t, 2, coeffs=self.coefficients)

    def min_slope(self) -> float:
        t = np.arange(4 * self.n) / (4 * self.n)
        return float(np.min(self.slope(t)))

    def perturb(self, direction: TangentDiffeo, h: float, delta_mono: float = DELTA_MONO) -> CircleDiffeo:
        if direction.n != self.n:
            raise ConfigurationError(f"grid mismatch: {self.n} vs {direction.n}")
        return CircleDiffeo(self.lift + h * direction.samples, delta_mono)

    def __sub__(self, other: CircleDiffeo) -> TangentDiffeo:
        """Difference of lifts; a periodic function."""
        return TangentDiffeo(self.lift - other.lift)

    def __repr__(self) -> str:
        return f"CircleDiffeo(n={self.n})"


def make_diffeo(lift_samples, delta_mono: float = DELTA_MONO) -> CircleDiffeo:
    arr = np.asarray(lift_samples, dtype=np.float64)
    if not is_power_of_two(arr.size):
        raise ConfigurationError(f"lift length must be a power of two, got {arr.size}")
    return CircleDiffeo(arr, delta_mono)


def identity(n: int) -> CircleDiffeo:
    check_grid(n)
    return CircleDiffeo(np.arange(n) / n)


def rotation(shift: float, n: int) -> CircleDiffeo:
    """The rotation ``tau -> tau + shift``."""
    check_grid(n)
    return CircleDiffeo(np.arange(n) / n + shift)


def diffeo_from_function(f: Callable[[np.ndarray], np.ndarray], n: int,
                         delta_mono: float = DELTA_MONO) -> CircleDiffeo:
    check_grid(n)
    return CircleDiffeo(f(np.arange(n) / n), delta_mono)


def compose_loop(z: Loop, psi: CircleDiffeo, eps_collision: float | None = EPS_COLLISION) -> Loop:
    """Reparametrize ``z`` by ``psi``: samples ``z(psi(j/n))`` on psi's grid.

    ``eps_collision=None`` skips the collision guard (for tangent loops).
    """
    if eps_collision is not None:
        check_punctured(z, eps_collision)
    return Loop(interpolate(z.samples, psi.lift, coeffs=z.coefficients))


def compose_diffeo(psi: CircleDiffeo, phi: CircleDiffeo, delta_mono: float = DELTA_MONO) -> CircleDiffeo:
    """``psi o phi`` on phi's grid."""
    return CircleDiffeo(psi(phi.lift), delta_mono)


def _brackets(psi: CircleDiffeo, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = psi.n
    ext = np.append(psi.lift, psi.lift[0] + 1.0)
    shift = np.floor(targets - psi.lift[0])
    reduced = targets - shift
    idx = np.clip(np.searchsorted(ext, reduced, side="right") - 1, 0, n - 1)
    return idx / n + shift, (idx + 1) / n + shift


def invert(psi: CircleDiffeo, tol: float = INVERT_TOL, maxiter: int = INVERT_MAXITER,
           delta_mono: float = DELTA_MONO) -> CircleDiffeo:
    """Inverse diffeomorphism, solving ``psi(chi_j) = j/n`` at every grid point.

    Each target is bracketed by the monotone grid samples and finished with
    safeguarded Newton on the interpolated lift.
    """
    n = psi.n
    targets = np.arange(n) / n
    lo, hi = _brackets(psi, targets)
    roots, ok = kernels.invert_monotone(
        symmetric_coefficients(psi.coefficients),
        symmetric_coefficients(psi.coefficients, 1),
        targets, lo, hi, tol, maxiter,
    )
    if not np.all(ok):
        bad = int(np.count_nonzero(~ok))
        raise ConvergenceError(f"inversion failed to converge at {bad} of {n} grid points")
    return CircleDiffeo(roots, delta_mono)


def _same_grid(psi: CircleDiffeo, inverse: CircleDiffeo | None) -> CircleDiffeo:
    if inverse is None:
        return invert(psi)
    if inverse.n != psi.n:
        raise ConfigurationError(f"grid mismatch: {psi.n} vs {inverse.n}")
    return inverse


def d_invert(psi: CircleDiffeo, psi_hat: TangentDiffeo,
             inverse: CircleDiffeo | None = None) -> TangentDiffeo:
    """First differential of inversion: ``-(psi_hat o chi) / (psi' o chi)``."""
    chi = _same_grid(psi, inverse).lift
    return TangentDiffeo(-psi_hat(chi) / psi.slope(chi))


def d2_invert(psi: CircleDiffeo, psi_hat1: TangentDiffeo, psi_hat2: TangentDiffeo,
              inverse: CircleDiffeo | None = None) -> TangentDiffeo:
    """Second differential of inversion at ``psi`` along two tangent vectors.

    With ``chi = psi^-1`` and ``a = 1/(psi' o chi)``::

        a^2 (h2' h1 + h1' h2) - a^3 (psi'' o chi) h1 h2

    where every ``h`` is evaluated at ``chi``.
    """
    chi = _same_grid(psi, inverse).lift
    a = 1.0 / psi.slope(chi)
    u1, u2 = psi_hat1(chi), psi_hat2(chi)
    v1, v2 = psi_hat1(chi, 1), psi_hat2(chi, 1)
    return TangentDiffeo(a * a * (v2 * u1 + v1 * u2) - a ** 3 * psi.curvature(chi) * (u1 * u2))


# -- file format ------------------------------------------------------------

def diffeo_from_json(data: dict, delta_mono: float = DELTA_MONO) -> CircleDiffeo:
    try:
        n = data["n"]
        lift = [float(v) for v in data["lift"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed diffeo file: {exc}") from exc
    if not is_power_of_two(n):
        raise ConfigurationError(f"n must be a power of two, got {n!r}")
    if len(lift) != n:
        raise ConfigurationError(f"expected {n} lift values, got {len(lift)}")
    if not 0.0 <= lift[0] < 1.0:
        raise ConfigurationError(f"lift[0] must lie in [0, 1), got {lift[0]}")
    return make_diffeo(lift, delta_mono)


def diffeo_to_json(psi: CircleDiffeo) -> dict:
    lift = psi.lift - np.floor(psi.lift[0])
    return {"n": psi.n, "lift": [float(v) for v in lift]}


def load_diffeo(path: str | Path, delta_mono: float = DELTA_MONO) -> CircleDiffeo:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a JSON object")
    return diffeo_from_json(data, delta_mono)


def save_diffeo(psi: CircleDiffeo, path: str | Path) -> None:
    Path(path).write_text(json.dumps(diffeo_to_json(psi)) + "\n")
