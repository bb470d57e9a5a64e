"""Discretized loops S^1 -> C.

A :class:`Loop` stores samples ``z(j/n)`` on a uniform power-of-two grid and
caches its Fourier coefficients ``c_m``, ``m = -n/2 .. n/2-1``, normalised so
that ``z(t) = sum_m c_m exp(2 pi i m t)``.  The Nyquist mode is split evenly
between ``-n/2`` and ``+n/2`` whenever the interpolant is evaluated off the
grid, which keeps real data real.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from . import kernels
from .errors import CollisionError, ConfigurationError, ResolutionError

EPS_COLLISION = 1e-8
MIN_GRID = 8
TWO_PI = 2.0 * np.pi


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


def check_grid(n: int, minimum: int = MIN_GRID) -> int:
    if not is_power_of_two(n) or n < minimum:
        raise ConfigurationError(f"grid size must be a power of two >= {minimum}, got {n!r}")
    return int(n)


def modes(n: int) -> np.ndarray:
    """Mode numbers ``-n/2 .. n/2-1`` in storage order."""
    return np.arange(-(n // 2), n // 2)


# -- spectral helpers shared with the diffeomorphism module -----------------

def coefficients_of(samples: np.ndarray) -> np.ndarray:
    n = samples.shape[-1]
    return np.fft.fftshift(np.fft.fft(samples) / n)


def samples_of(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[-1]
    return np.fft.ifft(np.fft.ifftshift(coeffs)) * n


def symmetric_coefficients(coeffs: np.ndarray, order: int = 0) -> np.ndarray:
    """Length ``n+1`` coefficients for ``m = -n/2 .. n/2`` with the Nyquist
    mode split, multiplied by ``(2 pi i m)**order``."""
    n = coeffs.shape[-1]
    sym = np.empty(n + 1, dtype=np.complex128)
    sym[:n] = coeffs
    sym[0] *= 0.5
    sym[n] = sym[0]
    if order:
        m = np.arange(-(n // 2), n // 2 + 1)
        sym *= (2j * np.pi * m) ** order
    return sym


def resample_coefficients(coeffs: np.ndarray, n_new: int) -> np.ndarray:
    """Zero-pad (or truncate) a coefficient array to a grid of size ``n_new``."""
    n = coeffs.shape[-1]
    if n_new == n:
        return coeffs.copy()
    sym = symmetric_coefficients(coeffs)
    out = np.zeros(n_new, dtype=np.complex128)
    if n_new > n:
        h = n_new // 2
        out[h - n // 2:h + n // 2 + 1] = sym
    else:
        h = n // 2
        out[:] = sym[h - n_new // 2:h + n_new // 2]
        out[0] += sym[h + n_new // 2]
    return out


def resample_samples(samples: np.ndarray, n_new: int) -> np.ndarray:
    """Values of the band-limited interpolant on a grid of size ``n_new``.

    On refinement by an integer factor the original samples are copied over
    unchanged so grid values stay exact.
    """
    n = samples.shape[-1]
    if n_new == n:
        return samples.copy()
    out = samples_of(resample_coefficients(coefficients_of(samples), n_new))
    if np.isrealobj(samples):
        out = out.real
    if n_new > n:
        out[:: n_new // n] = samples
    return out


def interpolate(samples: np.ndarray, t, order: int = 0, coeffs: np.ndarray | None = None):
    """Evaluate the trigonometric interpolant of ``samples`` (or its
    ``order``-th derivative) at arbitrary points ``t``."""
    if coeffs is None:
        coeffs = coefficients_of(samples)
    values = kernels.trig_eval(symmetric_coefficients(coeffs, order), t)
    if order == 0:
        n = samples.shape[-1]
        tt = np.mod(np.asarray(t, dtype=np.float64), 1.0)
        scaled = tt * n
        on_grid = scaled == np.floor(scaled)
        if np.any(on_grid):
            values = np.array(values)
            values[on_grid] = samples[scaled[on_grid].astype(np.int64) % n]
    if np.isrealobj(samples):
        values = np.real(values)
    return values


def sobolev_norm_coefficients(coeffs: np.ndarray, level: int) -> float:
    """``(sum_m (1 + (2 pi m)^2)^(2+level) |c_m|^2)^(1/2)``."""
    if level < 0:
        raise ConfigurationError(f"level must be >= 0, got {level}")
    m = modes(coeffs.shape[-1])
    weight = (1.0 + (TWO_PI * m) ** 2) ** (2 + level)
    return float(np.sqrt(np.sum(weight * np.abs(coeffs) ** 2)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Loop:
    """Uniform samples of a loop in the complex plane."""

    def __init__(self, samples):
        arr = np.array(samples, dtype=np.complex128)
        if arr.ndim != 1:
            raise ConfigurationError("loop samples must be one-dimensional")
        check_grid(arr.size)
        self.samples = _frozen(arr)

    @property
    def n(self) -> int:
        return self.samples.size

    @cached_property
    def coefficients(self) -> np.ndarray:
        return _frozen(coefficients_of(self.samples))

    @classmethod
    def from_coefficients(cls, coeffs) -> Loop:
        return cls(samples_of(np.asarray(coeffs, dtype=np.complex128)))

    @classmethod
    def from_modes(cls, mode_map: dict[int, complex], n: int) -> Loop:
        check_grid(n)
        coeffs = np.zeros(n, dtype=np.complex128)
        for m, c in mode_map.items():
            m = int(m)
            if not -(n // 2) <= m < n // 2:
                raise ConfigurationError(f"mode {m} outside the band of an n={n} grid")
            coeffs[m + n // 2] = c
        return cls.from_coefficients(coeffs)

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], n: int) -> Loop:
        check_grid(n)
        return cls(f(np.arange(n) / n))

    def grid(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def _same_grid(self, other: Loop) -> None:
        if other.n != self.n:
            raise ConfigurationError(f"grid mismatch: {self.n} vs {other.n}")

    def __add__(self, other: Loop) -> Loop:
        self._same_grid(other)
        return Loop(self.samples + other.samples)

    def __sub__(self, other: Loop) -> Loop:
        self._same_grid(other)
        return Loop(self.samples - other.samples)

    def __mul__(self, c) -> Loop:
        if isinstance(c, Loop):
            self._same_grid(c)
            return Loop(self.samples * c.samples)
        return Loop(self.samples * complex(c))

    __rmul__ = __mul__

    def __neg__(self) -> Loop:
        return Loop(-self.samples)

    def __repr__(self) -> str:
        return f"Loop(n={self.n})"


@dataclass(frozen=True)
class LevelProfile:
    """Sobolev norms ``|z|_{W^{2+k,2}}`` for ``k = 0..k_max``."""

    k_max: int
    norms: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"k_max": self.k_max, "norms": list(self.norms)}


def analyze(loop: Loop) -> np.ndarray:
    return loop.coefficients.copy()


def synthesize(coeffs) -> Loop:
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    check_grid(coeffs.size)
    return Loop.from_coefficients(coeffs)


def resample(loop: Loop, n: int) -> Loop:
    check_grid(n)
    return Loop(resample_samples(loop.samples, n))


def evaluate(loop: Loop, t):
    """Value of the band-limited interpolant at ``t`` (taken mod 1).

    Grid points return the stored sample exactly.
    """
    out = interpolate(loop.samples, t, coeffs=loop.coefficients)
    return complex(out) if np.ndim(out) == 0 else out


def derivative(loop: Loop) -> Loop:
    c = np.array(loop.coefficients)
    c *= 2j * np.pi * modes(loop.n)
    # the split Nyquist cosine has zero slope on the grid
    c[0] = 0.0
    return Loop.from_coefficients(c)


def sobolev_norm(loop: Loop, k: int) -> float:
    return sobolev_norm_coefficients(loop.coefficients, k)


def l2_norm_sq(loop: Loop) -> float:
    return float(np.sum(np.abs(loop.coefficients) ** 2))


def square(loop: Loop) -> Loop:
    """Pointwise square on the doubled grid (exact for band-limited input)."""
    fine = resample_samples(loop.samples, 2 * loop.n)
    return Loop(fine * fine)


def refined_samples(loop: Loop, factor: int = 4) -> np.ndarray:
    return resample_samples(loop.samples, factor * loop.n)


def min_modulus(loop: Loop) -> float:
    return float(np.min(np.abs(refined_samples(loop))))


def check_punctured(loop: Loop, eps_collision: float = EPS_COLLISION) -> None:
    mm = min_modulus(loop)
    if not mm > eps_collision:
        raise CollisionError(
            f"collision guard: min |z| = {mm:.3e} is not above eps_collision = {eps_collision:.1e}"
        )


def winding_number(loop: Loop, eps_collision: float = EPS_COLLISION,
                   max_step: float = 0.5 * np.pi) -> int:
    """Turns of the loop around the origin, by argument tracking on the
    4n-refined grid."""
    check_punctured(loop, eps_collision)
    z = refined_samples(loop)
    steps = np.angle(np.roll(z, -1) / z)
    worst = float(np.max(np.abs(steps)))
    if worst > max_step:
        raise ResolutionError(
            f"argument jumps by {worst:.3f} rad between refined samples; refine the grid"
        )
    return int(np.rint(np.sum(steps) / TWO_PI))


def level_profile(loop: Loop, k_max: int) -> LevelProfile:
    if k_max < 0:
        raise ConfigurationError(f"k_max must be >= 0, got {k_max}")
    return LevelProfile(k_max, tuple(sobolev_norm(loop, k) for k in range(k_max + 1)))


# -- file format ------------------------------------------------------------

def loop_from_json(data: dict) -> Loop:
    try:
        n = data["n"]
        if not is_power_of_two(n):
            raise ConfigurationError(f"n must be a power of two, got {n!r}")
        if "samples" in data:
            pairs = data["samples"]
            if len(pairs) != n:
                raise ConfigurationError(f"expected {n} samples, got {len(pairs)}")
            return Loop([complex(float(re), float(im)) for re, im in pairs])
        if "modes" in data:
            return Loop.from_modes(
                {int(m): complex(float(re), float(im)) for m, (re, im) in data["modes"].items()}, n
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"malformed loop file: {exc}") from exc
    raise ConfigurationError("loop file needs 'samples' or 'modes'")


def loop_to_json(loop: Loop) -> dict:
    return {"n": loop.n, "samples": [[float(v.real), float(v.imag)] for v in loop.samples]}


def load_loop(path: str | Path) -> Loop:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a JSON object")
    return loop_from_json(data)


def save_loop(loop: Loop, path: str | Path) -> None:
    Path(path).write_text(json.dumps(loop_to_json(loop)) + "\n")
