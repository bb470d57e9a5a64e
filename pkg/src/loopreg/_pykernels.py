"""NumPy implementations of the inner kernels.

Used when the compiled ``_ckernels`` extension is unavailable.  Both
backends expose the same two functions with identical semantics.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 2048


def trig_eval(sym_coeffs, t):
    """Evaluate ``sum_m a_m exp(2 pi i m t)`` for ``m = -M..M``.

    ``sym_coeffs`` has length ``2M + 1`` and is ordered from ``-M`` to ``M``.
    """
    a = np.asarray(sym_coeffs, dtype=np.complex128)
    t = np.asarray(t, dtype=np.float64)
    M = (a.size - 1) // 2
    modes = np.arange(-M, M + 1, dtype=np.float64)
    flat = np.mod(t.ravel(), 1.0)
    out = np.empty(flat.size, dtype=np.complex128)
    for lo in range(0, flat.size, _CHUNK):
        chunk = flat[lo:lo + _CHUNK]
        phase = np.exp(2j * np.pi * np.outer(chunk, modes))
        out[lo:lo + _CHUNK] = phase @ a
    return out.reshape(t.shape)


def invert_monotone(sym_coeffs, d_coeffs, targets, lo, hi, tol, maxiter):
    """Solve ``tau + p(tau) = y`` for every target ``y`` inside ``[lo, hi]``.

    ``p`` and ``p'`` are the real parts of the trigonometric sums given by
    ``sym_coeffs`` and ``d_coeffs``.  Newton steps that leave the bracket are
    replaced by bisection.  Returns ``(roots, converged_mask)``.
    """
    y = np.asarray(targets, dtype=np.float64)
    a = np.array(lo, dtype=np.float64)
    b = np.array(hi, dtype=np.float64)
    x = 0.5 * (a + b)
    done = np.zeros(y.shape, dtype=bool)
    for _ in range(maxiter):
        active = ~done
        if not active.any():
            break
        xa = x[active]
        f = xa + trig_eval(sym_coeffs, xa).real - y[active]
        df = 1.0 + trig_eval(d_coeffs, xa).real
        conv = (np.abs(f) <= tol) | ((b[active] - a[active] <= 4e-16) & (np.abs(f) <= 100.0 * tol))
        # shrink the bracket with the sign of the residual
        aa = np.where(f < 0.0, xa, a[active])
        bb = np.where(f > 0.0, xa, b[active])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = xa - f / df
        bad = ~np.isfinite(step) | (step <= aa) | (step >= bb)
        # converged points take one polishing Newton step (its size is below tol/slope)
        polish = conv & np.isfinite(step)
        step_or_bisect = np.where(bad, 0.5 * (aa + bb), step)
        a[active] = aa
        b[active] = bb
        x[active] = np.where(conv, np.where(polish, step, xa), step_or_bisect)
        idx = np.flatnonzero(active)
        done[idx[conv]] = True
    return x, done
