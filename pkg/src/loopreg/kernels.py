"""Backend selection for the inner kernels.

The compiled extension is preferred; the NumPy module is used when it cannot
be imported.  :func:`use_backend` switches explicitly (tests and benchmarks
run both).
"""

from __future__ import annotations

from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS: dict[str, ModuleType | None] = {"c": _ckernels, "python": _pykernels}
_active: ModuleType = _ckernels if _ckernels is not None else _pykernels


def available_backends() -> list[str]:
    return [name for name, mod in _BACKENDS.items() if mod is not None]


def backend() -> str:
    return "c" if _active is _ckernels and _ckernels is not None else "python"


def use_backend(name: str) -> None:
    global _active
    mod = _BACKENDS.get(name)
    if mod is None:
        raise ValueError(f"kernel backend {name!r} is not available")
    _active = mod


def trig_eval(sym_coeffs, t):
    return _active.trig_eval(sym_coeffs, t)


def invert_monotone(sym_coeffs, d_coeffs, targets, lo, hi, tol, maxiter):
    return _active.invert_monotone(sym_coeffs, d_coeffs, targets, lo, hi, tol, maxiter)
