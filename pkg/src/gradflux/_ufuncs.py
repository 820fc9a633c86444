"""Compiled scalar evaluators for potentials, shared by samplers and solvers.

A potential is passed to compiled code as ``(code, p, tx, tu)``; see
:meth:`gradflux.potentials.Potential.kernel_args`.
"""

import numba
import numpy as np

QUADRATIC = 0
POWER = 1
POWER_PLUS_QUADRATIC = 2
CUSTOM = 3


@numba.njit(cache=True, nogil=True)
def fast_pow(a, p):
    """``a**p`` for ``a >= 0`` with shortcuts for small integer exponents."""
    if p == 2.0:
        return a * a
    if p == 4.0:
        b = a * a
        return b * b
    if p == 3.0:
        return a * a * a
    if p == 1.0:
        return a
    if a == 0.0:
        return 0.0
    return a**p


@numba.njit(cache=True, nogil=True)
def _custom_eval(x, tx, tu):
    if not (tx[0] < x < tx[-1]):
        return np.inf
    return np.interp(x, tx, tu)


@numba.njit(cache=True, nogil=True)
def _custom_slope(a, tx, tu):
    k = np.searchsorted(tx, a, side="right") - 1
    if k < 0:
        k = 0
    if k > tx.size - 2:
        k = tx.size - 2
    return (tu[k + 1] - tu[k]) / (tx[k + 1] - tx[k])


@numba.njit(cache=True, nogil=True)
def builtin_eval(code, p, x):
    """``U(x)`` for the closed-form kinds (no table arguments, cheap to call)."""
    a = abs(x)
    if code == QUADRATIC:
        return a * a
    if code == POWER:
        return fast_pow(a, p)
    return fast_pow(a, p) + a * a


@numba.njit(cache=True, nogil=True)
def builtin_deriv(code, p, x):
    if code == QUADRATIC:
        return 2.0 * x
    a = abs(x)
    sg = 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)
    g = sg * p * fast_pow(a, p - 1.0)
    if code == POWER_PLUS_QUADRATIC:
        g += 2.0 * x
    return g


@numba.njit(cache=True, nogil=True)
def builtin_second(code, p, x):
    if code == QUADRATIC:
        return 2.0
    extra = 2.0 if code == POWER_PLUS_QUADRATIC else 0.0
    if p == 2.0:
        return 2.0 + extra
    a = abs(x)
    if a == 0.0:
        return (np.inf if p < 2.0 else 0.0) + extra
    return p * (p - 1.0) * fast_pow(a, p - 2.0) + extra


@numba.njit(cache=True, nogil=True)
def u_eval(code, p, x, tx, tu):
    if code != CUSTOM:
        return builtin_eval(code, p, x)
    return _custom_eval(x, tx, tu)


@numba.njit(cache=True, nogil=True)
def u_deriv(code, p, x, tx, tu):
    """Monotone selection of ``U'`` (right derivative of ``U(|x|)`` times sign)."""
    if code != CUSTOM:
        return builtin_deriv(code, p, x)
    sg = 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)
    return sg * _custom_slope(abs(x), tx, tu)


@numba.njit(cache=True, nogil=True)
def u_second(code, p, x, tx, tu):
    """``U''`` where it exists; 0 for tabulated (piecewise linear) potentials."""
    if code != CUSTOM:
        return builtin_second(code, p, x)
    return 0.0
