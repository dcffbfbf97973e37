"""Pure-Python/numpy implementations of the numeric kernels."""

import math

import numpy as np

from ._series import COEFFICIENTS

_PI = math.pi
_HALF_PI = 0.5 * math.pi


def _clausen_reduced(x: float) -> float:
    # x in [0, pi]
    if x == 0.0:
        return 0.0
    x2 = x * x
    p = x
    s = 0.0
    for c in COEFFICIENTS:
        p *= x2
        s += c * p
    return x - x * math.log(x) + s


def lobachevsky(theta: float) -> float:
    t = math.fmod(theta, _PI)
    if t < 0.0:
        t += _PI
    if t > _HALF_PI:
        return -0.5 * _clausen_reduced(2.0 * (_PI - t))
    return 0.5 * _clausen_reduced(2.0 * t)


def _arg(w: complex) -> float:
    if w.imag == 0.0 and w.real < 0.0:
        return _PI
    return math.atan2(w.imag, w.real)


def tetra_volume(z: complex) -> float:
    z = complex(z)
    if z.imag == 0.0:
        return 0.0
    a = _arg(z)
    b = _arg(1.0 / (1.0 - z))
    c = _arg(1.0 - 1.0 / z)
    return lobachevsky(a) + lobachevsky(b) + lobachevsky(c)


def tetra_volumes(z) -> np.ndarray:
    return np.array([tetra_volume(w) for w in np.asarray(z, dtype=complex)], dtype=float)


def residual_jacobian(A1, A2, C, L1, L2, z):
    """F = A1 L1 + A2 L2 - C and dF/dz = A1 / z - A2 / (1 - z)."""
    A1 = np.asarray(A1, dtype=float)
    A2 = np.asarray(A2, dtype=float)
    z = np.asarray(z, dtype=complex)
    F = A1 @ np.asarray(L1, dtype=complex) + A2 @ np.asarray(L2, dtype=complex) - np.asarray(C)
    J = A1 / z[None, :] - A2 / (1.0 - z)[None, :]
    return F, J
