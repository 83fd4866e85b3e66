"""Bessel functions of the first kind for real order v > -1/2.

Power series below ``SWITCH`` and the Hankel asymptotic expansion above it
(truncated at its smallest term).  For half-integer orders the Hankel
expansion terminates and is exact.  ``bessel_j_poisson`` integrates the
Poisson representation directly and is kept as an independent route.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .errors import DomainError

SWITCH = 12.0


def _check(v: float):
    if not v > -0.5:
        raise DomainError(f"Bessel order must exceed -1/2, got {v}")


def _series_scaled(v: float, t: float) -> float:
    """J_v(t) / t^v by its power series; finite at t = 0."""
    z = -(t * t) / 4.0
    term = 1.0 / (2.0**v * math.gamma(v + 1.0))
    total = term
    k = 0
    while True:
        k += 1
        term *= z / (k * (k + v))
        total += term
        if abs(term) <= 1e-17 * abs(total) and k > 2:
            return total
        if k > 500:
            return total


def _hankel(v: float, t: float) -> float:
    mu = 4.0 * v * v
    chi = t - (0.5 * v + 0.25) * math.pi
    p_sum, q_sum = 0.0, 0.0
    term = 1.0
    prev = math.inf
    k = 0
    while k < 200:
        if k % 2 == 0:
            p_sum += term if (k // 2) % 2 == 0 else -term
        else:
            q_sum += term if (k // 2) % 2 == 0 else -term
        nxt = term * (mu - (2 * k + 1) ** 2) / ((k + 1) * 8.0 * t)
        if nxt == 0.0:
            break
        if abs(nxt) >= abs(term) and abs(term) < prev:
            # asymptotic series: stop at the smallest term
            break
        prev = abs(term)
        term = nxt
        k += 1
    return math.sqrt(2.0 / (math.pi * t)) * (p_sum * math.cos(chi) - q_sum * math.sin(chi))


def bessel_j(v: float, t: float) -> float:
    """J_v(t) for v > -1/2, t >= 0."""
    _check(v)
    if t < 0:
        raise DomainError(f"argument must be >= 0, got {t}")
    if t < SWITCH:
        if t == 0.0:
            return 1.0 if v == 0 else 0.0
        return _series_scaled(v, t) * t**v
    return _hankel(v, t)


def bessel_j_scaled(v: float, t: float) -> float:
    """J_v(t) / t^v, continuous at t = 0."""
    _check(v)
    if t < SWITCH:
        return _series_scaled(v, t)
    return _hankel(v, t) / t**v


def bessel_j_poisson(v: float, t: float) -> float:
    """J_v(t) by quadrature of its Poisson integral."""
    _check(v)
    a = v - 0.5
    pref = (t / 2.0) ** v / (math.gamma(v + 0.5) * math.gamma(0.5))
    val, _ = integrate.quad(
        lambda s: math.cos(t * s), -1.0, 1.0, weight="alg", wvar=(a, a),
        limit=max(100, int(4 * t)), epsabs=1e-13, epsrel=1e-12,
    )
    return pref * val


def phi_d(d: int, t: float) -> float:
    """Radial Fourier profile of the unit ball: J_{d/2}(t) / ((2 pi)^{d/2} t^{d/2})."""
    if d not in (1, 2, 3):
        raise DomainError(f"dimension must be 1, 2 or 3, got {d}")
    if t < 0:
        raise DomainError("argument must be >= 0")
    return bessel_j_scaled(d / 2.0, t) / (2.0 * math.pi) ** (d / 2.0)


def phi_d_integral(d: int, t: float) -> float:
    """Same profile from slicing the ball along the direction of z.

    (2 pi)^-d |B^{d-1}| int_{-1}^{1} cos(ts) (1 - s^2)^{(d-1)/2} ds, where
    |B^{d-1}| is the volume of the (d-1)-dimensional unit ball.
    """
    if d not in (1, 2, 3):
        raise DomainError(f"dimension must be 1, 2 or 3, got {d}")
    a = (d - 1) / 2.0
    slice_volume = math.pi**a / math.gamma(a + 1.0)
    val, _ = integrate.quad(
        lambda s: math.cos(t * s), -1.0, 1.0, weight="alg", wvar=(a, a),
        limit=max(100, int(4 * t)), epsabs=1e-14,
    )
    return slice_volume * val / (2.0 * math.pi) ** d


phi_d_vec = np.vectorize(phi_d, otypes=[float])


def phi_d_zeros(d: int, t_max: float) -> np.ndarray:
    """Positive zeros of Phi_d below ``t_max``, by bracketing and Brent's method."""
    from scipy.optimize import brentq

    grid = np.linspace(1e-6, t_max, max(64, int(16 * t_max)))
    vals = phi_d_vec(d, grid)
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        roots.append(brentq(lambda s: phi_d(d, s), grid[i], grid[i + 1], xtol=1e-14))
    return np.asarray(roots)
