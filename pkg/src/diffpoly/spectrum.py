"""Laplace-Beltrami eigenbases and the diffusion polynomial spaces P_n.

Torus: real Fourier basis 1, sqrt(2) cos(m.theta), sqrt(2) sin(m.theta) over a
half lattice (first nonzero component of m positive), frequency |m|.

Sphere: real spherical harmonics scaled to unit norm under dsigma / (4 pi),
frequency sqrt(l (l + 1)).  Label m > 0 is the cosine harmonic of order m,
m < 0 the sine harmonic of order |m|.

Ordering is by squared frequency (an exact integer on both models), then by
label, so the list for a smaller degree is always a prefix of a larger one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidArgument
from .manifold import Manifold, Sphere2, Torus, sphere_angles

SQRT2 = math.sqrt(2.0)

# torus basis tags
CONST, COS, SIN = 0, 1, 2


@dataclass(frozen=True, eq=False)
class SpectralSpace:
    manifold: Manifold
    n: float
    lam2: np.ndarray  # squared frequencies, integers
    labels: np.ndarray  # torus: (N, d + 1) [m..., tag]; sphere: (N, 2) [l, m]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def N(self) -> int:
        return len(self.lam2)

    @property
    def d(self) -> int:
        return self.manifold.dim

    @property
    def frequencies(self) -> np.ndarray:
        return np.sqrt(self.lam2.astype(float))

    @property
    def degree_bound(self) -> int:
        """Largest trigonometric / harmonic degree present.

        Torus: max |m_i| over coordinates; sphere: max l.  Products of k
        elements of P_n stay below ``k * degree_bound`` in this sense.
        """
        if self.N == 1:
            return 0
        if isinstance(self.manifold, Torus):
            return int(np.max(np.abs(self.labels[:, :-1])))
        return int(np.max(self.labels[:, 0]))

    def describe(self) -> dict:
        return {"manifold": self.manifold.name, "d": self.d, "n": self.n, "N": self.N}

    def __repr__(self) -> str:
        return f"SpectralSpace({self.manifold.name}, n={self.n}, N={self.N})"


def build_space(m: Manifold, n: float) -> SpectralSpace:
    """All eigenpairs with frequency <= n, in canonical order."""
    n = float(n)
    if not math.isfinite(n) or n < 0:
        raise DomainError(f"degree must be a finite number >= 0, got {n}")
    if isinstance(m, Torus):
        lam2, labels = _torus_spectrum(m.d, n)
    elif isinstance(m, Sphere2):
        lam2, labels = _sphere_spectrum(n)
    else:
        raise InvalidArgument(f"unsupported manifold {m!r}")
    return SpectralSpace(m, n, lam2, labels)


def _shell(n: float) -> float:
    """Largest squared frequency kept.

    Squared frequencies are integers, so a relative slack of 1e-12 only
    absorbs rounding in n itself (n = sqrt(12) squares to 11.999...).
    """
    return n * n * (1.0 + 1e-12)


def _torus_spectrum(d: int, n: float):
    n2 = _shell(n)
    r = int(math.floor(math.sqrt(n2)))
    rows = []
    for mvec in itertools.product(range(-r, r + 1), repeat=d):
        l2 = sum(c * c for c in mvec)
        if l2 > n2:
            continue
        nonzero = [c for c in mvec if c != 0]
        if not nonzero:
            rows.append((l2, *mvec, CONST))
        elif nonzero[0] > 0:
            rows.append((l2, *mvec, COS))
            rows.append((l2, *mvec, SIN))
    rows.sort()
    arr = np.array(rows, dtype=np.int64)
    return arr[:, 0], arr[:, 1:]


def _sphere_spectrum(n: float):
    n2 = _shell(n)
    rows = []
    ell = 0
    while ell * (ell + 1) <= n2:
        for mm in range(-ell, ell + 1):
            rows.append((ell * (ell + 1), ell, mm))
        ell += 1
    arr = np.array(rows, dtype=np.int64)
    return arr[:, 0], arr[:, 1:]


def sphere_max_degree(n: float) -> int:
    """Largest l with sqrt(l (l + 1)) <= n."""
    n2 = _shell(n)
    ell = int(math.floor(math.sqrt(n2 + 0.25) - 0.5)) if n >= 0 else -1
    while (ell + 1) * (ell + 2) <= n2:
        ell += 1
    while ell >= 0 and ell * (ell + 1) > n2:
        ell -= 1
    return ell


def weyl_ratio(s: SpectralSpace) -> float:
    if s.n < 1:
        raise DomainError("weyl ratio needs n >= 1")
    return s.N / s.n**s.d


# -- evaluation ---------------------------------------------------------------


def legendre_table(lmax: int, cos_theta, sin_theta=None) -> np.ndarray:
    """Normalized associated Legendre functions q_l^m, 0 <= m <= l <= lmax.

    q_l^m = sqrt((2l+1)(l-m)!/(l+m)!) P_l^m without the Condon-Shortley
    phase, so that int_{-1}^{1} (q_l^m)^2 dx / 2 = 1.  Returned with shape
    (lmax + 1, lmax + 1, len(x)) indexed [m, l]; entries with l < m are zero.
    The recurrence runs upward in l from the sectoral value, which stays
    normalized at every step.
    """
    x = np.atleast_1d(np.asarray(cos_theta, float))
    if sin_theta is None:
        s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    else:
        s = np.atleast_1d(np.asarray(sin_theta, float))
    out = np.zeros((lmax + 1, lmax + 1, x.size))
    sect = np.ones_like(x)
    for m in range(lmax + 1):
        if m > 0:
            sect = sect * s * math.sqrt((2 * m + 1) / (2 * m))
        out[m, m] = sect
        if m + 1 <= lmax:
            out[m, m + 1] = math.sqrt(2 * m + 3) * x * sect
        for ell in range(m + 2, lmax + 1):
            a = math.sqrt((4 * ell * ell - 1) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1) ** 2 - m * m) / (4 * (ell - 1) ** 2 - 1))
            out[m, ell] = a * (x * out[m, ell - 1] - b * out[m, ell - 2])
    return out


def check_points(s: SpectralSpace, pts) -> np.ndarray:
    arr = np.asarray(pts, float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != s.manifold.coord_dim:
        raise InvalidArgument(
            f"points of shape {np.shape(pts)} do not belong to {s.manifold.name}"
        )
    return arr


def evaluate_basis(s: SpectralSpace, pts) -> np.ndarray:
    """Matrix of phi_k(x_i), shape (num_points, N)."""
    pts = check_points(s, pts)
    if isinstance(s.manifold, Torus):
        return _torus_basis(s, pts)
    return _sphere_basis(s, pts)


def _torus_basis(s: SpectralSpace, pts: np.ndarray) -> np.ndarray:
    freqs = s.labels[:, :-1].astype(float)
    tags = s.labels[:, -1]
    phase = pts @ freqs.T
    out = np.empty_like(phase)
    out[:, tags == CONST] = 1.0
    out[:, tags == COS] = SQRT2 * np.cos(phase[:, tags == COS])
    out[:, tags == SIN] = SQRT2 * np.sin(phase[:, tags == SIN])
    return out


def _sphere_basis(s: SpectralSpace, pts: np.ndarray) -> np.ndarray:
    lmax = int(s.labels[-1, 0])
    cos_t = pts[:, 2] / np.linalg.norm(pts, axis=1)
    sin_t = np.hypot(pts[:, 0], pts[:, 1]) / np.linalg.norm(pts, axis=1)
    _, phi = sphere_angles(pts)
    table = legendre_table(lmax, cos_t, sin_t)
    ell = s.labels[:, 0]
    mm = s.labels[:, 1]
    am = np.abs(mm)
    q = table[am, ell].T  # (points, N)
    angle = np.outer(phi, np.arange(lmax + 1))
    cos_m, sin_m = SQRT2 * np.cos(angle), SQRT2 * np.sin(angle)
    cos_m[:, 0] = 1.0
    trig = np.where(mm >= 0, cos_m[:, am], sin_m[:, am])
    return q * trig
