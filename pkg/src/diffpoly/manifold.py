"""Model closed manifolds: the flat torus T^d (d <= 3) and the unit sphere S^2.

Points are plain numpy arrays. A single point is a 1-D array; a batch is a
2-D array with one point per row. Torus points are angle vectors reduced to
[0, 2*pi); sphere points are unit 3-vectors. Both models carry the normalized
Riemannian measure (total mass 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import DomainError, InvalidArgument

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Torus:
    """Flat torus R^d / (2 pi Z)^d with measure dtheta / (2 pi)^d."""

    d: int = 1

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError(f"torus dimension must be 1, 2 or 3, got {self.d}")

    kind = "torus"

    @property
    def dim(self) -> int:
        return self.d

    @property
    def name(self) -> str:
        return f"t{self.d}"

    @property
    def coord_dim(self) -> int:
        return self.d

    @property
    def diameter(self) -> float:
        return math.pi * math.sqrt(self.d)

    @property
    def volume(self) -> float:
        """Riemannian volume before normalization."""
        return TWO_PI**self.d

    def canonical(self, pts) -> np.ndarray:
        pts = _as_points(pts, self.d)
        return np.mod(pts, TWO_PI)

    def distance(self, x, y) -> np.ndarray | float:
        x = _as_points(x, self.d)
        y = _as_points(y, self.d)
        # |x - y| first: x - y and y - x round identically, so d(x, y) == d(y, x)
        delta = np.mod(np.abs(x - y), TWO_PI)
        delta = np.minimum(delta, TWO_PI - delta)
        out = np.sqrt(np.sum(delta * delta, axis=-1))
        return _squeeze(out)

    def random_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(0.0, TWO_PI, size=(count, self.d))

    def uniform_grid(self, resolution: int) -> tuple[np.ndarray, np.ndarray]:
        """Tensor equispaced grid with ``resolution`` nodes per axis."""
        k = int(resolution)
        if k < 1:
            raise DomainError("resolution must be >= 1")
        axis = TWO_PI * np.arange(k) / k
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        weights = np.full(len(pts), 1.0 / k**self.d)
        return pts, weights

    def ball_measure(self, r: float) -> float | None:
        """Closed form of mu(B(x, r)) when one is available, else None."""
        if r <= math.pi:
            # the ball does not wrap: flat ball volume over (2 pi)^d
            unit_ball = math.pi ** (self.d / 2) / math.gamma(self.d / 2 + 1)
            return unit_ball * r**self.d / self.volume
        if self.d == 1:
            return 1.0
        if self.d == 2:
            # disc intersected with the fundamental square [-pi, pi]^2
            def chord(u):
                return 2.0 * min(math.pi, math.sqrt(max(r * r - u * u, 0.0)))

            kink = math.sqrt(r * r - math.pi**2)
            area, _ = integrate.quad(chord, -math.pi, math.pi, points=[-kink, kink], limit=200)
            return min(area / self.volume, 1.0)
        return None


@dataclass(frozen=True)
class Sphere2:
    """Unit round sphere in R^3 with measure dsigma / (4 pi)."""

    kind = "sphere"

    @property
    def d(self) -> int:
        return 2

    @property
    def dim(self) -> int:
        return 2

    @property
    def name(self) -> str:
        return "s2"

    @property
    def coord_dim(self) -> int:
        return 3

    @property
    def diameter(self) -> float:
        return math.pi

    @property
    def volume(self) -> float:
        return 4.0 * math.pi

    def canonical(self, pts) -> np.ndarray:
        pts = _as_points(pts, 3)
        norm = np.linalg.norm(pts, axis=-1, keepdims=True)
        if np.any(norm == 0):
            raise InvalidArgument("zero vector is not a point of the sphere")
        return pts / norm

    def distance(self, x, y) -> np.ndarray | float:
        x = _as_points(x, 3)
        y = _as_points(y, 3)
        # atan2 form keeps full accuracy near 0 and pi, where arccos does not
        cross = np.linalg.norm(np.cross(x, y), axis=-1)
        dot = np.sum(x * y, axis=-1)
        out = np.arctan2(cross, dot)
        return _squeeze(out)

    def random_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        v = rng.standard_normal((count, 3))
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def uniform_grid(self, resolution) -> tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes in cos(theta) times equispaced azimuth.

        ``resolution`` is either the polar count (azimuth count is twice that)
        or an explicit ``(polar, azimuthal)`` pair.
        """
        if np.ndim(resolution) == 0:
            n_theta, n_phi = int(resolution), 2 * int(resolution)
        else:
            n_theta, n_phi = (int(v) for v in resolution)
        if n_theta < 1 or n_phi < 1:
            raise DomainError("resolution must be >= 1")
        x, w = leggauss(n_theta)
        phi = TWO_PI * np.arange(n_phi) / n_phi
        pts = sphere_points(x[:, None], phi[None, :]).reshape(-1, 3)
        weights = np.repeat(w / 2.0, n_phi) / n_phi
        return pts, weights

    def ball_measure(self, r: float) -> float:
        return (1.0 - math.cos(r)) / 2.0


Manifold = Torus | Sphere2


def sphere_points(cos_theta, phi) -> np.ndarray:
    """Unit vectors from cos(colatitude) and azimuth (broadcasting)."""
    cos_theta, phi = np.broadcast_arrays(np.asarray(cos_theta, float), np.asarray(phi, float))
    sin_theta = np.sqrt(np.clip(1.0 - cos_theta**2, 0.0, None))
    return np.stack([sin_theta * np.cos(phi), sin_theta * np.sin(phi), cos_theta], axis=-1)


def sphere_angles(pts) -> tuple[np.ndarray, np.ndarray]:
    """Colatitude and azimuth of unit vectors."""
    pts = np.asarray(pts, float)
    theta = np.arctan2(np.hypot(pts[..., 0], pts[..., 1]), pts[..., 2])
    phi = np.mod(np.arctan2(pts[..., 1], pts[..., 0]), TWO_PI)
    return theta, phi


def from_name(name: str) -> Manifold:
    """Parse ``t1``, ``t2``, ``t3`` or ``s2``."""
    key = name.strip().lower()
    if key in ("s2", "sphere"):
        return Sphere2()
    if len(key) == 2 and key[0] == "t" and key[1] in "123":
        return Torus(int(key[1]))
    raise InvalidArgument(f"unknown manifold {name!r}; expected t1, t2, t3 or s2")


def geodesic_distance(m: Manifold, x, y):
    return m.distance(x, y)


def ball_measure_estimate(m: Manifold, x, r: float, resolution: int = 256, closed_form: bool = True) -> float:
    """mu(B(x, r)): the closed form when available (and wanted), else grid quadrature."""
    if not 0.0 < r <= m.diameter + 1e-12:
        raise DomainError(f"radius must lie in (0, {m.diameter}], got {r}")
    exact = m.ball_measure(r) if closed_form else None
    if exact is not None:
        return float(exact)
    x = np.asarray(x, float)
    pts, w = m.uniform_grid(resolution)
    # shift to cell midpoints so the estimate is a midpoint rule
    if isinstance(m, Torus):
        pts = pts + math.pi / resolution
    inside = np.asarray(m.distance(pts, x)) <= r
    return float(np.sum(w[inside]))


def uniform_grid(m: Manifold, resolution) -> tuple[np.ndarray, np.ndarray]:
    return m.uniform_grid(resolution)


def _as_points(pts, width: int) -> np.ndarray:
    arr = np.asarray(pts, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != width:
        raise InvalidArgument(f"expected points with {width} coordinates, got shape {arr.shape}")
    return arr


def _squeeze(out: np.ndarray):
    return float(out) if out.ndim == 0 else out
