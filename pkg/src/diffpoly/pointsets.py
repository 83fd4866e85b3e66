"""Separated point sets, thinning, and Marcinkiewicz-Zygmund weights."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, InvalidArgument, PreconditionError
from .manifold import TWO_PI, Manifold, Sphere2, Torus
from .quadrature import ProductGrid
from .spectrum import SpectralSpace

DIST_TOL = 1e-12
DEFAULT_DELTA0 = 0.5


@dataclass(frozen=True, eq=False)
class SeparatedSet:
    manifold: Manifold
    points: np.ndarray
    separation: float
    covering_radius_bound: float
    covering_radius: float  # audited on a fine grid

    @property
    def M(self) -> int:
        return len(self.points)

    @classmethod
    def from_points(cls, m: Manifold, points, audit_resolution: int | None = None) -> "SeparatedSet":
        """Wrap explicit points; separation is their minimum pairwise distance."""
        pts = m.canonical(np.atleast_2d(points))
        sep = min_pairwise_distance(m, pts)
        cover = covering_radius(m, pts, audit_resolution or _audit_resolution(m, len(pts)))
        return cls(m, pts, sep, cover, cover)


@dataclass(frozen=True, eq=False)
class MZRule:
    base: SeparatedSet
    weights: np.ndarray
    n: float
    delta0: float

    @property
    def points(self) -> np.ndarray:
        return self.base.points

    @property
    def manifold(self) -> Manifold:
        return self.base.manifold


# -- geometry helpers ----------------------------------------------------------


def _coords(m: Manifold, pts: np.ndarray) -> np.ndarray:
    """KD-tree coordinates whose metric is monotone in geodesic distance.

    Torus: angles in [0, 2 pi) with a periodic box (the flat metric is the
    periodic Euclidean one).  Sphere: the unit vectors themselves (chordal).
    """
    if isinstance(m, Torus):
        c = np.mod(pts, TWO_PI)
        return np.where(c >= TWO_PI, 0.0, c)
    return pts


def _tree(m: Manifold, pts: np.ndarray) -> cKDTree:
    if isinstance(m, Torus):
        return cKDTree(_coords(m, pts), boxsize=TWO_PI)
    return cKDTree(pts)


def min_pairwise_distance(m: Manifold, pts: np.ndarray) -> float:
    if len(pts) < 2:
        return math.inf
    _, idx = _tree(m, pts).query(_coords(m, pts), k=2)
    return float(np.min(m.distance(pts, pts[idx[:, 1]])))


def nearest_index(m: Manifold, centers: np.ndarray, probes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of and distance to the nearest center; ties go to the lowest index."""
    k = min(4, len(centers))
    _, idx = _tree(m, centers).query(_coords(m, probes), k=k)
    idx = np.asarray(idx).reshape(len(probes), k)
    dist = np.stack([np.atleast_1d(m.distance(probes, centers[idx[:, j]])) for j in range(k)], axis=1)
    best = dist.min(axis=1, keepdims=True)
    tied = dist <= best + DIST_TOL
    choice = np.where(tied, idx, np.iinfo(np.int64).max).min(axis=1)
    return choice, best[:, 0]


def covering_radius(m: Manifold, pts: np.ndarray, audit_resolution: int) -> float:
    """Largest distance from an audit-grid node (cell centers for the torus) to ``pts``."""
    probes = _audit_grid(m, audit_resolution)
    _, dist = nearest_index(m, pts, probes)
    return float(dist.max())


def _audit_grid(m: Manifold, resolution: int) -> np.ndarray:
    if isinstance(m, Torus):
        k = resolution
        axis = TWO_PI * (np.arange(k) + 0.5) / k
        mesh = np.meshgrid(*([axis] * m.d), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)
    pts, _ = m.uniform_grid((resolution, 2 * resolution))
    return np.vstack([pts, [[0, 0, 1.0], [0, 0, -1.0]]])


def _audit_resolution(m: Manifold, count: int) -> int:
    # at least 8 probes per point along each axis
    per_axis = 8 * max(1.0, count ** (1.0 / m.dim))
    if isinstance(m, Sphere2):
        per_axis /= 2
    return int(min(max(per_axis, 64), 4096 if m.dim == 1 else 1024))


def _candidate_grid(m: Manifold, eps: float, density: int) -> tuple[np.ndarray, float]:
    """Fine candidate grid and its own covering radius."""
    if isinstance(m, Torus):
        k = max(4, int(math.ceil(density * TWO_PI / eps)))
        k += (-k) % 4  # keep quarter and half turns on the grid
        grid = ProductGrid(m, k - 1)
        return grid.nodes, math.pi / k * math.sqrt(m.d)
    n_theta = max(4, int(math.ceil(density * math.pi / eps)))
    n_theta += n_theta % 2
    pts, _ = m.uniform_grid((n_theta, 2 * n_theta))
    pts = np.vstack([pts, [[0, 0, 1.0], [0, 0, -1.0]]])
    return pts, 2 * math.pi / n_theta


# -- operations ------------------------------------------------------------------


def greedy_maximal_separated(m: Manifold, eps: float, seed: int = 0, density: int | None = None) -> SeparatedSet:
    """Farthest-point insertion over a shuffled fine grid until every candidate is < eps away.

    Each inserted point is >= eps from all earlier ones, so the set is
    eps-separated; on exit every candidate lies within eps of the set, so
    every point of the manifold lies within eps + (candidate spacing).
    """
    if not 0.0 < eps <= m.diameter + DIST_TOL:
        raise DomainError(f"separation must lie in (0, {m.diameter}], got {eps}")
    if density is None:
        density = 8 if m.dim == 1 else 4
    cand, cand_cover = _candidate_grid(m, eps, density)
    rng = np.random.default_rng(seed)
    cand = cand[rng.permutation(len(cand))]
    chosen = [0]
    # proximity score, larger = farther: squared flat distance on the torus,
    # -<x, y> on the sphere; both are monotone in the KD-tree metric
    if isinstance(m, Sphere2):
        def score(j, idx):
            return -(cand[idx] @ cand[j])

        def reach(f):
            return math.sqrt(max(2.0 + 2.0 * f, 0.0))
    else:
        def score(j, idx):
            # candidates are already reduced to [0, 2 pi)
            delta = np.abs(cand[idx] - cand[j])
            delta = np.minimum(delta, TWO_PI - delta)
            return np.einsum("ij,ij->i", delta, delta)

        def reach(f):
            return math.sqrt(max(f, 0.0))
    tree = _tree(m, cand)
    far = score(0, slice(None))
    while True:
        j = int(np.argmax(far))
        # decide with the exact geodesic distance to the current set
        gap = float(np.min(np.atleast_1d(m.distance(cand[chosen], cand[j]))))
        if gap < eps - DIST_TOL:
            break
        chosen.append(j)
        # only candidates closer to j than the current maximum score can change
        idx = np.asarray(tree.query_ball_point(_coords(m, cand[j]), reach(far[j]) * (1 + 1e-9) + 1e-12), dtype=np.intp)
        far[idx] = np.minimum(far[idx], score(j, idx))
    pts = cand[np.array(chosen)]
    cover = covering_radius(m, pts, _audit_resolution(m, len(pts)))
    return SeparatedSet(m, pts, float(eps), float(eps + cand_cover), cover)


def thin_subset(xi: SeparatedSet, radius: float) -> SeparatedSet:
    """Greedy walk: keep a point, drop everything closer than ``radius``, repeat.

    The kept set is ``radius``-separated and every original point lies within
    ``radius`` of it, so the covering radius is at most
    ``radius + xi.covering_radius``.
    """
    if radius < xi.separation - DIST_TOL:
        raise InvalidArgument(
            f"thinning radius {radius} is below the set's separation {xi.separation}"
        )
    m = xi.manifold
    alive = np.ones(xi.M, dtype=bool)
    kept = []
    for i in range(xi.M):
        if not alive[i]:
            continue
        kept.append(i)
        close = np.asarray(m.distance(xi.points, xi.points[i])) < radius - DIST_TOL
        alive &= ~close
    pts = xi.points[np.array(kept)]
    bound = radius + xi.covering_radius_bound
    cover = covering_radius(m, pts, _audit_resolution(m, max(len(pts), xi.M)))
    return SeparatedSet(m, pts, float(max(radius, xi.separation)), float(bound), cover)


def mz_weights(
    xi: SeparatedSet,
    s: SpectralSpace,
    delta0: float = DEFAULT_DELTA0,
    grid_degree: int | None = None,
) -> MZRule:
    """Positive weights from a nearest-center partition of a fine exact grid."""
    if type(xi.manifold) is not type(s.manifold) or xi.manifold.dim != s.d:
        raise InvalidArgument("point set and space live on different manifolds")
    if s.n > 0 and xi.separation > delta0 / s.n + DIST_TOL:
        raise PreconditionError(
            f"separation {xi.separation:.6g} is too coarse for degree {s.n}: "
            f"need <= delta0/n = {delta0 / s.n:.6g}"
        )
    if grid_degree is None:
        grid_degree = max(8 * len(xi.points) ** (1.0 / s.d), 2 * s.degree_bound + 1)
        grid_degree = int(math.ceil(grid_degree))
    grid = ProductGrid(s.manifold, grid_degree)
    owner, _ = nearest_index(s.manifold, xi.points, grid.nodes)
    weights = np.bincount(owner, weights=grid.weights, minlength=xi.M)
    return MZRule(xi, weights, s.n, delta0)


def export_csv(path, points: np.ndarray, weights: np.ndarray | None = None) -> Path:
    """One row per point: coordinates, then weight (blank when absent)."""
    path = Path(path)
    width = points.shape[1]
    names = [f"x{i}" for i in range(width)] + ["weight"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i, row in enumerate(points):
            w = "" if weights is None else repr(float(weights[i]))
            writer.writerow([repr(float(v)) for v in row] + [w])
    return path


def read_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    with Path(path).open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    width = len(header) - 1
    pts = np.array([[float(v) for v in r[:width]] for r in rows])
    if rows and rows[0][width] == "":
        return pts, None
    return pts, np.array([float(r[width]) for r in rows])
