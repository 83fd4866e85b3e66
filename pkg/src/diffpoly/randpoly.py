"""Random diffusion polynomials: seeded Gaussian coefficients, evaluation, norms.

Randomness comes from counter-based Philox substreams keyed by
``(master_seed, trial)``, so any trial can be regenerated on its own and
results do not depend on the order in which trials are computed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyError, DomainError, InvalidArgument
from .manifold import Sphere2, Torus, from_name, sphere_angles, sphere_points
from .pointsets import MZRule
from .quadrature import GridTransform, ProductGrid, grid_for
from .spectrum import SpectralSpace, build_space, check_points, evaluate_basis

INF = math.inf
LP_RTOL = 1e-6
LP_OVERSAMPLING = 8
SUP_OVERSAMPLING = 8
MAX_GRID_NODES = 2**22


def substream(master_seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial; Philox key = (trial, master_seed)."""
    if master_seed < 0 or trial < 0:
        raise DomainError("seed and trial must be non-negative")
    key = np.array([trial, master_seed], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_batch(s: SpectralSpace, master_seed: int, trials, sigma: float = 1.0) -> np.ndarray:
    """Coefficient matrix with one row per trial index in ``trials``."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    trials = np.atleast_1d(np.asarray(trials, dtype=np.int64))
    out = np.empty((len(trials), s.N))
    for row, t in enumerate(trials):
        out[row] = substream(master_seed, int(t)).standard_normal(s.N)
    if sigma != 1.0:
        out *= sigma
    return out


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    values: np.ndarray
    space: SpectralSpace
    sigma: float = 1.0
    seed: int | None = None
    trial: int | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, float)
        if vals.shape != (self.space.N,):
            raise InvalidArgument(f"expected {self.space.N} coefficients, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("coefficients must be finite")
        object.__setattr__(self, "values", vals)

    def scaled(self, c: float) -> "CoefficientVector":
        return CoefficientVector(c * self.values, self.space, self.sigma, self.seed, self.trial)

    def to_json(self) -> str:
        return json.dumps(
            {
                "space": {"manifold": self.space.manifold.name, "n": self.space.n, "N": self.space.N},
                "sigma": self.sigma,
                "seed": self.seed,
                "trial": self.trial,
                "values": [float(v) for v in self.values],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CoefficientVector":
        obj = json.loads(text)
        space = build_space(from_name(obj["space"]["manifold"]), obj["space"]["n"])
        return cls(np.array(obj["values"]), space, obj["sigma"], obj["seed"], obj["trial"])


@dataclass(frozen=True)
class NormReport:
    p: float
    value: float
    method: str
    declared_accuracy: float

    def to_json(self) -> str:
        return json.dumps(
            {"p": "inf" if self.p == INF else self.p, "value": self.value,
             "method": self.method, "declared_accuracy": self.declared_accuracy}
        )

    @classmethod
    def from_json(cls, text: str) -> "NormReport":
        obj = json.loads(text)
        return cls(parse_exponent(obj["p"]), obj["value"], obj["method"], obj["declared_accuracy"])


def parse_exponent(p) -> float:
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("inf", "infinity", "oo"):
            return INF
        p = float(key)
    p = float(p)
    if not (p >= 1.0):
        raise DomainError(f"exponent must lie in [1, inf], got {p}")
    return p


def format_exponent(p: float) -> str:
    if p == INF:
        return "inf"
    return str(int(p)) if float(p).is_integer() else repr(float(p))


def sample_coefficients(s: SpectralSpace, sigma: float, master_seed: int, trial: int) -> CoefficientVector:
    values = sample_batch(s, master_seed, [trial], sigma)[0]
    return CoefficientVector(values, s, sigma, master_seed, trial)


def evaluate(a: CoefficientVector, pts) -> np.ndarray:
    """P_a at each point."""
    pts = check_points(a.space, pts)
    return evaluate_basis(a.space, pts) @ a.values


# -- L_p norms -------------------------------------------------------------------


def _is_even_integer(p: float) -> bool:
    return p != INF and float(p).is_integer() and int(p) % 2 == 0


def _grid_lp(values: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """(sum_i w_i |v_i|^p)^(1/p) row-wise, scaled to avoid overflow."""
    absv = np.abs(values)
    scale = absv.max(axis=-1, keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    return scale[..., 0] * (((absv / scale) ** p) @ weights) ** (1.0 / p)


def lp_norm(
    a: CoefficientVector,
    p,
    rule: ProductGrid | MZRule | None = None,
    *,
    oversample: bool | None = None,
    rtol: float = LP_RTOL,
) -> NormReport:
    """(int |P|^p dmu)^(1/p) on a product grid, or the discrete sum of an MZ rule
    (the max over its nodes for p = inf).

    Even integer p on a grid exact to degree p * (degree of the space) is
    exact.  Any other p needs ``oversample``: the grid is refined until the
    relative change between consecutive refinements is below ``rtol``.  With
    ``rule=None`` the default is p = 2 via Parseval, otherwise an automatically
    chosen grid.
    """
    p = parse_exponent(p)
    s = a.space
    if isinstance(rule, MZRule):
        if type(rule.manifold) is not type(s.manifold) or rule.manifold.dim != s.d:
            raise InvalidArgument("rule and polynomial live on different manifolds")
        vals = evaluate(a, rule.points)
        value = np.max(np.abs(vals)) if p == INF else _grid_lp(vals[None, :], rule.weights, p)[0]
        return NormReport(p, float(value), "mz-discrete", math.nan)
    if p == INF:
        raise InvalidArgument("use sup_norm for p = inf")
    if rule is None:
        if p == 2:
            return NormReport(2.0, float(np.linalg.norm(a.values)), "parseval", 0.0)
        if _is_even_integer(p):
            rule = grid_for(s, int(p) * s.degree_bound)
        else:
            rule = grid_for(s, LP_OVERSAMPLING * max(s.degree_bound, 1))
            oversample = True if oversample is None else oversample
    if type(rule.manifold) is not type(s.manifold) or rule.manifold.dim != s.d:
        raise InvalidArgument("rule and polynomial live on different manifolds")
    if rule.exact_for_power(s, p):
        vals = GridTransform(s, rule).synth(a.values)
        return NormReport(p, float(_grid_lp(vals, rule.weights, p)[0]), "exact-quadrature", 0.0)
    if not oversample:
        raise AccuracyError(
            f"grid of degree {rule.degree} does not integrate |P|^{format_exponent(p)} exactly "
            f"for degree {s.degree_bound}; pass oversample=True for a convergence-checked value"
        )
    coarse = _norm_on(a, p, rule)
    while True:
        finer = rule.refined()
        if finer.size > MAX_GRID_NODES:
            raise AccuracyError(
                f"L_{format_exponent(p)} norm did not reach rtol={rtol} before the grid "
                f"limit of {MAX_GRID_NODES} nodes (last change {acc:.3g})"
            )
        fine = _norm_on(a, p, finer)
        acc = abs(fine - coarse) / fine if fine > 0 else 0.0
        if acc <= rtol:
            return NormReport(p, fine, "oversampled-quadrature", acc)
        rule, coarse = finer, fine


def _norm_on(a: CoefficientVector, p: float, grid: ProductGrid) -> float:
    vals = GridTransform(a.space, grid).synth(a.values)
    return float(_grid_lp(vals, grid.weights, p)[0])


# -- sup norm ---------------------------------------------------------------------


class _PointEvaluator:
    """Evaluate a batch of polynomials at per-row points in local coordinates."""

    def __init__(self, space: SpectralSpace):
        self.space = space
        self.sphere = isinstance(space.manifold, Sphere2)

    def to_points(self, coords: np.ndarray) -> np.ndarray:
        if self.sphere:
            theta, phi = coords[..., 0], coords[..., 1]
            return sphere_points(np.cos(theta), phi)
        return coords

    def __call__(self, a: np.ndarray, coords: np.ndarray) -> np.ndarray:
        """a: (T, N); coords: (T, K, c) -> values (T, K)."""
        t, k = coords.shape[:2]
        pts = self.to_points(coords).reshape(t * k, -1)
        basis = evaluate_basis(self.space, pts).reshape(t, k, -1)
        return np.einsum("tkn,tn->tk", basis, a)


def _grid_coords(grid: ProductGrid) -> np.ndarray:
    if isinstance(grid.manifold, Torus):
        return grid.nodes
    theta, phi = sphere_angles(grid.nodes)
    return np.stack([theta, phi], axis=-1)


def _grid_steps(grid: ProductGrid) -> np.ndarray:
    if isinstance(grid.manifold, Torus):
        return np.full(grid.manifold.d, 2 * math.pi / grid.shape[0])
    return np.array([math.pi / grid.shape[0], 2 * math.pi / grid.shape[1]])


def refine_sup(
    space: SpectralSpace,
    a: np.ndarray,
    grid: ProductGrid,
    values: np.ndarray,
    candidates: int = 8,
    iterations: int = 4,
) -> np.ndarray:
    """Max |P| per row: grid maximum improved by local parabolic refinement.

    The ``candidates`` largest grid values of each row are moved by
    coordinate-wise parabolic steps with a halving stencil.  Every value
    reported is an exact evaluation of P, so the result never exceeds the
    true sup norm.
    """
    absv = np.abs(values)
    best = absv.max(axis=1)
    k = min(candidates, values.shape[1])
    top = np.argpartition(absv, -k, axis=1)[:, -k:]
    coords = _grid_coords(grid)[top]  # (T, k, c)
    sign = np.sign(np.take_along_axis(values, top, axis=1))
    sign[sign == 0] = 1.0
    f0 = np.take_along_axis(absv, top, axis=1)
    steps = _grid_steps(grid)
    ev = _PointEvaluator(space)
    ncoord = coords.shape[-1]
    for _ in range(iterations):
        for axis in range(ncoord):
            h = steps[axis]
            shift = np.zeros(ncoord)
            shift[axis] = h
            probe = np.concatenate([coords - shift, coords + shift], axis=1)
            vals = ev(a, probe)
            fm = sign * vals[:, :k]
            fp = sign * vals[:, k:]
            best = np.maximum(best, np.abs(vals).max(axis=1))
            curv = fm - 2.0 * f0 + fp
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(curv < 0, 0.5 * h * (fm - fp) / curv, h * np.sign(fp - fm))
            step = np.clip(np.nan_to_num(step), -h, h)
            coords = coords.copy()
            coords[..., axis] += step
            f0 = sign * ev(a, coords)
            best = np.maximum(best, np.abs(f0).max(axis=1))
        steps = steps / 2.0
    return best


def sup_grid(space: SpectralSpace, oversampling: float) -> ProductGrid:
    return grid_for(space, int(math.ceil(oversampling * max(space.degree_bound, 1))))


def sup_norm(a: CoefficientVector, oversampling: float = SUP_OVERSAMPLING) -> NormReport:
    """Grid max at ``oversampling`` nodes per unit degree plus local refinement.

    The declared accuracy is the relative change against the same procedure
    at twice the oversampling.
    """
    if oversampling < 2:
        raise DomainError("oversampling must be >= 2")
    vals = []
    for rho in (oversampling, 2 * oversampling):
        grid = sup_grid(a.space, rho)
        g = GridTransform(a.space, grid).synth(a.values)
        vals.append(float(refine_sup(a.space, a.values[None, :], grid, g)[0]))
    acc = abs(vals[1] - vals[0]) / vals[1] if vals[1] > 0 else 0.0
    return NormReport(INF, max(vals), "grid-max-refined", acc)


def norm(a: CoefficientVector, p, **kw) -> NormReport:
    p = parse_exponent(p)
    if p == INF:
        return sup_norm(a, **kw)
    return lp_norm(a, p, **kw)


# -- batched norms for Monte Carlo --------------------------------------------------


@dataclass
class NormEngine:
    """Norms of many polynomials of one space, sharing grids across exponents.

    p = 2 uses Parseval; even integer p an exact grid; p = inf the refined
    grid maximum; other p an oversampled grid whose accuracy is calibrated on
    the first batch (relative change against the next finer grid) and raised
    until it is within ``rtol``.
    """

    space: SpectralSpace
    exponents: tuple
    lp_oversampling: float = LP_OVERSAMPLING
    sup_oversampling: float = SUP_OVERSAMPLING
    rtol: float = 5e-3
    chunk: int | None = None
    accuracy: dict = field(default_factory=dict)

    def __post_init__(self):
        self.exponents = tuple(sorted({parse_exponent(p) for p in self.exponents}))
        self._degrees: dict[float, int] = {}
        db = max(self.space.degree_bound, 1)
        for p in self.exponents:
            if p == 2:
                continue
            if p == INF:
                self._degrees[p] = sup_grid(self.space, self.sup_oversampling).degree
            elif _is_even_integer(p):
                self._degrees[p] = grid_for(self.space, int(p) * self.space.degree_bound).degree
            else:
                self._degrees[p] = grid_for(self.space, int(math.ceil(self.lp_oversampling * db))).degree
        self._transforms: dict[int, GridTransform] = {}
        self._calibrated = False
        if self.chunk is None:
            biggest = max([ProductGrid(self.space.manifold, d).size for d in self._degrees.values()] or [1])
            self.chunk = int(max(1, min(256, 2**23 // max(biggest, self.space.N))))

    def _transform(self, degree: int) -> GridTransform:
        if degree not in self._transforms:
            self._transforms[degree] = GridTransform(self.space, ProductGrid(self.space.manifold, degree))
        return self._transforms[degree]

    def _calibrate(self, a: np.ndarray):
        for p in self.exponents:
            if p == 2 or _is_even_integer(p):
                self.accuracy[p] = 0.0
                continue
            while True:
                coarse = self._transform(self._degrees[p])
                fine_grid = coarse.grid.refined()
                if p == INF:
                    lo = refine_sup(self.space, a, coarse.grid, coarse.synth(a))
                    hi = refine_sup(self.space, a, fine_grid, GridTransform(self.space, fine_grid).synth(a))
                else:
                    lo = _grid_lp(coarse.synth(a), coarse.grid.weights, p)
                    hi = _grid_lp(GridTransform(self.space, fine_grid).synth(a), fine_grid.weights, p)
                acc = float(np.max(np.abs(hi - lo) / hi))
                if acc <= self.rtol:
                    self.accuracy[p] = acc
                    break
                if fine_grid.size > MAX_GRID_NODES:
                    raise AccuracyError(
                        f"L_{format_exponent(p)} norms on {self.space!r} did not reach rtol={self.rtol}"
                    )
                self._degrees[p] = fine_grid.degree
        self._calibrated = True

    def compute(self, a: np.ndarray) -> dict[float, np.ndarray]:
        a = np.atleast_2d(np.asarray(a, float))
        if not self._calibrated:
            self._calibrate(a[: min(len(a), 8)])
        out = {p: np.empty(len(a)) for p in self.exponents}
        for lo in range(0, len(a), self.chunk):
            block = a[lo : lo + self.chunk]
            by_degree: dict[int, list[float]] = {}
            for p in self.exponents:
                if p == 2:
                    out[p][lo : lo + len(block)] = np.linalg.norm(block, axis=1)
                else:
                    by_degree.setdefault(self._degrees[p], []).append(p)
            for degree, ps in by_degree.items():
                tr = self._transform(degree)
                vals = tr.synth(block)
                for p in ps:
                    if p == INF:
                        res = refine_sup(self.space, block, tr.grid, vals)
                    else:
                        res = _grid_lp(vals, tr.grid.weights, p)
                    out[p][lo : lo + len(block)] = res
        return out
