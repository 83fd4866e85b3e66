"""Monte Carlo estimators for norm ratios and moments, worst-case factors,
and diagnostics of normalized point evaluations.

All estimators draw coefficients with ``sigma = 1`` from per-trial Philox
substreams, so any subset of trials can be recomputed independently and
results are reduced in trial order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyError, InvalidArgument, PreconditionError
from .kernel import kernel_diagonal
from .manifold import Sphere2, Torus
from .pointsets import SeparatedSet
from .quadrature import GridTransform, ProductGrid
from .randpoly import (
    INF,
    LP_OVERSAMPLING,
    CoefficientVector,
    NormEngine,
    format_exponent,
    lp_norm,
    parse_exponent,
    sample_batch,
    sup_norm,
)
from .spectrum import SpectralSpace, build_space, evaluate_basis

MC_RTOL = 5e-3
SAMPLE_CHUNK = 2000
SMALL_BALL_TS = tuple(np.round(np.arange(0.05, 0.46, 0.05), 2))


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    trials: int
    seed: int
    metadata: dict = field(default_factory=dict)

    def row(self) -> dict:
        """Flat record with the fixed report columns first."""
        md = self.metadata
        out = {
            "manifold": md.get("manifold"),
            "d": md.get("d"),
            "n": md.get("n"),
            "p": md.get("p", ""),
            "q": md.get("q", ""),
            "trials": self.trials,
            "seed": self.seed,
            "value": self.value,
            "stderr": self.stderr,
        }
        for k, v in md.items():
            out.setdefault(k, v)
        return out

    def to_json(self) -> str:
        return json.dumps(self.row(), sort_keys=False)


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, float)
    if len(x) < 2:
        raise InvalidArgument("need at least 2 trials")
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x)))


def _base_meta(space: SpectralSpace) -> dict:
    return {"manifold": space.manifold.name, "d": space.d, "n": space.n}


# -- shared norm samples ------------------------------------------------------

_NORM_CACHE: dict[tuple, np.ndarray] = {}
_ACCURACY: dict[tuple, float] = {}


def clear_cache():
    _NORM_CACHE.clear()
    _ACCURACY.clear()


def norm_samples(
    space: SpectralSpace,
    exponents,
    trials: int,
    seed: int,
    rtol: float = MC_RTOL,
    oversampling: float = LP_OVERSAMPLING,
) -> dict[float, np.ndarray]:
    """||P_a||_p for trials 0..trials-1 of ``seed``, one array per exponent.

    Results are memoized per (space, exponent, trials, seed, rtol,
    oversampling) so that
    estimators sharing a sample do not recompute its norms.
    """
    if trials < 2:
        raise InvalidArgument("need at least 2 trials")
    exps = sorted({parse_exponent(p) for p in exponents})
    base = (space.manifold.name, float(space.n), int(trials), int(seed), float(rtol), float(oversampling))
    missing = [p for p in exps if base + (p,) not in _NORM_CACHE]
    if missing:
        engine = NormEngine(space, tuple(missing), lp_oversampling=oversampling,
                            sup_oversampling=oversampling, rtol=rtol)
        out = {p: np.empty(trials) for p in engine.exponents}
        try:
            for lo in range(0, trials, SAMPLE_CHUNK):
                hi = min(trials, lo + SAMPLE_CHUNK)
                res = engine.compute(sample_batch(space, seed, np.arange(lo, hi)))
                for p in engine.exponents:
                    out[p][lo:hi] = res[p]
        except AccuracyError as exc:
            raise AccuracyError(
                f"norm accuracy not met on {space.manifold.name}, n={space.n}, "
                f"seed={seed}, trials={trials}: {exc}"
            ) from exc
        for p in engine.exponents:
            _NORM_CACHE[base + (p,)] = out[p]
            _ACCURACY[base + (p,)] = engine.accuracy.get(p, 0.0)
    return {p: _NORM_CACHE[base + (p,)] for p in exps}


def declared_accuracy(
    space: SpectralSpace, p, trials: int, seed: int, rtol: float = MC_RTOL, oversampling: float = LP_OVERSAMPLING
) -> float:
    key = (space.manifold.name, float(space.n), int(trials), int(seed), float(rtol), float(oversampling),
           parse_exponent(p))
    return _ACCURACY.get(key, math.nan)


# -- estimators -------------------------------------------------------------------


def average_factor_samples(
    p, q, space: SpectralSpace, trials: int, seed: int, oversampling: float = LP_OVERSAMPLING
) -> np.ndarray:
    """Per-trial ratios ||P_a||_q / ||P_a||_p."""
    p, q = parse_exponent(p), parse_exponent(q)
    if p == q:
        if trials < 2:
            raise InvalidArgument("need at least 2 trials")
        return np.ones(trials)
    norms = norm_samples(space, (p, q), trials, seed, oversampling=oversampling)
    return norms[q] / norms[p]


def estimate_average_factor(
    p, q, space: SpectralSpace, trials: int, seed: int, oversampling: float = LP_OVERSAMPLING
) -> Estimate:
    p, q = parse_exponent(p), parse_exponent(q)
    ratios = average_factor_samples(p, q, space, trials, seed, oversampling)
    value, err = _mean_stderr(ratios)
    meta = _base_meta(space) | {"p": format_exponent(p), "q": format_exponent(q), "estimand": "average_factor"}
    if p != q:
        meta["accuracy"] = max(
            declared_accuracy(space, p, trials, seed, oversampling=oversampling),
            declared_accuracy(space, q, trials, seed, oversampling=oversampling),
        )
    return Estimate(value, err, trials, seed, meta)


def estimate_moment(
    q, s_power: float, space: SpectralSpace, trials: int, seed: int, oversampling: float = LP_OVERSAMPLING
) -> Estimate:
    """Sample mean of ||P_a||_q^s."""
    q = parse_exponent(q)
    if not s_power >= 1:
        raise PreconditionError(f"moment order must be >= 1, got {s_power}")
    norms = norm_samples(space, (q,), trials, seed, oversampling=oversampling)[q]
    value, err = _mean_stderr(norms**s_power)
    meta = _base_meta(space) | {"q": format_exponent(q), "s": s_power, "estimand": "moment",
                                "accuracy": declared_accuracy(space, q, trials, seed, oversampling=oversampling)}
    return Estimate(value, err, trials, seed, meta)


def estimate_inverse_sup_moment(
    r: float, space: SpectralSpace, trials: int, seed: int, oversampling: float = LP_OVERSAMPLING
) -> Estimate:
    """Sample mean of ||P_a||_inf^{-r}; requires r < N."""
    if not r > 0:
        raise PreconditionError(f"r must be positive, got {r}")
    if not r < space.N:
        raise PreconditionError(f"need r < N (r={r}, N={space.N}); the inverse moment is infinite otherwise")
    sup = norm_samples(space, (INF,), trials, seed, oversampling=oversampling)[INF]
    if np.any(sup < 1e-300):
        raise AccuracyError("sup norm underflow in inverse moment")
    value, err = _mean_stderr(sup ** (-r))
    meta = _base_meta(space) | {"p": "inf", "r": r, "estimand": "inverse_sup_moment",
                                "accuracy": declared_accuracy(space, INF, trials, seed, oversampling=oversampling)}
    return Estimate(value, err, trials, seed, meta)


@dataclass(frozen=True)
class DualityResult:
    mean_ratio: float
    mean_inverse: float
    product: float
    passed: bool


def duality_check(p, q, space: SpectralSpace, trials: int, seed: int) -> DualityResult:
    """mean(r) * mean(1/r) >= 1 on one sample of ratios (Cauchy-Schwarz)."""
    ratios = average_factor_samples(p, q, space, trials, seed)
    a = float(np.mean(ratios))
    b = float(np.mean(1.0 / ratios))
    return DualityResult(a, b, a * b, a * b >= 1.0 - 1e-12)


@dataclass(frozen=True)
class DecouplingReport:
    form: str
    lhs: Estimate
    rhs: Estimate
    ratio: float


def ratio_decoupling_check(
    k: float, l: float, q, space: SpectralSpace, trials: int, seed: int, form: str = "q_over_2"
) -> DecouplingReport:
    """Compare both sides of the moment decoupling identities.

    form "q_over_2":  E[||P||_q^k / ||P||_2^l]  vs  n^{-dl/2} E||P||_q^k   (needs l < k + N)
    form "2_over_p":  E[||P||_2^k / ||P||_q^l]  vs  n^{dk/2} E||P||_q^{-l} (needs l < N)
    """
    q = parse_exponent(q)
    if not (k > 0 and l > 0):
        raise PreconditionError("k and l must be positive")
    n, d, big_n = space.n, space.d, space.N
    norms = norm_samples(space, (2.0, q), trials, seed)
    two, nq = norms[2.0], norms[q]
    meta = _base_meta(space) | {"q": format_exponent(q), "k": k, "l": l, "form": form}
    if form == "q_over_2":
        if not l < k + big_n:
            raise PreconditionError(f"decoupling needs l < k + N (l={l}, k={k}, N={big_n})")
        lhs = _mean_stderr(nq**k / two**l)
        rhs = _mean_stderr(n ** (-d * l / 2) * nq**k)
    elif form == "2_over_p":
        if not l < big_n:
            raise PreconditionError(f"decoupling needs l < N (l={l}, N={big_n})")
        lhs = _mean_stderr(two**k / nq**l)
        rhs = _mean_stderr(n ** (d * k / 2) * nq ** (-l))
    else:
        raise InvalidArgument(f"unknown form {form!r}")
    left = Estimate(*lhs, trials, seed, meta | {"side": "lhs"})
    right = Estimate(*rhs, trials, seed, meta | {"side": "rhs"})
    return DecouplingReport(form, left, right, left.value / right.value)


# -- worst-case factor ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WorstFactor:
    value: float
    flag: str  # "exact" or "lower-bound"
    witness: CoefficientVector
    p: float
    q: float
    n: float
    notes: tuple = ()

    @property
    def exact(self) -> bool:
        return self.flag == "exact"


def _ascent_degree(space: SpectralSpace, exps) -> int:
    db = max(space.degree_bound, 1)
    deg = 2 * db + 1
    for p in exps:
        if p != INF and float(p).is_integer() and int(p) % 2 == 0:
            deg = max(deg, int(p) * db)
        else:
            deg = max(deg, 8 * db)
    return deg


class _LogRatio:
    """log ||P||_q - log ||P||_p on a fixed grid, with its gradient."""

    def __init__(self, space: SpectralSpace, p: float, q: float):
        self.p, self.q = p, q
        self.tr = GridTransform(space, ProductGrid(space.manifold, _ascent_degree(space, (p, q))))
        self.w = self.tr.grid.weights

    def _log_norm(self, v: np.ndarray, p: float, grad: bool):
        absv = np.abs(v)
        if p == INF:
            idx = np.argmax(absv, axis=1)
            top = absv[np.arange(len(v)), idx]
            val = np.log(top)
            if not grad:
                return val, None
            g = np.zeros_like(v)
            g[np.arange(len(v)), idx] = np.sign(v[np.arange(len(v)), idx]) / (top * self.w[idx])
            return val, g
        scale = absv.max(axis=1, keepdims=True)
        u = absv / scale
        sp = (u**p) @ self.w
        val = np.log(scale[:, 0]) + np.log(sp) / p
        if not grad:
            return val, None
        g = np.sign(v) * u ** (p - 1) / (scale * sp[:, None])
        return val, g

    def value(self, a: np.ndarray) -> np.ndarray:
        v = self.tr.synth(a)
        return self._log_norm(v, self.q, False)[0] - self._log_norm(v, self.p, False)[0]

    def value_grad(self, a: np.ndarray):
        v = self.tr.synth(a)
        fq, gq = self._log_norm(v, self.q, True)
        fp, gp = self._log_norm(v, self.p, True)
        return fq - fp, self.tr.adjoint(gq - gp)


def _kernel_starts(space: SpectralSpace, powers=(1, 2, 4)) -> list[np.ndarray]:
    """Coefficients of e(., x0, n/k)^k projected to the space, x0 fixed."""
    m = space.manifold
    x0 = np.zeros(m.coord_dim)
    if isinstance(m, Sphere2):
        x0[2] = 1.0
    starts = []
    for k in powers:
        sub = build_space(m, space.n / k)
        if k == 1 or sub.N < 2:
            starts.append(evaluate_basis(space, x0)[0])
            continue
        grid = ProductGrid(m, _ascent_degree(space, (2.0,)) + 1)
        kern = GridTransform(sub, grid).synth(evaluate_basis(sub, x0))[0]
        starts.append(GridTransform(space, grid).adjoint((kern**k)[None, :])[0])
    return starts


def _final_norm(a: CoefficientVector, p: float, rtol: float) -> float:
    if p == INF:
        return sup_norm(a).value
    try:
        return lp_norm(a, p, oversample=True, rtol=rtol).value
    except AccuracyError:
        return lp_norm(a, p, oversample=True, rtol=max(rtol, MC_RTOL)).value


def worst_factor(
    p,
    q,
    space: SpectralSpace,
    starts: int = 32,
    max_iter: int = 300,
    seed: int = 0,
    rtol: float = 1e-6,
) -> WorstFactor:
    """sup ||P||_q / ||P||_p over the space.

    q <= p gives exactly 1 (attained by constants) and (2, inf) gives exactly
    sqrt(max_x e(x, x, n)) (attained by the reproducing kernel).  Otherwise a
    multi-start projected gradient ascent on the unit sphere of coefficients
    returns the best ratio found, flagged as a lower bound.
    """
    p, q = parse_exponent(p), parse_exponent(q)
    n = space.n
    e0 = np.zeros(space.N)
    e0[0] = 1.0
    if q <= p:
        return WorstFactor(1.0, "exact", CoefficientVector(e0, space), p, q, n)
    if (p, q) == (2.0, INF):
        m = space.manifold
        probes = m.random_points(np.random.default_rng(seed), 16)
        diag = np.atleast_1d(kernel_diagonal(space, probes))
        j = int(np.argmax(diag))
        witness = evaluate_basis(space, probes[j])[0] / math.sqrt(diag[j])
        return WorstFactor(float(math.sqrt(diag[j])), "exact", CoefficientVector(witness, space), p, q, n)

    obj = _LogRatio(space, p, q)
    init = [e0] + _kernel_starts(space)
    n_random = max(0, starts - len(init))
    if n_random:
        init += list(sample_batch(space, seed, np.arange(n_random)))
    a = np.array(init[: max(starts, 1)], float)
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    f, g = obj.value_grad(a)
    step = np.full(len(a), 0.5)
    active = np.ones(len(a), dtype=bool)
    stall = np.zeros(len(a), dtype=int)
    notes = []
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        gi = g[idx] - np.sum(g[idx] * a[idx], axis=1, keepdims=True) * a[idx]
        gnorm = np.linalg.norm(gi, axis=1)
        gnorm[gnorm == 0] = 1.0
        direction = gi / gnorm[:, None]
        accepted = np.zeros(len(idx), dtype=bool)
        trial_step = step[idx].copy()
        new_a = a[idx].copy()
        new_f = f[idx].copy()
        for _ in range(30):
            todo = ~accepted
            if not todo.any():
                break
            cand = a[idx][todo] + trial_step[todo, None] * direction[todo]
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            fc = obj.value(cand)
            good = fc > f[idx][todo]
            pos = np.flatnonzero(todo)
            new_a[pos[good]] = cand[good]
            new_f[pos[good]] = fc[good]
            accepted[pos[good]] = True
            trial_step[pos[~good]] *= 0.5
        gain = new_f - f[idx]
        a[idx], f[idx] = new_a, new_f
        step[idx] = np.where(accepted, np.minimum(trial_step * 1.5, 1.0), trial_step)
        stall[idx] = np.where(gain < 1e-10, stall[idx] + 1, 0)
        done = (stall[idx] >= 5) | (step[idx] < 1e-12)
        active[idx[done]] = False
        _, g_new = obj.value_grad(a[idx])
        g[idx] = g_new
    if active.any():
        notes.append(f"{int(active.sum())} of {len(a)} starts hit max_iter={max_iter}")

    best = int(np.argmax(f))
    witness = CoefficientVector(a[best], space)
    value = _final_norm(witness, q, rtol) / _final_norm(witness, p, rtol)
    return WorstFactor(float(max(value, 1.0)), "lower-bound", witness, p, q, n, tuple(notes))


# -- normalized point evaluations --------------------------------------------------


@dataclass(frozen=True)
class SmallBallReport:
    M: int
    trials: int
    seed: int
    variance: np.ndarray
    variance_stderr: np.ndarray
    mean_max: float
    mean_max_stderr: float
    max_over_sqrt_log_m: float
    median: float
    ts: tuple
    probabilities: np.ndarray
    bounds: np.ndarray
    passed: np.ndarray
    pair_index: np.ndarray
    pair_mc: np.ndarray
    pair_stderr: np.ndarray
    pair_theory: np.ndarray

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))


def small_ball_bound(median: float, t) -> np.ndarray:
    """(1/2) exp(-(1/4) m^2 ln(1/(2t)))."""
    t = np.asarray(t, float)
    return 0.5 * np.exp(-0.25 * median**2 * np.log(1.0 / (2.0 * t)))


def normalized_point_process(
    space: SpectralSpace,
    xi: SeparatedSet,
    trials: int,
    seed: int,
    ts=SMALL_BALL_TS,
    slack: float = 1.05,
    pairs: int = 16,
    chunk: int = 5000,
) -> SmallBallReport:
    """X_j = P_a(xi_j) / sqrt(e(xi_j, xi_j, n)) over many trials."""
    if type(xi.manifold) is not type(space.manifold) or xi.manifold.dim != space.d:
        raise InvalidArgument("point set and space live on different manifolds")
    if xi.M < 2:
        raise InvalidArgument("need at least 2 points")
    basis = evaluate_basis(space, xi.points)
    diag = np.sum(basis * basis, axis=1)
    basis = basis / np.sqrt(diag)[:, None]
    m_count = xi.M
    # pairs: nearest neighbours first (strong correlation), then spread-out ones
    rng = np.random.default_rng(seed)
    first = rng.choice(m_count, size=min(pairs, m_count), replace=False)
    dist = np.array([xi.manifold.distance(xi.points, xi.points[i]) for i in first])
    dist[np.arange(len(first)), first] = np.inf
    near = np.argmin(dist, axis=1)
    far = rng.integers(0, m_count, size=len(first))
    far = np.where(far == first, (far + 1) % m_count, far)
    pair_index = np.concatenate([np.stack([first, near], 1), np.stack([first, far], 1)])
    corr = np.sum(basis[pair_index[:, 0]] * basis[pair_index[:, 1]], axis=1)
    pair_theory = 2.0 - 2.0 * corr

    s1 = np.zeros(m_count)
    s2 = np.zeros(m_count)
    s4 = np.zeros(m_count)
    maxima = np.empty(trials)
    d1 = np.zeros(len(pair_index))
    d2 = np.zeros(len(pair_index))
    for lo in range(0, trials, chunk):
        hi = min(trials, lo + chunk)
        a = sample_batch(space, seed, np.arange(lo, hi))
        x = a @ basis.T
        s1 += x.sum(axis=0)
        x2 = x * x
        s2 += x2.sum(axis=0)
        s4 += (x2 * x2).sum(axis=0)
        maxima[lo:hi] = np.abs(x).max(axis=1)
        diff2 = (x[:, pair_index[:, 0]] - x[:, pair_index[:, 1]]) ** 2
        d1 += diff2.sum(axis=0)
        d2 += (diff2 * diff2).sum(axis=0)
    mean = s1 / trials
    var = s2 / trials - mean**2
    var_se = np.sqrt(np.maximum(s4 / trials - (s2 / trials) ** 2, 0.0) / trials)
    pair_mc = d1 / trials
    pair_se = np.sqrt(np.maximum(d2 / trials - pair_mc**2, 0.0) / trials)
    mean_max, mean_max_se = _mean_stderr(maxima)
    median = float(np.median(maxima))
    ts = tuple(float(t) for t in ts)
    srt = np.sort(maxima)
    probs = np.searchsorted(srt, np.array(ts) * median, side="right") / trials
    bounds = small_ball_bound(median, ts)
    return SmallBallReport(
        M=m_count,
        trials=trials,
        seed=seed,
        variance=var,
        variance_stderr=var_se,
        mean_max=mean_max,
        mean_max_stderr=mean_max_se,
        max_over_sqrt_log_m=mean_max / math.sqrt(math.log(m_count)),
        median=median,
        ts=ts,
        probabilities=probs,
        bounds=bounds,
        passed=probs <= slack * bounds,
        pair_index=pair_index,
        pair_mc=pair_mc,
        pair_stderr=pair_se,
        pair_theory=pair_theory,
    )
