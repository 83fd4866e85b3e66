"""Scaling fits, sweeps, pass/fail verdicts and report files.

Every verdict is a pure function of the rows written to disk (plus the
sidecar configuration), so a saved report can be re-judged without
re-running any Monte Carlo.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bessel import phi_d_zeros
from .errors import DomainError, InvalidArgument
from .estimators import (
    estimate_average_factor,
    estimate_inverse_sup_moment,
    estimate_moment,
    worst_factor,
)
from .kernel import asymptotic_residual, christoffel
from .manifold import Manifold, Sphere2, from_name, sphere_points
from .randpoly import INF, format_exponent, parse_exponent
from .spectrum import build_space, weyl_ratio

SCHEMA_VERSION = 1
CSV_COLUMNS = ("manifold", "d", "n", "p", "q", "trials", "seed", "value", "stderr")

DEFAULT_NS = {
    "t1": (16, 32, 64, 128, 256, 512),
    "t2": (8, 16, 32, 64),
    "t3": (4, 6, 8, 12),
    "s2": (8, 16, 32, 64),
}
DEFAULT_TRIALS = 2000
POWER_PAIRS = ((1.0, 2.0), (2.0, 4.0), (4.0, 1.0))
T1_PAIRS = POWER_PAIRS + ((2.0, INF), (1.0, INF), (INF, 2.0))
WORST_PAIRS = ((2.0, INF), (4.0, 2.0), (1.0, 4.0))

THRESHOLDS = {
    "power_abs_alpha": 0.05,
    "power_band": 1.5,
    "sqrtlog_r2": 0.95,
    "sqrtlog_band": 1.6,
    "invsqrtlog_band": 1.6,
    "duality_tol": 1e-12,
    "worst_exact_tol": 0.02,
    "worst_lower_fraction": 0.9,
    "moment_slope_tol": 0.05,
    "moment_sup_band": 1.6,
    "inverse_growth": 1.3,
    "weyl_band": 1.5,
    "christoffel_band": 1.5,
    "christoffel_spread": 1e-10,
    "kernel_margin": 1.25,
    "kernel_zero_exclusion": 0.25,
}


# -- fitting --------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    model: str
    params: dict
    r2: float
    residuals: tuple
    band_ratio: float

    def to_dict(self) -> dict:
        return {"model": self.model, "params": self.params, "r2": self.r2,
                "band_ratio": self.band_ratio, "residuals": list(self.residuals)}


def _normalizer(model: str, ns: np.ndarray) -> np.ndarray:
    if model == "power":
        return np.ones_like(ns)
    if model == "sqrtlog":
        return 1.0 / np.sqrt(np.log(ns))
    return np.sqrt(np.log(ns))


def fit_scaling(ns, values, model: str, normalizer=None) -> ScalingFit:
    """OLS in the model's transformed coordinates.

    power:      log v   = log c + alpha log n
    sqrtlog:    v^2     = a + b ln n
    invsqrtlog: v^-2    = a + b ln n

    The band ratio is max/min of v * normalizer, by default 1, 1/sqrt(ln n)
    and sqrt(ln n) for the three models.
    """
    ns = np.asarray(ns, float)
    v = np.asarray(values, float)
    if ns.shape != v.shape:
        raise InvalidArgument("ns and values must have the same length")
    if len(ns) < 3:
        raise InvalidArgument("need at least 3 points to fit")
    if np.any(v <= 0) or np.any(ns <= 0):
        raise DomainError("values and degrees must be positive")
    if model == "power":
        x, y = np.log(ns), np.log(v)
    elif model == "sqrtlog":
        x, y = np.log(ns), v**2
    elif model == "invsqrtlog":
        x, y = np.log(ns), v**-2.0
    else:
        raise InvalidArgument(f"unknown model {model!r}")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot <= 1e-30 * max(1.0, float(np.sum(y * y))):
        r2 = 1.0 if ss_res <= 1e-24 * max(1.0, float(np.sum(y * y))) else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    if model == "power":
        params = {"c": float(math.exp(intercept)), "alpha": float(slope)}
    else:
        params = {"a": float(intercept), "b": float(slope)}
    norm = _normalizer(model, ns) if normalizer is None else np.asarray(normalizer, float)
    scaled = v * norm
    return ScalingFit(model, params, float(r2), tuple(float(r) for r in resid),
                      float(scaled.max() / scaled.min()))


def regime(p: float, q: float) -> str:
    """Which row of the average-factor table governs (p, q)."""
    if q == INF and p < INF:
        return "sqrtlog"
    if p == INF and q < INF:
        return "invsqrtlog"
    return "power"


def worst_exponent(d: int, p: float, q: float) -> float:
    """d (1/p - 1/q)_+."""
    inv = (lambda t: 0.0 if t == INF else 1.0 / t)
    return d * max(inv(p) - inv(q), 0.0)


def worst_is_exact(p: float, q: float) -> bool:
    return q <= p or (p, q) == (2.0, INF)


# -- verdicts ------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return asdict(self)


def _group(rows, keys=("manifold", "p", "q")) -> dict:
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    for g in groups.values():
        g.sort(key=lambda r: float(r["n"]))
    return groups


def average_verdicts(rows, pairs=None) -> tuple[list[Verdict], dict]:
    """Regime fits per (manifold, p, q) plus the duality product per n.

    ``pairs`` (exponent strings) restricts the regime verdicts; fits are
    reported for every pair present.
    """
    verdicts, fits = [], {}
    th = THRESHOLDS
    wanted = None if pairs is None else {tuple(pq) for pq in pairs}
    for (man, ps, qs), grp in sorted(_group(rows).items()):
        p, q = parse_exponent(ps), parse_exponent(qs)
        ns = [float(r["n"]) for r in grp]
        vals = [float(r["value"]) for r in grp]
        name = f"{man} ({ps},{qs})"
        if p == q:
            if wanted is not None and (ps, qs) not in wanted:
                continue
            ok = all(v == 1.0 for v in vals)
            verdicts.append(Verdict(name, ok, "p = q: every ratio is 1"))
            continue
        if len(ns) < 3:
            continue
        model = regime(p, q)
        fit = fit_scaling(ns, vals, model)
        fits[f"{man},{ps},{qs}"] = fit.to_dict()
        if wanted is not None and (ps, qs) not in wanted:
            continue
        if model == "power":
            ok = abs(fit.params["alpha"]) <= th["power_abs_alpha"] and fit.band_ratio <= th["power_band"]
            detail = f"alpha={fit.params['alpha']:.4f} band={fit.band_ratio:.4f}"
        elif model == "sqrtlog":
            ok = fit.r2 >= th["sqrtlog_r2"] and fit.params["b"] > 0 and fit.band_ratio <= th["sqrtlog_band"]
            detail = f"r2={fit.r2:.4f} b={fit.params['b']:.4f} band={fit.band_ratio:.4f}"
        else:
            ok = fit.params["b"] > 0 and fit.band_ratio <= th["invsqrtlog_band"]
            detail = f"b={fit.params['b']:.4f} band={fit.band_ratio:.4f}"
        verdicts.append(Verdict(name, bool(ok), detail))
    verdicts.extend(duality_verdicts(rows))
    return verdicts, fits


def duality_verdicts(rows) -> list[Verdict]:
    """value(p, q) * value(q, p) >= 1 wherever both directions share a sample."""
    index = {(r["manifold"], r["n"], r["p"], r["q"], r["seed"], r["trials"]): float(r["value"]) for r in rows}
    out = []
    for (man, n, ps, qs, seed, trials), v in sorted(index.items()):
        if ps >= qs:
            continue
        back = index.get((man, n, qs, ps, seed, trials))
        if back is None:
            continue
        prod = v * back
        out.append(Verdict(f"duality {man} n={n} ({ps},{qs})", prod >= 1.0 - THRESHOLDS["duality_tol"],
                           f"product={prod!r}"))
    return out


def worst_verdicts(rows) -> tuple[list[Verdict], dict]:
    verdicts, fits = [], {}
    for (man, ps, qs), grp in sorted(_group(rows).items()):
        p, q = parse_exponent(ps), parse_exponent(qs)
        ns = [float(r["n"]) for r in grp]
        vals = [float(r["value"]) for r in grp]
        if len(ns) < 3:
            continue
        d = int(grp[0]["d"])
        target = worst_exponent(d, p, q)
        fit = fit_scaling(ns, vals, "power", normalizer=np.asarray(ns) ** -target)
        fits[f"{man},{ps},{qs}"] = fit.to_dict()
        alpha = fit.params["alpha"]
        if worst_is_exact(p, q):
            ok = abs(alpha - target) <= THRESHOLDS["worst_exact_tol"]
            detail = f"exact: alpha={alpha:.4f} target={target:.4f}"
        else:
            ok = alpha >= THRESHOLDS["worst_lower_fraction"] * target
            detail = f"lower bound: alpha={alpha:.4f} >= {THRESHOLDS['worst_lower_fraction']}*{target:.4f}"
        verdicts.append(Verdict(f"worst {man} ({ps},{qs})", bool(ok), detail))
    return verdicts, fits


def moment_verdicts(rows, s_power: float = 1.0, r: float = 2.0) -> tuple[list[Verdict], dict]:
    """E||P||_q^s slope d s/2 for finite q; sup-moment band; inverse sup moment growth."""
    verdicts, fits = [], {}
    for (man, ps, qs), grp in sorted(_group(rows).items()):
        ns = np.array([float(x["n"]) for x in grp])
        vals = np.array([float(x["value"]) for x in grp])
        d = int(grp[0]["d"])
        if len(ns) < 3:
            continue
        if ps == "" and qs != "inf":
            target = d * s_power / 2
            fit = fit_scaling(ns, vals, "power", normalizer=ns**-target)
            fits[f"{man},moment,{qs}"] = fit.to_dict()
            alpha = fit.params["alpha"]
            ok = abs(alpha - target) <= THRESHOLDS["moment_slope_tol"]
            verdicts.append(Verdict(f"moment {man} q={qs} s={s_power}", bool(ok),
                                    f"alpha={alpha:.4f} target={target:.4f}"))
        elif ps == "" and qs == "inf":
            norm = (ns ** (d / 2) * np.sqrt(np.log(ns))) ** -s_power
            fit = fit_scaling(ns, vals, "power", normalizer=norm)
            fits[f"{man},moment,inf"] = fit.to_dict()
            ok = fit.band_ratio <= THRESHOLDS["moment_sup_band"]
            verdicts.append(Verdict(f"moment {man} q=inf s={s_power}", bool(ok), f"band={fit.band_ratio:.4f}"))
        elif ps == "inf" and qs == "":
            scaled = vals * ns ** (r * d / 2) * np.log(ns) ** (r / 2)
            growth = float(scaled[-1] / scaled[0])
            fits[f"{man},inverse,inf"] = {"model": "bounded", "params": {"first": float(scaled[0]),
                                          "last": float(scaled[-1])}, "r2": math.nan, "band_ratio":
                                          float(scaled.max() / scaled.min())}
            ok = growth <= THRESHOLDS["inverse_growth"]
            verdicts.append(Verdict(f"inverse sup moment {man} r={r}", bool(ok), f"last/first={growth:.4f}"))
    return verdicts, fits


# -- sweeps -------------------------------------------------------------------------


@dataclass
class SweepConfig:
    manifold: str = "t1"
    ns: tuple = ()
    pairs: tuple = ()
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    s_power: float = 1.0
    r: float = 2.0
    moment_qs: tuple = (4.0, INF)
    worst_pairs: tuple = ()
    starts: int = 32
    oversampling: float = 8.0

    def __post_init__(self):
        from_name(self.manifold)
        self.ns = tuple(float(n) for n in (self.ns or DEFAULT_NS[self.manifold]))
        if any(b <= a for a, b in zip(self.ns, self.ns[1:])):
            raise InvalidArgument("degrees must be strictly increasing")
        if not self.pairs:
            self.pairs = T1_PAIRS if self.manifold == "t1" else POWER_PAIRS
        self.pairs = tuple((parse_exponent(p), parse_exponent(q)) for p, q in self.pairs)
        self.worst_pairs = tuple((parse_exponent(p), parse_exponent(q)) for p, q in (self.worst_pairs or WORST_PAIRS))
        self.moment_qs = tuple(parse_exponent(q) for q in self.moment_qs)
        if self.trials < 2:
            raise InvalidArgument("need at least 2 trials")

    def to_dict(self) -> dict:
        return {
            "manifold": self.manifold,
            "ns": [_fmt_n(n) for n in self.ns],
            "pairs": [[format_exponent(p), format_exponent(q)] for p, q in self.pairs],
            "trials": self.trials,
            "seed": self.seed,
            "s_power": self.s_power,
            "r": self.r,
            "moment_qs": [format_exponent(q) for q in self.moment_qs],
            "worst_pairs": [[format_exponent(p), format_exponent(q)] for p, q in self.worst_pairs],
            "starts": self.starts,
            "oversampling": self.oversampling,
        }

    def hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha1(text.encode()).hexdigest()[:12]


def _fmt_n(n: float):
    return int(n) if float(n).is_integer() else float(n)


@dataclass
class SuiteResult:
    kind: str
    rows: list
    fits: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


def _row(m: Manifold, n, p="", q="", trials="", seed="", value=0.0, stderr=0.0) -> dict:
    return {"manifold": m.name, "d": m.dim, "n": _fmt_n(n), "p": p, "q": q,
            "trials": trials, "seed": seed, "value": float(value), "stderr": float(stderr)}


def run_average_suite(cfg: SweepConfig) -> SuiteResult:
    """Average factors over the sweep, both directions of every pair."""
    m = from_name(cfg.manifold)
    pairs = []
    for p, q in cfg.pairs:
        for pair in ((p, q), (q, p)):
            if pair not in pairs:
                pairs.append(pair)
    rows = []
    for n in cfg.ns:
        s = build_space(m, n)
        for p, q in pairs:
            est = estimate_average_factor(p, q, s, cfg.trials, cfg.seed, cfg.oversampling)
            rows.append(_row(m, n, format_exponent(p), format_exponent(q), cfg.trials, cfg.seed,
                             est.value, est.stderr))
    verdicts, fits = average_verdicts(rows, cfg.to_dict()["pairs"])
    return SuiteResult("average", rows, fits, verdicts)


def run_worst_suite(cfg: SweepConfig) -> SuiteResult:
    m = from_name(cfg.manifold)
    rows = []
    for n in cfg.ns:
        s = build_space(m, n)
        for p, q in cfg.worst_pairs:
            w = worst_factor(p, q, s, starts=cfg.starts, seed=cfg.seed)
            rows.append(_row(m, n, format_exponent(p), format_exponent(q), 0, cfg.seed, w.value, 0.0))
    verdicts, fits = worst_verdicts(rows)
    return SuiteResult("worst", rows, fits, verdicts)


def run_moment_suite(cfg: SweepConfig) -> SuiteResult:
    m = from_name(cfg.manifold)
    rows = []
    for n in cfg.ns:
        s = build_space(m, n)
        for q in cfg.moment_qs:
            est = estimate_moment(q, cfg.s_power, s, cfg.trials, cfg.seed, cfg.oversampling)
            rows.append(_row(m, n, "", format_exponent(q), cfg.trials, cfg.seed, est.value, est.stderr))
        if cfg.r < s.N:
            est = estimate_inverse_sup_moment(cfg.r, s, cfg.trials, cfg.seed, cfg.oversampling)
            rows.append(_row(m, n, "inf", "", cfg.trials, cfg.seed, est.value, est.stderr))
    verdicts, fits = moment_verdicts(rows, cfg.s_power, cfg.r)
    return SuiteResult("moments", rows, fits, verdicts)


def run_weyl(manifold: str, ns) -> SuiteResult:
    m = from_name(manifold)
    rows = [_row(m, n, value=weyl_ratio(build_space(m, n))) for n in ns]
    return SuiteResult("weyl", rows, {}, weyl_verdicts(rows))


def weyl_verdicts(rows) -> list[Verdict]:
    vals = np.array([float(r["value"]) for r in rows])
    band = float(vals.max() / vals.min())
    out = [Verdict(f"weyl band {rows[0]['manifold']}", band <= THRESHOLDS["weyl_band"], f"band={band:.4f}")]
    if rows[0]["manifold"] == "t1":
        ok = all(abs(float(r["value"]) - (2 * math.floor(float(r["n"])) + 1) / float(r["n"])) <= 1e-12
                 for r in rows)
        out.append(Verdict("weyl t1 exact (2n+1)/n", ok, ""))
    return out


def run_christoffel(manifold: str, ns, points: int = 16, seed: int = 0) -> SuiteResult:
    """n^d Lambda(x) at random points: mean in ``value``, relative spread in ``stderr``."""
    m = from_name(manifold)
    pts = m.random_points(np.random.default_rng(seed), points)
    rows = []
    for n in ns:
        s = build_space(m, n)
        vals = np.asarray(christoffel(s, pts)) * float(n) ** m.dim
        rows.append(_row(m, n, value=vals.mean(), stderr=vals.max() / vals.min() - 1.0))
    return SuiteResult("christoffel", rows, {}, christoffel_verdicts(rows))


def christoffel_verdicts(rows) -> list[Verdict]:
    vals = np.array([float(r["value"]) for r in rows])
    spread = max(float(r["stderr"]) for r in rows)
    band = float(vals.max() / vals.min())
    man = rows[0]["manifold"]
    return [
        Verdict(f"christoffel constant in x {man}", spread <= THRESHOLDS["christoffel_spread"], f"spread={spread:.3g}"),
        Verdict(f"christoffel band {man}", band <= THRESHOLDS["christoffel_band"], f"band={band:.4f}"),
    ]


def kernel_pair(m: Manifold, dist: float):
    """Base point and a point at geodesic distance ``dist`` from it."""
    if isinstance(m, Sphere2):
        return np.array([0.0, 0.0, 1.0]), sphere_points(math.cos(dist), 0.0)
    x = np.zeros(m.d)
    y = np.zeros(m.d)
    y[0] = dist
    return x, y


def run_kernel_asym(manifold: str, ns, distances=(0.0, 0.3, 0.7, 1.0, 2.0)) -> SuiteResult:
    """Normalized kernel remainder; ``p`` holds the distance, ``stderr`` the gap to the nearest zero of Phi_d."""
    m = from_name(manifold)
    rows = []
    zeros = phi_d_zeros(m.dim, max(ns) * max(distances) + 10.0)
    for n in ns:
        s = build_space(m, n)
        for dist in distances:
            x, y = kernel_pair(m, dist)
            res = asymptotic_residual(s, x, y)
            gap = float(np.min(np.abs(zeros - float(n) * dist))) if len(zeros) else math.inf
            rows.append(_row(m, n, p=repr(float(dist)), value=res, stderr=gap))
    return SuiteResult("kernel-asym", rows, {}, kernel_asym_verdicts(rows))


def kernel_asym_verdicts(rows) -> list[Verdict]:
    """Constant fitted as the max over the first half of the degrees, checked on the second half."""
    ns = sorted({float(r["n"]) for r in rows})
    first = set(ns[: len(ns) // 2])
    usable = [r for r in rows if float(r["stderr"]) >= THRESHOLDS["kernel_zero_exclusion"]]
    fit_vals = [float(r["value"]) for r in usable if float(r["n"]) in first]
    check_vals = [float(r["value"]) for r in usable if float(r["n"]) not in first]
    if not fit_vals or not check_vals:
        return [Verdict(f"kernel asymptotics {rows[0]['manifold']}", False, "not enough usable points")]
    const = max(fit_vals)
    worst = max(check_vals)
    ok = worst <= THRESHOLDS["kernel_margin"] * const
    return [Verdict(f"kernel asymptotics {rows[0]['manifold']}", bool(ok),
                    f"fitted C={const:.4f}, second half max={worst:.4f}, margin={THRESHOLDS['kernel_margin']}")]


VERDICTS_BY_KIND = {
    "average": lambda rows, cfg: average_verdicts(rows, cfg.get("pairs"))[0],
    "worst": lambda rows, cfg: worst_verdicts(rows)[0],
    "moments": lambda rows, cfg: moment_verdicts(rows, cfg.get("s_power", 1.0), cfg.get("r", 2.0))[0],
    "weyl": lambda rows, cfg: weyl_verdicts(rows),
    "christoffel": lambda rows, cfg: christoffel_verdicts(rows),
    "kernel-asym": lambda rows, cfg: kernel_asym_verdicts(rows),
}


# -- reports ----------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_cell(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_csv_rows(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise InvalidArgument(f"unexpected CSV header {reader.fieldnames}")
        rows = []
        for r in reader:
            r = dict(r)
            r["d"] = int(r["d"])
            n = float(r["n"])
            r["n"] = int(n) if n.is_integer() else n
            r["trials"] = int(r["trials"]) if r["trials"] != "" else ""
            r["seed"] = int(r["seed"]) if r["seed"] != "" else ""
            r["value"] = float(r["value"])
            r["stderr"] = float(r["stderr"])
            rows.append(r)
    return rows


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def emit_report(result: SuiteResult, out, fmt: str = "csv", config: dict | None = None) -> list[Path]:
    """Write ``<out>.csv`` plus ``<out>.meta.json``, or a single ``<out>.json``.

    Output is deterministic: no timestamps, fixed column and key order.
    """
    if fmt not in ("csv", "json"):
        raise InvalidArgument(f"unknown format {fmt!r}")
    out = Path(out)
    config = config or {}
    meta = {
        "schema_version": SCHEMA_VERSION,
        "kind": result.kind,
        "config_hash": hashlib.sha1(json.dumps(config, sort_keys=True).encode()).hexdigest()[:12],
        "config": config,
        "fits": [{"key": k} | v for k, v in sorted(result.fits.items())],
        "verdicts": [v.to_dict() for v in result.verdicts],
        "passed": result.passed,
    }
    written = []
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            path = out.with_suffix(".csv")
            path.write_text(rows_to_csv(result.rows))
            side = out.with_suffix(".meta.json")
            side.write_text(json.dumps(_clean(meta), indent=2) + "\n")
            written = [path, side]
        else:
            path = out.with_suffix(".json")
            body = meta | {"columns": list(CSV_COLUMNS), "rows": [[r[c] for c in CSV_COLUMNS] for r in result.rows]}
            path.write_text(json.dumps(_clean(body), indent=2) + "\n")
            written = [path]
    except OSError as exc:
        raise InvalidArgument(f"cannot write report to {out}: {exc}") from exc
    return written


def load_report(path) -> tuple[list[dict], dict]:
    """Rows and metadata from either report format."""
    path = Path(path)
    if path.suffix == ".csv":
        rows = read_csv_rows(path)
        meta = json.loads(path.with_suffix(".meta.json").read_text())
        return rows, meta
    body = json.loads(path.read_text())
    rows = [dict(zip(body["columns"], r)) for r in body["rows"]]
    meta = {k: v for k, v in body.items() if k not in ("rows", "columns")}
    return rows, meta


def rejudge(path) -> list[Verdict]:
    """Recompute the verdicts of a saved report from its rows alone."""
    rows, meta = load_report(path)
    return VERDICTS_BY_KIND[meta["kind"]](rows, meta.get("config", {}))
