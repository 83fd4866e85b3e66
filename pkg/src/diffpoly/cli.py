"""Command line entry point: ``diffpoly <command> [options]``.

Every command prints its rows as CSV (or writes them with ``--out``),
prints one line per verdict, and exits 0 iff all verdicts pass.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from .errors import AccuracyError, DomainError, InvalidArgument, PreconditionError
from .estimators import normalized_point_process
from .manifold import from_name
from .pointsets import DEFAULT_DELTA0, export_csv, greedy_maximal_separated, mz_weights
from .randpoly import parse_exponent
from .spectrum import build_space

COMMANDS = ("weyl", "kernel-asym", "christoffel", "pointset", "average", "worst", "moments", "smallball", "suite")


def _number_list(text: str) -> list[float]:
    return [float(v) for v in str(text).replace(",", " ").split()]


def read_config(path) -> dict:
    """key = value lines; blank lines and '#' comments ignored."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffpoly", description="Random diffusion polynomial experiments.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--manifold", choices=("t1", "t2", "t3", "s2"))
    parser.add_argument("--n", type=float, help="single degree")
    parser.add_argument("--ns", help="comma separated degrees for a sweep")
    parser.add_argument("--p", help="exponent, 'inf' allowed")
    parser.add_argument("--q", help="exponent, 'inf' allowed")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output path stem (extension is set by --format)")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--oversample", type=float, help="grid points per unit degree for non-exact norms (>= 2)")
    parser.add_argument("--config", help="key = value file with the same keys as the flags")
    return parser


DEFAULTS = {"manifold": "t1", "seed": 0, "format": "csv", "oversample": 8.0}


def resolve(args: argparse.Namespace) -> dict:
    """Flags override the config file, which overrides built-in defaults."""
    opts = dict(DEFAULTS)
    if args.config:
        opts.update(read_config(args.config))
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command"):
            opts[key] = value
    opts["seed"] = int(opts["seed"])
    opts["oversample"] = float(opts["oversample"])
    if opts["oversample"] < 2:
        raise DomainError("--oversample must be >= 2")
    if "trials" in opts:
        opts["trials"] = int(opts["trials"])
    if "n" in opts:
        opts["n"] = float(opts["n"])
    return opts


def _sweep(opts) -> list[float]:
    if "ns" in opts:
        ns = _number_list(opts["ns"])
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise InvalidArgument("degrees must be strictly increasing")
        return ns
    if "n" in opts:
        return [opts["n"]]
    return list(an.DEFAULT_NS[opts["manifold"]])


def _pairs(opts, default) -> tuple:
    if "p" in opts or "q" in opts:
        if not ("p" in opts and "q" in opts):
            raise InvalidArgument("--p and --q must be given together")
        return ((parse_exponent(opts["p"]), parse_exponent(opts["q"])),)
    return default


def _emit(result: an.SuiteResult, opts, config: dict, stem: str | None = None):
    if "out" in opts:
        out = Path(opts["out"])
        if stem:
            out = out / stem
        for path in an.emit_report(result, out, opts["format"], config):
            print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(an.rows_to_csv(result.rows))


def _report(results) -> int:
    ok = True
    for res in results:
        for v in res.verdicts:
            ok &= v.passed
            print(f"{'PASS' if v.passed else 'FAIL'}  {v.name}  {v.detail}", file=sys.stderr)
    return 0 if ok else 1


def _config(opts, **extra) -> dict:
    keys = ("manifold", "seed", "oversample")
    return {k: opts[k] for k in keys} | extra


def cmd_weyl(opts) -> int:
    ns = _sweep(opts)
    res = an.run_weyl(opts["manifold"], ns)
    _emit(res, opts, _config(opts, ns=ns))
    return _report([res])


def cmd_christoffel(opts) -> int:
    ns = _sweep(opts)
    res = an.run_christoffel(opts["manifold"], ns, seed=opts["seed"])
    _emit(res, opts, _config(opts, ns=ns))
    return _report([res])


def cmd_kernel_asym(opts) -> int:
    ns = _sweep(opts)
    res = an.run_kernel_asym(opts["manifold"], ns)
    _emit(res, opts, _config(opts, ns=ns))
    return _report([res])


def _sweep_config(opts, **kw) -> an.SweepConfig:
    return an.SweepConfig(
        manifold=opts["manifold"],
        ns=tuple(_sweep(opts)),
        trials=opts.get("trials", an.DEFAULT_TRIALS),
        seed=opts["seed"],
        oversampling=opts["oversample"],
        **kw,
    )


def cmd_average(opts) -> int:
    default = an.T1_PAIRS if opts["manifold"] == "t1" else an.POWER_PAIRS
    cfg = _sweep_config(opts, pairs=_pairs(opts, default))
    res = an.run_average_suite(cfg)
    _emit(res, opts, cfg.to_dict())
    return _report([res])


def cmd_worst(opts) -> int:
    cfg = _sweep_config(opts, worst_pairs=_pairs(opts, an.WORST_PAIRS))
    res = an.run_worst_suite(cfg)
    _emit(res, opts, cfg.to_dict())
    return _report([res])


def cmd_moments(opts) -> int:
    kw = {}
    if "q" in opts:
        kw["moment_qs"] = (parse_exponent(opts["q"]),)
    if "s_power" in opts:
        kw["s_power"] = float(opts["s_power"])
    if "r" in opts:
        kw["r"] = float(opts["r"])
    cfg = _sweep_config(opts, **kw)
    res = an.run_moment_suite(cfg)
    _emit(res, opts, cfg.to_dict())
    return _report([res])


def cmd_suite(opts) -> int:
    cfg = _sweep_config(opts)
    results = [
        an.run_weyl(cfg.manifold, cfg.ns),
        an.run_christoffel(cfg.manifold, cfg.ns, seed=cfg.seed),
        an.run_kernel_asym(cfg.manifold, cfg.ns),
        an.run_average_suite(cfg),
        an.run_worst_suite(cfg),
        an.run_moment_suite(cfg),
    ]
    for res in results:
        if "out" in opts:
            _emit(res, opts, cfg.to_dict(), stem=res.kind)
        else:
            print(f"# {res.kind}")
            sys.stdout.write(an.rows_to_csv(res.rows))
    return _report(results)


def cmd_pointset(opts) -> int:
    m = from_name(opts["manifold"])
    n = opts.get("n", 16.0)
    delta0 = float(opts.get("delta0", DEFAULT_DELTA0))
    xi = greedy_maximal_separated(m, min(delta0 / n, m.diameter), seed=opts["seed"])
    rule = mz_weights(xi, build_space(m, n), delta0=delta0)
    verdicts = [
        an.Verdict("separation", xi.separation >= delta0 / n - 1e-12 or xi.M <= 2, f"eps={xi.separation:.6g}"),
        an.Verdict("covering", xi.covering_radius <= xi.covering_radius_bound + 1e-12,
                   f"audited={xi.covering_radius:.6g} bound={xi.covering_radius_bound:.6g}"),
        an.Verdict("weights", bool(np.all(rule.weights > 0)) and abs(rule.weights.sum() - 1) <= 1e-10,
                   f"M={xi.M} min n^d w={rule.weights.min() * n ** m.dim:.4g} "
                   f"max n^d w={rule.weights.max() * n ** m.dim:.4g}"),
    ]
    if "out" in opts:
        path = export_csv(Path(opts["out"]).with_suffix(".csv"), xi.points, rule.weights)
        print(f"wrote {path}", file=sys.stderr)
    else:
        width = xi.points.shape[1]
        print(",".join([f"x{i}" for i in range(width)] + ["weight"]))
        for row, w in zip(xi.points, rule.weights):
            print(",".join(repr(float(v)) for v in row) + f",{float(w)!r}")
    return _report([an.SuiteResult("pointset", [], {}, verdicts)])


def cmd_smallball(opts) -> int:
    m = from_name(opts["manifold"])
    n = opts.get("n", 64.0)
    trials = opts.get("trials", 100_000)
    delta0 = float(opts.get("delta0", DEFAULT_DELTA0))
    s = build_space(m, n)
    xi = greedy_maximal_separated(m, min(delta0 / n, m.diameter), seed=opts["seed"])
    rep = normalized_point_process(s, xi, trials, opts["seed"])
    rows = [
        {"manifold": m.name, "d": m.dim, "n": an._fmt_n(n), "p": "", "q": repr(t), "trials": trials,
         "seed": opts["seed"], "value": float(pr), "stderr": float(math.sqrt(max(pr * (1 - pr), 0.0) / trials))}
        for t, pr in zip(rep.ts, rep.probabilities)
    ]
    verdicts = [
        an.Verdict(f"small-ball t={t}", bool(ok), f"P={pr:.5g} bound={b:.5g}")
        for t, pr, b, ok in zip(rep.ts, rep.probabilities, rep.bounds, rep.passed)
    ]
    print(f"M={rep.M} median={rep.median:.4f} E max={rep.mean_max:.4f} "
          f"E max/sqrt(ln M)={rep.max_over_sqrt_log_m:.4f}", file=sys.stderr)
    res = an.SuiteResult("smallball", rows, {}, verdicts)
    _emit(res, opts, _config(opts, n=an._fmt_n(n), trials=trials))
    return _report([res])


HANDLERS = {
    "weyl": cmd_weyl,
    "kernel-asym": cmd_kernel_asym,
    "christoffel": cmd_christoffel,
    "pointset": cmd_pointset,
    "average": cmd_average,
    "worst": cmd_worst,
    "moments": cmd_moments,
    "smallball": cmd_smallball,
    "suite": cmd_suite,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        opts = resolve(args)
        from_name(opts["manifold"])
        return HANDLERS[args.command](opts)
    except (DomainError, InvalidArgument, PreconditionError, AccuracyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
