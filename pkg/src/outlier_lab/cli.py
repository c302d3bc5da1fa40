"""Command-line front end.

Commands: ``density`` (tabulate a model curve), ``sample`` (run a Monte
Carlo experiment), ``analyze`` (scalar diagnostics as JSON on stdout) and
``compare`` (histogram vs tabulated model).

Exit codes: 0 success, 2 usage or validation error, 3 numerical or
domain failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import critical, cue, finite_density, large_deviation, limit_models
from .errors import InvalidArgumentError, OutlierLabError
from .harness import (
    Bins,
    ModelCurve,
    TrialConfig,
    compare_histogram,
    run_trials,
)
from .io import RunManifest, dumps_json, read_csv, write_csv, write_json

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

MODELS = (
    "finite-2d",
    "finite-imag",
    "limit-bulk",
    "limit-imag",
    "limit-count",
    "ld",
    "outlier-pdf",
    "critical-imag",
    "critical-2d",
    "cue-radial",
    "cue-xmin",
)
ANALYSES = ("stationary", "sigma", "alpha0", "q6-roots", "extreme-scale")
ENSEMBLE_NAMES = {"gue": "gue-deformed", "cue": "cue-subunitary"}


class UsageError(InvalidArgumentError):
    pass


# --- argument helpers -------------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:count`` -> ``count`` equally spaced points including both ends."""
    try:
        lo, hi, count = text.split(":")
        lo_f, hi_f, n = float(lo), float(hi), int(count)
    except ValueError:
        raise UsageError(f"grid must look like lo:hi:count, got {text!r}") from None
    if n < 1 or (n > 1 and not hi_f > lo_f):
        raise UsageError(f"grid {text!r} needs lo < hi and count >= 1")
    return np.linspace(lo_f, hi_f, n)


def parse_bins(text: str) -> Bins:
    try:
        lo, hi, count = text.split(":")
        return Bins(float(lo), float(hi), int(count))
    except ValueError:
        raise UsageError(f"bins must look like lo:hi:count, got {text!r}") from None


def _csv_list(text: str, conv: Callable) -> list:
    try:
        return [conv(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse list {text!r}") from None


def _merged(args: argparse.Namespace, keys: Sequence[str]) -> dict:
    """CLI flags override values from ``--config``."""
    conf: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                conf = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(conf, dict):
            raise UsageError("config file must hold a JSON object")
    out = {}
    for k in keys:
        v = getattr(args, k, None)
        if v is None:
            v = conf.get(k)
        if v is not None:
            out[k] = v
    return out


def _need(params: dict, key: str, conv: Callable = float) -> Any:
    if key not in params:
        raise UsageError(f"missing required flag --{key.replace('_', '-')}")
    try:
        return conv(params[key])
    except (TypeError, ValueError):
        raise UsageError(f"invalid value for --{key.replace('_', '-')}: {params[key]!r}") from None


def _int(x: Any) -> int:
    f = float(x)
    if f != int(f):
        raise ValueError(x)
    return int(f)


# --- density -------------------------------------------------------------------------


def _scalar_map(f: Callable[[float], float], xs: np.ndarray) -> np.ndarray:
    return np.array([f(float(x)) for x in xs])


def tabulate(model: str, params: dict) -> dict[str, np.ndarray]:
    """Columns of the requested model curve."""
    grid = parse_grid(_need(params, "grid", str))
    if model in ("finite-2d", "critical-2d"):
        g2 = parse_grid(_need(params, "grid2", str))
        A, B = np.meshgrid(grid, g2, indexing="ij")
        A, B = A.ravel(), B.ravel()
        if model == "finite-2d":
            p = finite_density.FiniteDensityParams(_need(params, "n", _int), _need(params, "gamma"))
            return {"X": A, "Y": B, "value": np.asarray(finite_density.rho2d_exact(p, A, B), dtype=float)}
        alpha = _need(params, "alpha")
        return {"q": A, "m": B, "value": np.asarray(critical.critical_2d_density(alpha, A, B), dtype=float)}
    if model == "finite-imag":
        p = finite_density.FiniteDensityParams(_need(params, "n", _int), _need(params, "gamma"))
        return {"Y": grid, "value": np.asarray(finite_density.rho_imag_exact(p, grid), dtype=float)}
    if model == "limit-bulk":
        x, gamma = _need(params, "x"), _need(params, "gamma")
        f = lambda y: limit_models.bulk_scaled_density(limit_models.BulkPoint(x, y, gamma))
        return {"y": grid, "value": _scalar_map(f, grid)}
    if model == "limit-imag":
        gamma = _need(params, "gamma")
        return {"y": grid, "value": _scalar_map(lambda y: limit_models.limit_imag_density(y, gamma), grid)}
    if model == "limit-count":
        gamma = _need(params, "gamma")
        return {"y": grid, "value": _scalar_map(lambda y: limit_models.limit_count_fraction(y, gamma), grid)}
    if model == "ld":
        p = large_deviation.LDParams(_need(params, "gamma"), _need(params, "n", _int))
        return {"Y": grid, "value": np.asarray(large_deviation.ld_density(p, grid), dtype=float)}
    if model == "outlier-pdf":
        p = large_deviation.LDParams(_need(params, "gamma"), _need(params, "n", _int))
        r = large_deviation.outlier_pdf(p, grid)
        return {"Y": grid, "value": np.asarray(r.value, dtype=float), "valid": np.asarray(r.valid, dtype=bool)}
    if model == "critical-imag":
        alpha = _need(params, "alpha")
        return {"m": grid, "value": np.asarray(critical.critical_imag_density(alpha, grid), dtype=float)}
    if model == "cue-radial":
        T = _need(params, "T")
        return {"y": grid, "value": _scalar_map(lambda y: cue.radial_density_limit(y, T), grid)}
    if model == "cue-xmin":
        t = _need(params, "t")
        return {"x": grid, "value": _scalar_map(lambda x: cue.xmin_cdf_series(x, t), grid)}
    raise UsageError(f"unknown model {model!r}")


DENSITY_KEYS = ("model", "n", "gamma", "alpha", "t", "T", "x", "grid", "grid2", "format")


def cmd_density(args: argparse.Namespace) -> int:
    params = _merged(args, DENSITY_KEYS)
    model = _need(params, "model", str)
    if model not in MODELS:
        raise UsageError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    fmt = params.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    cols = tabulate(model, params)
    man = RunManifest("density", dict(sorted(params.items())), None, output_path=args.out or "").as_dict()
    if fmt == "csv":
        if not args.out:
            raise UsageError("--out is required for csv output")
        write_csv(args.out, man, cols)
    elif args.out:
        write_json(args.out, man, cols)
    else:
        sys.stdout.write(dumps_json(man, cols))
    return EXIT_OK


# --- sample -----------------------------------------------------------------------------

SAMPLE_KEYS = (
    "ensemble", "n", "gamma", "T", "trials", "seed", "observables", "thresholds", "bins", "route", "chunk", "workers",
)


def _seed(params: dict) -> int:
    if "seed" in params:
        return _need(params, "seed", _int)
    env = os.environ.get("OUTLIER_LAB_SEED")
    if env is None:
        raise UsageError("missing required flag --seed (or OUTLIER_LAB_SEED)")
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"OUTLIER_LAB_SEED must be an integer, got {env!r}") from None


def build_config(params: dict) -> TrialConfig:
    ens = _need(params, "ensemble", str)
    if ens not in ENSEMBLE_NAMES:
        raise UsageError("--ensemble must be gue or cue")
    param = _need(params, "gamma" if ens == "gue" else "T")
    obs = params.get("observables", "ymax" if ens == "gue" else "min-modulus")
    obs = _csv_list(obs, str) if isinstance(obs, str) else list(obs)
    th = params.get("thresholds", "")
    th = _csv_list(th, float) if isinstance(th, str) else [float(v) for v in th]
    bins = params.get("bins", "0:2:80" if ens == "gue" else "0:1:50")
    return TrialConfig(
        ensemble=ENSEMBLE_NAMES[ens],
        n=_need(params, "n", _int),
        param=param,
        trials=_need(params, "trials", _int),
        master_seed=_seed(params),
        observables=frozenset(obs),
        thresholds=tuple(th),
        bins=parse_bins(bins) if isinstance(bins, str) else Bins(*bins),
        route=params.get("route", "tridiagonal"),
        workers=_int(params.get("workers", 1)),
        chunk=_int(params.get("chunk", 1000)),
    )


def cmd_sample(args: argparse.Namespace) -> int:
    params = _merged(args, SAMPLE_KEYS)
    cfg = build_config(params)
    if not args.out:
        raise UsageError("--out DIR is required")
    os.makedirs(args.out, exist_ok=True)
    stats = run_trials(cfg)
    # worker count and chunking never change results, so they stay out of the manifest
    recorded = {k: v for k, v in sorted(params.items()) if k not in ("workers", "chunk", "seed")}
    base = RunManifest("sample", recorded, cfg.master_seed, output_path=args.out).as_dict()
    base["trials_done"] = stats.trials_done
    base["failures"] = int(stats.failures.size)

    for name in sorted(cfg.observables):
        path = os.path.join(args.out, f"{name}.csv")
        man = dict(base, observable=name)
        if name == "exceed-counts":
            cols: dict = {"trial": stats.trial_index}
            for j, th in enumerate(cfg.thresholds):
                cols[f"count_gt_{th!r}"] = stats.exceed[:, j]
            write_csv(path, man, cols)
            continue
        if name == "scaled-2d":
            bq, bm = cfg.bins2d
            Q, M = np.meshgrid(bq.edges[:-1], bm.edges[:-1], indexing="ij")
            man["outside"] = stats.under[name]
            write_csv(path, man, {"q_lo": Q.ravel(), "m_lo": M.ravel(), "count": stats.hist[name].ravel()})
            continue
        units = stats.trials_done * stats.units_per_trial(name)
        e = cfg.bins.edges
        man.update(units=units, samples=stats.trials_done, underflow=stats.under[name], overflow=stats.over[name])
        h = stats.hist[name]
        write_csv(path, man, {"lo": e[:-1], "hi": e[1:], "count": h, "density": h / (units * cfg.bins.width)})

    write_json(os.path.join(args.out, "summary.json"), base, stats.summary())
    return EXIT_OK


# --- analyze -------------------------------------------------------------------------------

ANALYZE_KEYS = ("what", "gamma", "alpha", "n", "tol")


def analyze(params: dict) -> dict:
    what = _need(params, "what", str)
    if what == "stationary":
        sp = large_deviation.stationary_points(_need(params, "gamma"))
        return {"y_star": sp.y_star, "y_double_star": sp.y_double_star}
    if what == "sigma":
        return {"sigma": large_deviation.fluctuation_sigma(_need(params, "gamma"))}
    if what == "alpha0":
        lo, hi = critical.alpha0_bracket(float(params.get("tol", 5e-4)))
        return {"lo": lo, "hi": hi}
    if what == "q6-roots":
        return {"roots": critical.q6_real_roots(_need(params, "alpha"))}
    if what == "extreme-scale":
        n, g = _need(params, "n", _int), _need(params, "gamma")
        return {"Y_e": limit_models.solve_extreme_scale(n, g)}
    raise UsageError(f"unknown analysis {what!r}; choose from {', '.join(ANALYSES)}")


def cmd_analyze(args: argparse.Namespace) -> int:
    params = _merged(args, ANALYZE_KEYS)
    data = analyze(params)
    if args.out:
        write_json(args.out, RunManifest("analyze", dict(sorted(params.items())), output_path=args.out).as_dict(), data)
    else:
        sys.stdout.write(dumps_json(None, data))
    return EXIT_OK


# --- compare --------------------------------------------------------------------------------


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        em, ed = read_csv(args.empirical)
        mm, md = read_csv(args.model)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    for man, path in ((em, args.empirical), (mm, args.model)):
        if man.get("tool") != "outlier-lab":
            raise UsageError(f"{path}: no manifest from this tool")
    if em.get("command") != "sample" or "units" not in em:
        raise UsageError(f"{args.empirical}: not a 1-D histogram written by `sample`")
    if mm.get("command") != "density" or "value" not in md or {"X", "q"} & set(md):
        raise UsageError(f"{args.model}: not a 1-D model curve written by `density`")
    xcol = next(iter(md))
    edges = np.append(ed["lo"], ed["hi"][-1])
    # per-trial: mass equals the number of histogram units per trial (n for
    # per-eigenvalue observables); unit: both sides normalized to one
    k = int(em["units"]) / int(em["samples"]) if args.mass_convention == "per-trial" else 1.0
    model = ModelCurve(em["observable"], x=md[xcol], values=k * md["value"], mass=k)
    rep = compare_histogram(ed["count"], edges, int(em["units"]), model, int(em["samples"]), em["observable"])
    man = RunManifest(
        "compare",
        {"empirical": args.empirical, "model": args.model, "mass_convention": args.mass_convention},
        em.get("master_seed"),
        output_path=args.out or "",
    ).as_dict()
    if args.out:
        write_json(args.out, man, rep.as_dict())
    else:
        sys.stdout.write(dumps_json(man, rep.as_dict()))
    return EXIT_OK


# --- parser ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="outlier-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", help="tabulate a model curve")
    d.add_argument("--model", choices=MODELS)
    d.add_argument("--n", type=int)
    for k in ("gamma", "alpha", "t", "T", "x"):
        d.add_argument(f"--{k}", type=float)
    d.add_argument("--grid", help="lo:hi:count")
    d.add_argument("--grid2", help="lo:hi:count for the second axis of 2-D models")
    d.add_argument("--format", choices=("csv", "json"))
    d.add_argument("--out")
    d.add_argument("--config")
    d.set_defaults(func=cmd_density)

    s = sub.add_parser("sample", help="run a Monte Carlo experiment")
    s.add_argument("--ensemble", choices=tuple(ENSEMBLE_NAMES))
    s.add_argument("--n", type=int)
    s.add_argument("--gamma", type=float)
    s.add_argument("--T", type=float)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--observables", help="comma-separated list")
    s.add_argument("--thresholds", help="comma-separated ascending list")
    s.add_argument("--bins", help="lo:hi:count")
    s.add_argument("--route", choices=("tridiagonal", "dense"))
    s.add_argument("--chunk", type=int)
    s.add_argument("--workers", type=int, help="process count; never changes results")
    s.add_argument("--out", help="output directory")
    s.add_argument("--config")
    s.set_defaults(func=cmd_sample)

    a = sub.add_parser("analyze", help="scalar diagnostics")
    a.add_argument("--what", choices=ANALYSES)
    a.add_argument("--gamma", type=float)
    a.add_argument("--alpha", type=float)
    a.add_argument("--n", type=int)
    a.add_argument("--tol", type=float)
    a.add_argument("--out")
    a.add_argument("--config")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("compare", help="compare a sampled histogram with a model curve")
    c.add_argument("--empirical", required=True)
    c.add_argument("--model", required=True)
    c.add_argument("--mass-convention", choices=("per-trial", "unit"), default="per-trial")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, UsageError):
            parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except OutlierLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
