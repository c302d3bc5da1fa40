"""Monte Carlo experiments and empirical-vs-model comparison.

Every trial draws its matrix from a generator keyed by
``trial_seed(master_seed, trial_index, stream)``, so results do not
depend on how trials are split across workers.  Per-trial quantities are
stored together with their trial index and kept sorted by it; merging
partial results is therefore exactly commutative and associative.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .cue import CueParams, cue_spectrum
from .errors import InvalidArgumentError, OutlierLabError, SolverFailure
from .quadrature import integrate
from .rmt_core import (
    STREAM_CUE,
    STREAM_GUE,
    build_deformation,
    deformed_spectrum,
    eigenvalues,
    sample_gue,
    sample_gue_tridiagonal,
    trial_seed,
)

ENSEMBLES = ("gue-deformed", "cue-subunitary")
OBSERVABLES = ("imag-hist", "ymax", "exceed-counts", "scaled-2d", "min-modulus")
PER_EIGENVALUE = ("imag-hist", "scaled-2d")
FAILURE_LIMIT = 1e-3


class RunAborted(OutlierLabError):
    """Too many eigensolver failures for the statistics to be trusted."""


@dataclass(frozen=True)
class Bins:
    lo: float
    hi: float
    count: int

    def __post_init__(self) -> None:
        if int(self.count) != self.count or self.count < 2:
            raise InvalidArgumentError(f"bin count must be an integer >= 2, got {self.count!r}")
        if not self.hi > self.lo:
            raise InvalidArgumentError(f"bin range must satisfy lo < hi, got ({self.lo}, {self.hi})")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count + 1)

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.count

    def index(self, v: np.ndarray) -> np.ndarray:
        """Bin index for half-open bins ``[lo, hi)``; -1 below, ``count`` above."""
        v = np.asarray(v, dtype=float)
        k = np.floor((v - self.lo) / self.width).astype(np.int64)
        k = np.where(v < self.lo, -1, k)
        k = np.where(v >= self.hi, self.count, k)
        return np.clip(k, -1, self.count)


@dataclass(frozen=True)
class TrialConfig:
    ensemble: str
    n: int
    param: float  # gamma for the GUE model, T for the CUE model
    trials: int
    master_seed: int
    observables: frozenset = frozenset({"imag-hist", "ymax"})
    thresholds: tuple = ()
    bins: Bins = Bins(0.0, 2.0, 80)
    bins2d: tuple = (Bins(-4.0, 4.0, 40), Bins(0.0, 4.0, 40))
    route: str = "tridiagonal"
    workers: int = 1
    chunk: int = 1000

    def __post_init__(self) -> None:
        if self.ensemble not in ENSEMBLES:
            raise InvalidArgumentError(f"ensemble must be one of {ENSEMBLES}, got {self.ensemble!r}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError(f"n must be a positive integer, got {self.n!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise InvalidArgumentError(f"trials must be >= 1, got {self.trials!r}")
        bad = set(self.observables) - set(OBSERVABLES)
        if bad or not self.observables:
            raise InvalidArgumentError(f"unknown observables {sorted(bad)}; choose from {OBSERVABLES}")
        th = tuple(float(x) for x in self.thresholds)
        if any(b < a for a, b in zip(th, th[1:])):
            raise InvalidArgumentError("thresholds must be sorted ascending")
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "observables", frozenset(self.observables))
        if self.route not in ("tridiagonal", "dense"):
            raise InvalidArgumentError(f"route must be 'tridiagonal' or 'dense', got {self.route!r}")
        if self.ensemble == "gue-deformed":
            if not self.param >= 0.0:
                raise InvalidArgumentError(f"gamma must be non-negative, got {self.param!r}")
            if "min-modulus" in self.observables:
                raise InvalidArgumentError("min-modulus applies to the CUE model only")
        else:
            if not 0.0 <= self.param <= 1.0:
                raise InvalidArgumentError(f"T must lie in [0, 1], got {self.param!r}")
            if self.observables != {"min-modulus"}:
                raise InvalidArgumentError("the CUE model supports only the min-modulus observable")
        if self.workers < 1 or self.chunk < 1:
            raise InvalidArgumentError("workers and chunk must be positive")


# --- statistics ---------------------------------------------------------------


def _empty_i(shape) -> np.ndarray:
    return np.zeros(shape, dtype=np.int64)


@dataclass
class EnsembleStats:
    """Accumulated results; see module docstring for the ordering contract.

    ``hist[name]`` holds integer counts; ``under``/``over`` count values
    outside the histogram range.
    """

    config: TrialConfig
    trial_index: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    sum_imag: np.ndarray = field(default_factory=lambda: np.empty(0))
    ymax: np.ndarray = field(default_factory=lambda: np.empty(0))
    min_modulus: np.ndarray = field(default_factory=lambda: np.empty(0))
    exceed: np.ndarray = field(default_factory=lambda: np.empty((0, 0), dtype=np.int64))
    hist: dict = field(default_factory=dict)
    under: dict = field(default_factory=dict)
    over: dict = field(default_factory=dict)
    failures: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    routes: dict = field(default_factory=dict)

    @property
    def trials_done(self) -> int:
        return int(self.trial_index.size)

    @property
    def exceed_totals(self) -> np.ndarray:
        return self.exceed.sum(axis=0) if self.exceed.size else np.zeros(len(self.config.thresholds), np.int64)

    def _check_compatible(self, other: "EnsembleStats") -> None:
        a = replace(self.config, trials=1, workers=1, chunk=1)
        b = replace(other.config, trials=1, workers=1, chunk=1)
        if a != b:
            raise InvalidArgumentError("cannot merge statistics from different configurations")
        if np.intersect1d(self.trial_index, other.trial_index).size or np.intersect1d(self.failures, other.failures).size:
            raise InvalidArgumentError("cannot merge overlapping trial ranges")

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        self._check_compatible(other)
        idx = np.concatenate([self.trial_index, other.trial_index])
        order = np.argsort(idx, kind="stable")

        def cat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
            if a.size == 0 and b.size == 0:
                return a
            return np.concatenate([a, b])[order]

        keys = set(self.hist) | set(other.hist)
        hist = {k: self.hist.get(k, 0) + other.hist.get(k, 0) for k in keys}
        ex = (
            np.concatenate([self.exceed, other.exceed])[order]
            if self.exceed.size or other.exceed.size
            else self.exceed
        )
        routes = dict(self.routes)
        for k, v in other.routes.items():
            routes[k] = routes.get(k, 0) + v
        return EnsembleStats(
            config=self.config,
            trial_index=idx[order],
            sum_imag=cat(self.sum_imag, other.sum_imag),
            ymax=cat(self.ymax, other.ymax),
            min_modulus=cat(self.min_modulus, other.min_modulus),
            exceed=ex,
            hist=hist,
            under={k: self.under.get(k, 0) + other.under.get(k, 0) for k in keys},
            over={k: self.over.get(k, 0) + other.over.get(k, 0) for k in keys},
            failures=np.sort(np.concatenate([self.failures, other.failures])),
            routes=dict(sorted(routes.items())),
        )

    def histogram_mass(self, name: str) -> int:
        return int(np.sum(self.hist[name]) + self.under[name] + self.over[name])

    def units_per_trial(self, name: str) -> int:
        return self.config.n if name in PER_EIGENVALUE else 1

    def summary(self) -> dict:
        """Counts, means and standard errors (order-independent: exact sums via ``math.fsum``)."""
        out: dict = {
            "trials_done": self.trials_done,
            "failures": int(self.failures.size),
            "routes": self.routes,
        }
        for name, arr in (("sum_imag", self.sum_imag), ("ymax", self.ymax), ("min_modulus", self.min_modulus)):
            if arr.size:
                out[name] = sample_moments(arr)
        if self.config.thresholds and self.exceed.size:
            out["exceed"] = [
                {"threshold": th, **sample_moments(self.exceed[:, j].astype(float))}
                for j, th in enumerate(self.config.thresholds)
            ]
        return out


def sample_moments(x: np.ndarray) -> dict:
    n = x.size
    mean = math.fsum(x) / n
    var = math.fsum((x - mean) ** 2) / (n - 1) if n > 1 else 0.0
    return {"count": int(n), "mean": mean, "std": math.sqrt(var), "stderr": math.sqrt(var / n)}


def _hist_add(stats: EnsembleStats, name: str, bins: Bins, values: np.ndarray) -> None:
    k = bins.index(values)
    h = np.bincount(k[(k >= 0) & (k < bins.count)], minlength=bins.count).astype(np.int64)
    stats.hist[name] = stats.hist.get(name, 0) + h
    stats.under[name] = stats.under.get(name, 0) + int(np.count_nonzero(k < 0))
    stats.over[name] = stats.over.get(name, 0) + int(np.count_nonzero(k >= bins.count))


def _hist2d_add(stats: EnsembleStats, bins2d: tuple, q: np.ndarray, m: np.ndarray) -> None:
    bq, bm = bins2d
    kq, km = bq.index(q), bm.index(m)
    inside = (kq >= 0) & (kq < bq.count) & (km >= 0) & (km < bm.count)
    flat = np.bincount(kq[inside] * bm.count + km[inside], minlength=bq.count * bm.count)
    h = flat.reshape(bq.count, bm.count).astype(np.int64)
    name = "scaled-2d"
    stats.hist[name] = stats.hist.get(name, 0) + h
    # below/above the window are lumped together as "outside"
    stats.under[name] = stats.under.get(name, 0) + int(np.count_nonzero(~inside))
    stats.over.setdefault(name, 0)


def _init_stats(cfg: TrialConfig) -> EnsembleStats:
    st = EnsembleStats(cfg)
    for name in cfg.observables:
        if name == "scaled-2d":
            st.hist[name] = _empty_i((cfg.bins2d[0].count, cfg.bins2d[1].count))
        elif name != "exceed-counts":
            st.hist[name] = _empty_i(cfg.bins.count)
        st.under[name] = 0
        st.over[name] = 0
    st.exceed = _empty_i((0, len(cfg.thresholds)))
    return st


def _gue_trial(cfg: TrialConfig, seed: int):
    if cfg.route == "dense":
        H = sample_gue(cfg.n, seed)
        if cfg.param > 0.0:
            return eigenvalues(build_deformation(H, cfg.param))
        return eigenvalues(H.entries, seed)
    return deformed_spectrum(sample_gue_tridiagonal(cfg.n, seed), cfg.param)


def _run_chunk(cfg: TrialConfig, start: int, stop: int) -> EnsembleStats:
    st = _init_stats(cfg)
    idx, sums, ymax, minmod, exceed, fails = [], [], [], [], [], []
    ys_all, xs_all = [], []
    scale = cfg.n ** (1.0 / 3.0)
    routes: dict = {}
    for i in range(start, stop):
        try:
            if cfg.ensemble == "gue-deformed":
                s = _gue_trial(cfg, trial_seed(cfg.master_seed, i, STREAM_GUE))
            else:
                s = cue_spectrum(CueParams(cfg.n, cfg.param), trial_seed(cfg.master_seed, i, STREAM_CUE))
        except SolverFailure:
            fails.append(i)
            continue
        routes[s.route] = routes.get(s.route, 0) + 1
        z = s.eigenvalues
        idx.append(i)
        if cfg.ensemble == "gue-deformed":
            sums.append(s.sum_imag)
            ymax.append(z[0].imag)
            if "imag-hist" in cfg.observables:
                ys_all.append(z.imag)
            if "scaled-2d" in cfg.observables:
                xs_all.append(z)
            if cfg.thresholds:
                exceed.append([int(np.count_nonzero(z.imag > th)) for th in cfg.thresholds])
        else:
            minmod.append(float(np.min(np.abs(z))))
    st.trial_index = np.array(idx, dtype=np.int64)
    st.failures = np.array(fails, dtype=np.int64)
    st.routes = dict(sorted(routes.items()))
    if cfg.ensemble == "gue-deformed":
        st.sum_imag = np.array(sums)
        st.ymax = np.array(ymax)
        if cfg.thresholds:
            st.exceed = np.array(exceed, dtype=np.int64).reshape(len(idx), len(cfg.thresholds))
        if "imag-hist" in cfg.observables and ys_all:
            _hist_add(st, "imag-hist", cfg.bins, np.concatenate(ys_all))
        if "ymax" in cfg.observables and ymax:
            _hist_add(st, "ymax", cfg.bins, st.ymax)
        if "scaled-2d" in cfg.observables and xs_all:
            zz = np.concatenate(xs_all)
            _hist2d_add(st, cfg.bins2d, scale * zz.real, scale * zz.imag)
    else:
        st.min_modulus = np.array(minmod)
        if minmod:
            _hist_add(st, "min-modulus", cfg.bins, st.min_modulus)
    return st


def _chunks(cfg: TrialConfig) -> list[tuple[int, int]]:
    return [(a, min(a + cfg.chunk, cfg.trials)) for a in range(0, cfg.trials, cfg.chunk)]


def run_trials(cfg: TrialConfig) -> EnsembleStats:
    """Run ``cfg.trials`` independent trials and accumulate the requested observables.

    Results are identical for any ``workers``/``chunk`` setting.  Trials
    whose eigensolver fails are dropped (never reseeded); more than 0.1%
    failures aborts the run with :class:`RunAborted`.
    """
    parts = _chunks(cfg)
    if cfg.workers == 1 or len(parts) == 1:
        results = [_run_chunk(cfg, a, b) for a, b in parts]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            futs = [ex.submit(_run_chunk, cfg, a, b) for a, b in parts]
            results = [f.result() for f in futs]
    total = results[0]
    for r in results[1:]:
        total = total.merge(r)
    nf = int(total.failures.size)
    if nf > FAILURE_LIMIT * cfg.trials:
        raise RunAborted(
            f"{nf} of {cfg.trials} trials failed to converge (limit {FAILURE_LIMIT:.1%}); "
            f"first failing trial indices: {total.failures[:10].tolist()}"
        )
    return total


# --- trajectories ---------------------------------------------------------------


@dataclass
class TrajectorySet:
    gamma_grid: np.ndarray
    paths: np.ndarray  # shape (n, len(gamma_grid)), complex
    pairing_residuals: np.ndarray  # max matched distance per grid step
    requested: np.ndarray  # True for grid points that were asked for (not inserted)
    ambiguous: np.ndarray  # per grid step: an ambiguous tie was resolved by real-part order


def _greedy_match(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Pair each ``a[i]`` with a distinct ``b[perm[i]]``, shortest distances first."""
    n = a.size
    d = np.abs(a[:, None] - b[None, :])
    flat = d.ravel()
    # sort by distance, then by real part of the candidate (tie rule)
    order = np.lexsort((np.tile(b.real, n), flat))
    perm = np.full(n, -1, dtype=np.int64)
    dist = np.zeros(n)
    used = np.zeros(n, dtype=bool)
    ambiguous = False
    left = n
    for k, pos in enumerate(order):
        i, j = divmod(int(pos), n)
        if perm[i] >= 0 or used[j]:
            continue
        # another free candidate for i at (nearly) the same distance?
        for pos2 in order[k + 1 : k + 4]:
            i2, j2 = divmod(int(pos2), n)
            if flat[pos2] - flat[pos] > 1e-12:
                break
            if i2 == i and not used[j2] and j2 != j:
                ambiguous = True
        perm[i] = j
        dist[i] = flat[pos]
        used[j] = True
        left -= 1
        if left == 0:
            break
    return perm, dist, ambiguous


def trajectories(
    n: int,
    seed: int,
    gamma_grid: Sequence[float],
    *,
    max_step: float = 0.1,
    max_refine: int = 12,
) -> TrajectorySet:
    """Eigenvalue paths of ``H + i*gamma*e1 e1^T`` for one ``H`` as ``gamma`` varies.

    Adjacent spectra are paired greedily by distance.  If the largest
    matched distance exceeds ``max_step`` the midpoint ``gamma`` is inserted
    (up to ``max_refine`` halvings per interval).
    """
    g = np.asarray(gamma_grid, dtype=float)
    if g.size < 2 or np.any(np.diff(g) <= 0.0) or g[0] < 0.0:
        raise InvalidArgumentError("gamma grid must be ascending, non-negative, with at least two points")
    T = sample_gue_tridiagonal(n, seed)
    cache: dict[float, np.ndarray] = {}

    def spec(gm: float) -> np.ndarray:
        if gm not in cache:
            cache[gm] = deformed_spectrum(T, gm).eigenvalues
        return cache[gm]

    grid = [float(g[0])]
    req = [True]
    cur = spec(grid[0]).copy()
    path_cols = [cur]
    resid, amb = [], []

    for target in g[1:]:
        stack = [(float(target), 0)]
        while stack:
            gm, depth = stack[-1]
            nxt = spec(gm)
            perm, dist, am = _greedy_match(cur, nxt)
            if dist.max() > max_step and depth < max_refine:
                mid = 0.5 * (grid[-1] + gm)
                stack.append((mid, depth + 1))
                continue
            stack.pop()
            cur = nxt[perm]
            grid.append(gm)
            req.append(gm == float(target))
            path_cols.append(cur)
            resid.append(float(dist.max()))
            amb.append(am)
    return TrajectorySet(
        gamma_grid=np.array(grid),
        paths=np.stack(path_cols, axis=1),
        pairing_residuals=np.array(resid),
        requested=np.array(req),
        ambiguous=np.array(amb),
    )


# --- comparison -----------------------------------------------------------------


@dataclass
class ModelCurve:
    """Model for one histogram observable.

    Either a callable ``density`` (integrated per bin by adaptive
    quadrature over ``support``) or a tabulated curve ``x, values``
    (integrated by the trapezoid rule on its linear interpolant).
    ``mass`` is the total mass the model describes per unit (one for a
    probability density).
    """

    observable: str
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    x: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    support: tuple = (-math.inf, math.inf)
    mass: float = 1.0
    bin_mass: Optional[np.ndarray] = None  # overrides integration when given

    @classmethod
    def from_stats(cls, stats: EnsembleStats, name: str) -> "ModelCurve":
        """Piecewise-constant model equal to the empirical histogram."""
        h = np.asarray(stats.hist[name], dtype=float)
        units = stats.trials_done * stats.units_per_trial(name)
        return cls(observable=name, bin_mass=h / units)

    def bin_masses(self, edges: np.ndarray) -> np.ndarray:
        if self.bin_mass is not None:
            if self.bin_mass.size != edges.size - 1:
                raise InvalidArgumentError("tabulated bin masses do not match the histogram bins")
            return np.asarray(self.bin_mass, dtype=float)
        if self.density is not None:
            lo_s, hi_s = self.support
            out = np.zeros(edges.size - 1)
            for k in range(out.size):
                a, b = max(edges[k], lo_s), min(edges[k + 1], hi_s)
                if b > a:
                    out[k], _ = integrate(self.density, a, b, atol=1e-13, rtol=1e-10)
            return out
        if self.x is None or self.values is None:
            raise InvalidArgumentError("model curve needs a density callable or a tabulated curve")
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        # open-support densities are tabulated just inside the endpoints;
        # a gap of up to 1e-3 bin widths is filled by the end value
        slack = 1e-3 * float(np.min(np.diff(edges)))
        if edges[0] < x[0] - slack or edges[-1] > x[-1] + slack:
            raise InvalidArgumentError(
                f"model grid [{x[0]}, {x[-1]}] does not cover the histogram range [{edges[0]}, {edges[-1]}]"
            )
        out = np.zeros(edges.size - 1)
        for k in range(out.size):
            a, b = edges[k], edges[k + 1]
            inner = x[(x > a) & (x < b)]
            pts = np.concatenate([[a], inner, [b]])
            out[k] = np.trapezoid(np.interp(pts, x, v), pts)
        return out


@dataclass
class ComparisonReport:
    observable: str
    sup_cdf: float
    l1: float
    z_scores: np.ndarray
    dkw_99: float
    empirical_mass: np.ndarray
    model_mass: np.ndarray
    samples: int

    def as_dict(self) -> dict:
        return {
            "observable": self.observable,
            "sup_cdf": self.sup_cdf,
            "l1": self.l1,
            "dkw_99": self.dkw_99,
            "samples": self.samples,
            "max_abs_z": float(np.max(np.abs(self.z_scores))) if self.z_scores.size else 0.0,
            "z_scores": self.z_scores.tolist(),
            "empirical_mass": self.empirical_mass.tolist(),
            "model_mass": self.model_mass.tolist(),
        }


def dkw_bound(n: int, alpha: float = 0.01) -> float:
    """Dvoretzky-Kiefer-Wolfowitz radius ``sqrt(ln(2/alpha) / (2n))``."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def compare_histogram(
    counts: np.ndarray, edges: np.ndarray, units: int, model: ModelCurve, samples: int, name: str
) -> ComparisonReport:
    counts = np.asarray(counts, dtype=float)
    if units <= 0 or counts.sum() == 0:
        raise InvalidArgumentError(f"histogram for {name!r} is empty")
    q = model.bin_masses(edges)
    p = counts / units * model.mass
    cdf_gap = np.cumsum(p - q)
    expected = q / model.mass * units
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (counts - expected) / np.sqrt(expected * (1.0 - np.clip(q / model.mass, 0.0, 1.0)))
    z = np.where(counts == expected, 0.0, z)
    return ComparisonReport(
        observable=name,
        sup_cdf=float(np.max(np.abs(cdf_gap))),
        l1=float(np.sum(np.abs(p - q))),
        z_scores=z,
        dkw_99=dkw_bound(samples),
        empirical_mass=p,
        model_mass=q,
        samples=samples,
    )


def compare(stats: EnsembleStats, model: ModelCurve) -> ComparisonReport:
    """Sup-CDF distance, binned L1 and multinomial z-scores of a histogram against a model.

    The empirical histogram is scaled to the model's mass convention
    (counts / (trials * units per trial) * mass).  CDFs start at the lower
    histogram edge.  The DKW radius uses the number of trials, which is
    conservative for per-eigenvalue observables.
    """
    name = model.observable
    if name not in stats.hist or name == "scaled-2d":
        raise InvalidArgumentError(f"no 1-D histogram for observable {name!r}")
    units = stats.trials_done * stats.units_per_trial(name)
    return compare_histogram(stats.hist[name], stats.config.bins.edges, units, model, stats.trials_done, name)
