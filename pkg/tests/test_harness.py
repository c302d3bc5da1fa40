import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from outlier_lab.errors import InvalidArgumentError
from outlier_lab.harness import (
    Bins,
    ModelCurve,
    TrialConfig,
    compare,
    dkw_bound,
    run_trials,
    trajectories,
)
from outlier_lab.harness import _run_chunk
from outlier_lab.rmt_core import STREAM_GUE, deformed_spectrum, sample_gue_tridiagonal, trial_seed


def _cfg(**kw) -> TrialConfig:
    base = dict(
        ensemble="gue-deformed",
        n=30,
        param=1.5,
        trials=40,
        master_seed=7,
        observables={"imag-hist", "ymax", "exceed-counts", "scaled-2d"},
        thresholds=(0.1, 0.5),
        bins=Bins(0.0, 2.0, 20),
    )
    base.update(kw)
    return TrialConfig(**base)


def test_config_validation() -> None:
    with pytest.raises(InvalidArgumentError):
        _cfg(trials=0)
    with pytest.raises(InvalidArgumentError):
        _cfg(thresholds=(0.5, 0.1))
    with pytest.raises(InvalidArgumentError):
        _cfg(observables={"nope"})
    with pytest.raises(InvalidArgumentError):
        Bins(0.0, 1.0, 1)
    with pytest.raises(InvalidArgumentError):
        _cfg(ensemble="cue-subunitary", param=0.5)
    with pytest.raises(InvalidArgumentError):
        _cfg(observables={"min-modulus"})


def test_half_open_bins() -> None:
    b = Bins(0.0, 1.0, 4)
    np.testing.assert_array_equal(b.index(np.array([-0.1, 0.0, 0.25, 0.999, 1.0, 2.0])), [-1, 0, 1, 3, 4, 4])


def test_counts_conserved() -> None:
    cfg = _cfg()
    s = run_trials(cfg)
    assert s.trials_done == cfg.trials
    assert s.histogram_mass("imag-hist") == cfg.trials * cfg.n
    assert s.histogram_mass("ymax") == cfg.trials
    assert int(s.hist["scaled-2d"].sum()) + s.under["scaled-2d"] == cfg.trials * cfg.n


def test_matches_direct_loop() -> None:
    cfg = _cfg(trials=10)
    s = run_trials(cfg)
    for i in range(cfg.trials):
        sp = deformed_spectrum(sample_gue_tridiagonal(cfg.n, trial_seed(cfg.master_seed, i, STREAM_GUE)), cfg.param)
        assert s.ymax[i] == sp.eigenvalues[0].imag
        assert s.sum_imag[i] == sp.sum_imag
        assert list(s.exceed[i]) == [int(np.sum(sp.eigenvalues.imag > th)) for th in cfg.thresholds]


def test_sum_imag_identity() -> None:
    s = run_trials(_cfg(trials=20))
    np.testing.assert_allclose(s.sum_imag, 1.5, atol=1e-9)


def test_chunking_invariance() -> None:
    a = run_trials(_cfg(chunk=1000))
    b = run_trials(_cfg(chunk=7))
    for k in a.hist:
        np.testing.assert_array_equal(a.hist[k], b.hist[k])
    np.testing.assert_array_equal(a.ymax, b.ymax)
    np.testing.assert_array_equal(a.exceed, b.exceed)
    assert a.summary() == b.summary()


def test_workers_invariance() -> None:
    a = run_trials(_cfg(trials=12, chunk=4))
    b = run_trials(_cfg(trials=12, chunk=4, workers=2))
    np.testing.assert_array_equal(a.ymax, b.ymax)
    np.testing.assert_array_equal(a.hist["imag-hist"], b.hist["imag-hist"])


def test_merge_commutative() -> None:
    cfg = _cfg(trials=30)
    x, y, z = _run_chunk(cfg, 0, 8), _run_chunk(cfg, 8, 19), _run_chunk(cfg, 19, 30)
    l = x.merge(y).merge(z)
    r = z.merge(x.merge(y))
    m = y.merge(z).merge(x)
    for o in (r, m):
        np.testing.assert_array_equal(l.trial_index, o.trial_index)
        np.testing.assert_array_equal(l.ymax, o.ymax)
        np.testing.assert_array_equal(l.exceed, o.exceed)
        for k in l.hist:
            np.testing.assert_array_equal(l.hist[k], o.hist[k])
        assert l.summary() == o.summary()


def test_merge_rejects_overlap_and_mismatch() -> None:
    cfg = _cfg(trials=10)
    a = _run_chunk(cfg, 0, 5)
    with pytest.raises(InvalidArgumentError):
        a.merge(_run_chunk(cfg, 3, 8))
    with pytest.raises(InvalidArgumentError):
        a.merge(_run_chunk(_cfg(trials=10, param=2.0), 5, 10))


def test_cue_min_modulus() -> None:
    cfg = TrialConfig("cue-subunitary", 20, 1.0, 15, 3, observables={"min-modulus"}, bins=Bins(0.0, 1.0, 10))
    s = run_trials(cfg)
    assert np.all(s.min_modulus < 1e-10)
    assert s.hist["min-modulus"][0] == 15


def test_compare_identical_is_zero() -> None:
    s = run_trials(_cfg())
    for name in ("imag-hist", "ymax"):
        rep = compare(s, ModelCurve.from_stats(s, name))
        assert rep.sup_cdf == 0.0
        assert rep.l1 == 0.0
        assert np.all(rep.z_scores == 0.0)


def test_compare_uniform_model() -> None:
    s = run_trials(_cfg())
    model = ModelCurve("ymax", density=lambda y: np.full_like(y, 0.5), support=(0.0, 2.0))
    rep = compare(s, model)
    p = s.hist["ymax"] / s.trials_done
    q = np.full(20, 0.05)
    assert rep.l1 == pytest.approx(np.abs(p - q).sum(), abs=1e-12)
    assert rep.sup_cdf == pytest.approx(np.max(np.abs(np.cumsum(p - q))), abs=1e-12)


def test_tabulated_model_grid_check() -> None:
    s = run_trials(_cfg(trials=5))
    bad = ModelCurve("ymax", x=np.linspace(0.5, 2.0, 10), values=np.ones(10))
    with pytest.raises(InvalidArgumentError):
        compare(s, bad)
    good = ModelCurve("ymax", x=np.linspace(0.0, 2.0, 11), values=np.full(11, 0.5))
    np.testing.assert_allclose(good.bin_masses(s.config.bins.edges), 0.05, rtol=1e-14)


def test_dkw() -> None:
    assert dkw_bound(10000) == pytest.approx(math.sqrt(math.log(200.0) / 20000.0))


@given(st.integers(1, 10000))
@settings(max_examples=50, deadline=None)
def test_dkw_decreasing(n: int) -> None:
    assert dkw_bound(n + 1) < dkw_bound(n)


def test_trajectories() -> None:
    tr = trajectories(20, 5, np.linspace(0.0, 3.0, 7))
    assert tr.paths.shape == (20, tr.gamma_grid.size)
    assert np.all(tr.pairing_residuals <= 0.1)
    assert np.all(np.diff(tr.gamma_grid) > 0)
    assert tr.requested.sum() == 7
    # each column is the spectrum at that gamma, reordered
    T = sample_gue_tridiagonal(20, 5)
    for j, g in enumerate(tr.gamma_grid):
        ref = np.sort_complex(deformed_spectrum(T, g).eigenvalues)
        np.testing.assert_array_equal(np.sort_complex(tr.paths[:, j]), ref)
    # the sum of imaginary parts along the paths equals gamma
    np.testing.assert_allclose(tr.paths.imag.sum(axis=0), tr.gamma_grid, atol=1e-9)


def test_trajectories_bad_grid() -> None:
    with pytest.raises(InvalidArgumentError):
        trajectories(5, 1, [1.0, 0.5])


# --- reference examples -------------------------------------------------------


def test_sum_rule_n50() -> None:
    s = run_trials(TrialConfig("gue-deformed", 50, 2.0, 10_000, 1, observables={"ymax"}, bins=Bins(0.0, 2.0, 80)))
    assert np.max(np.abs(s.sum_imag - 2.0)) <= 1e-8
    h = s.hist["ymax"]
    mode = s.config.bins.edges[int(np.argmax(h))] + 0.5 * s.config.bins.width
    assert 1.3 <= mode <= 1.7


def test_half_runs_merge_to_full_run() -> None:
    full = _cfg(trials=40)
    a = run_trials(_cfg(trials=20))
    b = _run_chunk(full, 20, 40)
    m = a.merge(b)
    f = run_trials(full)
    for k in f.hist:
        np.testing.assert_array_equal(m.hist[k], f.hist[k])
    np.testing.assert_array_equal(m.ymax, f.ymax)


def test_exceedance_nested() -> None:
    s = run_trials(_cfg(thresholds=(0.01, 0.1, 0.5, 1.0)))
    assert np.all(np.diff(s.exceed, axis=1) <= 0)


def test_single_outlier_trajectory() -> None:
    tr = trajectories(1000, 2024, [0.0, 0.5, 1.0, 1.5])
    assert np.max(np.abs(tr.paths[:, 0].imag)) <= 1e-10
    assert int(np.sum(tr.paths[:, -1].imag > 0.5)) == 1
    np.testing.assert_allclose(tr.paths.imag.sum(axis=0), tr.gamma_grid, atol=1e-8 * 1000)


def _exact_model(n: int, gamma: float) -> ModelCurve:
    from outlier_lab.finite_density import FiniteDensityParams, rho_imag_exact

    p = FiniteDensityParams(n, gamma)
    # mass n per trial, matching the per-eigenvalue histogram convention
    return ModelCurve("imag-hist", density=lambda y: n * rho_imag_exact(p, y), support=(0.0, gamma), mass=float(n))


def test_compare_exact_and_shifted() -> None:
    s = run_trials(TrialConfig("gue-deformed", 10, 2.0, 50_000, 11, observables={"imag-hist"}, bins=Bins(0.0, 2.0, 40)))
    good = compare(s, _exact_model(10, 2.0))
    assert good.sup_cdf <= 1.5 * good.dkw_99
    assert compare(s, _exact_model(10, 2.5)).sup_cdf > 0.1
    # probability normalization gives the same statistics scaled by 1/n
    from outlier_lab.finite_density import FiniteDensityParams, rho_imag_exact

    p = FiniteDensityParams(10, 2.0)
    unit = compare(s, ModelCurve("imag-hist", density=lambda y: rho_imag_exact(p, y), support=(0.0, 2.0)))
    assert unit.sup_cdf == pytest.approx(good.sup_cdf / 10.0, rel=1e-9)
    np.testing.assert_allclose(unit.z_scores, good.z_scores, rtol=1e-9)
