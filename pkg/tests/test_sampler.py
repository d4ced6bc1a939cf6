import numpy as np
import pytest

from mallows_lab.errors import DomainError, ModelGuardError
from mallows_lab.gibbs import (
    FiniteRange,
    Interval,
    LongRange,
    Perturbed,
    PlusMinus,
    RealLaw,
    SpinChainState,
    Zero,
    build_band,
    exact_enumeration,
    heat_bath_sweep,
    local_fields,
    replica_generator,
    sample_ensemble,
)
from mallows_lab.stats import jackknife_se


def _jk_mean(values, labels):
    est = values.mean(axis=0)
    reps = np.array([values[labels != b].mean(axis=0) for b in np.unique(labels)])
    return est, jackknife_se(reps)


def test_zero_coupling_plus_minus_is_fair_coin():
    ens = sample_ensemble(Zero(), PlusMinus(), 16, 10, 1, 50, 1, windows=2000)
    assert set(np.unique(ens.values)) == {-1.0, 1.0}
    est, se = _jk_mean(ens.values.mean(axis=1), ens.labels())
    assert abs(est) <= 3 * se


def test_zero_coupling_interval_is_uniform():
    ens = sample_ensemble(Zero(), Interval(), 64, 1, 1, 4000, 2)
    assert np.all(np.abs(ens.values) <= 1.0)
    assert ens.values.var() == pytest.approx(1 / 3, abs=0.01)


def test_real_law_product_measure():
    ens = sample_ensemble(Zero(), RealLaw("norm", (0.0, 1.0)), 32, 1, 1, 3000, 3)
    assert ens.values.mean() == pytest.approx(0.0, abs=0.01)
    assert ens.values.var() == pytest.approx(1.0, abs=0.02)
    with pytest.raises(DomainError):
        sample_ensemble(FiniteRange(0.2, 1), RealLaw(), 8, 1, 1, 2, 0)


def test_field_cache_matches_recomputation():
    band = build_band(LongRange(0.1, 2.5), 40, "periodic", r_cut=19, guard=False)
    state = SpinChainState.random(band, Interval(), replica_generator(0, 0))
    heat_bath_sweep(state, replica_generator(0, 1), 50)
    assert np.max(np.abs(state.fields - local_fields(state.spins, band))) < 1e-10


def test_fields_use_ordered_pair_convention():
    band = build_band(FiniteRange(0.25, 1), 3, "free")
    h = local_fields(np.array([1.0, 1.0, -1.0]), band)
    assert np.allclose(h, [0.5, 0.0, 0.5])


def test_detailed_balance_single_site_conditionals():
    J, N = 0.3, 8
    ens = sample_ensemble(FiniteRange(J, 1), PlusMinus(), N, 200, 3, 100, 11, boundary="periodic", windows=300)
    band = build_band(FiniteRange(J, 1), N, "periodic")
    h = local_fields(ens.values, band)[:, 0]
    plus = (ens.values[:, 0] > 0).astype(float)
    labels = ens.labels()
    for level in np.unique(np.round(h, 12)):
        sel = np.isclose(h, level)
        est, se = _jk_mean(plus[sel], labels[sel])
        target = np.exp(level) / (np.exp(level) + np.exp(-level))
        assert abs(est - target) <= 3 * se + 1e-12


def test_two_point_functions_match_enumeration():
    law = exact_enumeration(FiniteRange(0.25, 1), 8, "free")
    ens = sample_ensemble(FiniteRange(0.25, 1), PlusMinus(), 8, 50, 1, 40, 5, windows=1000)
    x = ens.values
    labels = ens.labels()
    prods = (x[:, :, None] * x[:, None, :]).reshape(x.shape[0], -1)
    est, se = _jk_mean(prods, labels)
    dev = np.abs(est - law.two_point.ravel())
    off = ~np.eye(8, dtype=bool).ravel()
    assert np.all(dev[off] <= 3.5 * se[off])


def test_exterior_field_matches_enumeration():
    left, right = [1.0, 1.0], [-1.0]
    law = exact_enumeration(FiniteRange(0.2, 2), 5, "free", exterior_left=left, exterior_right=right)
    ens = sample_ensemble(FiniteRange(0.2, 2), PlusMinus(), 5, 100, 2, 40, 9, windows=1500, exterior_left=left, exterior_right=right)
    assert ens.known_mean is None
    est, se = _jk_mean(ens.values, ens.labels())
    assert np.all(np.abs(est - law.mean) <= 3.5 * se)


def test_reproducible_and_thread_independent():
    args = (LongRange(0.1, 3.0), PlusMinus(), 64, 10, 1, 6, 42)
    a = sample_ensemble(*args, r_cut=30)
    b = sample_ensemble(*args, r_cut=30, threads=3)
    c = sample_ensemble(*args[:-1], 43, r_cut=30)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    # replica streams do not depend on how many replicas are run
    d = sample_ensemble(*args[:5], 3, 42, r_cut=30)
    assert np.array_equal(a.values[:3], d.values)


def test_meta_reports_guards_and_drift():
    ens = sample_ensemble(Perturbed(3.0, 0.5, 2.0, 1, beta=0.05), PlusMinus(), 128, 20, 1, 4, 0, r_cut=40)
    assert ens.meta["tail_mass"] <= 1e-3 * ens.meta["retained_mass"]
    assert ens.meta["field_drift"] < 1e-10
    with pytest.raises(ModelGuardError):
        sample_ensemble(LongRange(0.1, 1.2), PlusMinus(), 64, 1, 1, 2, 0, r_cut=5)


def test_slow_mixing_is_flagged():
    with pytest.warns(RuntimeWarning, match="slow mixing"):
        ens = sample_ensemble(FiniteRange(1.5, 1), PlusMinus(), 64, 2, 1, 2, 0, windows=400)
    assert ens.meta["slow_mixing"]


def test_bad_settings():
    with pytest.raises(DomainError):
        sample_ensemble(Zero(), PlusMinus(), 8, 0, 1, 2, 0)
    with pytest.raises(DomainError):
        sample_ensemble(Zero(), PlusMinus(), 8, 1, 1, 2, 0, boundary="periodic", exterior_left=[1.0])


def test_nonstationary_witness_and_association():
    from mallows_lab.assoc import association_test, estimate_covariances

    c = Perturbed(3.0, 0.5, 2.0, 7, beta=0.1)
    ens = sample_ensemble(c, PlusMinus(), 48, 40, 1, 3000, 2, r_cut=40)
    cov = estimate_covariances(ens, stationary=False, max_lag=1, sites=np.arange(8, 40))
    nn = cov.lag_cov[:, 2]  # cov(X_k, X_{k+1})
    nn_se = cov.se[:, 2]
    i, j = np.argmin(nn), np.argmax(nn)
    assert nn[j] - nn[i] > 5 * np.hypot(nn_se[i], nn_se[j])
    assert association_test(ens, trials=100, seed=3).passed
