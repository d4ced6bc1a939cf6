import numpy as np
import pytest

from mallows_lab.assoc import (
    ReplicaEnsemble,
    association_test,
    cf_gap_check,
    cf_gap_exact,
    cox_grimmett_profile,
    estimate_covariances,
    fit_decay_slope,
)
from mallows_lab.errors import DomainError
from mallows_lab.gibbs import FiniteRange, PlusMinus, exact_enumeration, sample_ensemble


def _within(est, target, se, k=3.0):
    return np.all(np.abs(np.asarray(est) - np.asarray(target)) <= k * np.asarray(se) + 1e-12)


def test_ensemble_validation():
    with pytest.raises(DomainError):
        ReplicaEnsemble(np.array([[0.0, np.inf]]))
    with pytest.raises(DomainError):
        estimate_covariances(ReplicaEnsemble(np.zeros((1, 5))))


def test_iid_covariances(rng):
    ens = ReplicaEnsemble(rng.standard_normal((2000, 64)), known_mean=0.0)
    cov = estimate_covariances(ens, max_lag=10)
    assert _within(cov.lag_cov, [1.0] + [0.0] * 10, cov.se)
    prof = cox_grimmett_profile(cov, n_max=4, radius=6)
    assert prof.u_hat[0] == pytest.approx(cov.chi, rel=0.05)
    assert _within(prof.u_hat[1:], 0.0, prof.se[1:])
    assert prof.nonincreasing()


def test_moving_sum_covariances(rng):
    z = rng.standard_normal((3000, 129))
    x = z[:, :-1] + z[:, 1:]
    cov = estimate_covariances(ReplicaEnsemble(x, known_mean=0.0), max_lag=8)
    assert _within(cov.lag_cov, [2.0, 1.0] + [0.0] * 7, cov.se)
    assert cov.chi == pytest.approx(4.0, abs=3 * cov.chi_se + 1e-9)
    assert not cov.truncation_flag


def test_nonstationary_mode_moving_sum(rng):
    z = rng.standard_normal((4000, 33))
    x = z[:, :-1] + z[:, 1:]
    cov = estimate_covariances(ReplicaEnsemble(x), stationary=False, max_lag=3, sites=[5, 10, 20])
    target = np.array([0.0, 0.0, 1.0, 2.0, 1.0, 0.0, 0.0])
    assert _within(cov.lag_cov, np.broadcast_to(target, cov.lag_cov.shape), cov.se)


def test_geometric_tail_sums():
    # exact covariances c(j) = rho^j fed through the profile
    from mallows_lab.assoc import CovarianceSummary

    rho, depth = 0.5, 60
    c = rho ** np.arange(depth + 1)
    cov = CovarianceSummary(True, c, np.zeros_like(c), np.tile(c, (8, 1)), depth, 3.0, 0.0, depth, 0.0, False, False)
    prof = cox_grimmett_profile(cov, n_max=10, radius=50)
    n = np.arange(1, 11)
    assert np.allclose(prof.u_hat[1:], 2 * rho**n / (1 - rho), rtol=1e-12)


def test_slope_fit_exact_power_law():
    n = np.arange(1, 33)
    u = 3.0 * n ** -2.0
    slope, _, pts = fit_decay_slope(n, u, u * 0.01, lo=2, hi=32)
    assert slope == pytest.approx(-2.0, abs=1e-12)
    assert pts.size == 31


def test_gibbs_covariances_match_enumeration():
    law = exact_enumeration(FiniteRange(0.15, 1), 10, "periodic")
    ens = sample_ensemble(FiniteRange(0.15, 1), PlusMinus(), 10, 50, 2, 20, 3, boundary="periodic", windows=2000)
    cov = estimate_covariances(ens, max_lag=5)
    exact = [law.covariance[0, j] for j in range(6)]
    assert _within(cov.lag_cov, exact, cov.se)


def test_association_passes_on_iid_and_chain(rng):
    assert association_test(ReplicaEnsemble(rng.normal(size=(3000, 12))), trials=100, seed=4).passed
    chain = sample_ensemble(FiniteRange(0.2, 1), PlusMinus(), 16, 40, 1, 2000, 8)
    rep = association_test(chain, trials=100, seed=4)
    assert rep.passed
    cov = estimate_covariances(chain, max_lag=8)
    assert cov.chi >= cov.lag_cov[0] - 3 * cov.se[0]


def test_association_fails_on_anticorrelated_pair(rng):
    z = rng.normal(size=(2000, 1))
    x = np.hstack([z, -z + 0.1 * rng.normal(size=(2000, 1))])
    rep = association_test(ReplicaEnsemble(x), trials=20, seed=0)
    assert not rep.passed
    assert rep.min_studentized < -3


def test_cf_gap_iid_and_zero(rng):
    ens = ReplicaEnsemble(rng.choice([-1.0, 1.0], size=(5000, 3)))
    gap = cf_gap_check(ens, [0.5, 1.0, -0.7])
    assert gap.holds
    assert gap.lhs < 0.05
    zero = cf_gap_check(ens, [0.0, 0.0, 0.0])
    assert (zero.lhs, zero.rhs) == (0.0, 0.0)


@pytest.mark.parametrize("J", [0.05, 0.2, 0.5])
def test_cf_gap_exact_three_site_chain(J):
    law = exact_enumeration(FiniteRange(J, 1), 3, "free")
    gap = cf_gap_exact(law.configs, law.probs, [1.0, 1.0, 1.0])
    assert gap.lhs <= gap.rhs


def test_stationary_lags_are_symmetric_by_construction(rng):
    cov = estimate_covariances(ReplicaEnsemble(rng.normal(size=(100, 20))), max_lag=4)
    assert cov.lag(-3) == cov.lag(3)


def test_discrete_spins_do_not_trip_on_round_off(rng):
    # clipped maps of +-1 data can be constant up to rounding
    ens = ReplicaEnsemble(rng.choice([-1.0, 1.0], size=(1000, 64)))
    rep = association_test(ens, trials=300, seed=10)
    assert rep.passed and np.isfinite(rep.min_studentized)


def test_exponential_decay_matches_transfer_matrix():
    # +-1 nearest-neighbour ring: c(j) = tanh(2J)^j in the bulk
    from mallows_lab.assoc import estimate_covariances, fit_exponential_decay

    J = 0.25
    ens = sample_ensemble(FiniteRange(J, 1), PlusMinus(), 512, 50, 1, 400, 41, boundary="periodic")
    C, m, m_se, lags = fit_exponential_decay(estimate_covariances(ens, stationary=True, max_lag=16))
    assert lags.size >= 3
    assert abs(m + np.log(np.tanh(2 * J))) <= 3 * m_se + 0.02
    assert C == pytest.approx(1.0, abs=0.15)


def test_exponential_decay_interval_chain_positive_rate():
    from mallows_lab.assoc import estimate_covariances, fit_exponential_decay
    from mallows_lab.gibbs import Interval

    ens = sample_ensemble(FiniteRange(0.2, 1), Interval(), 512, 40, 1, 400, 42, boundary="periodic")
    _, m, m_se, _ = fit_exponential_decay(estimate_covariances(ens, stationary=True, max_lag=16))
    assert m - 3 * m_se > 0
