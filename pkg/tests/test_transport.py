import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate, stats

from mallows_lab.errors import DomainError
from mallows_lab.normal import NormalLaw, norm_quantile
from mallows_lab.transport import (
    EmpiricalDF,
    SortedSample,
    corollary_kolmogorov_bound,
    empirical_cdf,
    generalized_inverse,
    kolmogorov_vs_normal,
    mallows_between_samples,
    mallows_closed_form_normal,
    mallows_equal_size,
    mallows_vs_normal,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
samples = st.lists(finite, min_size=1, max_size=30)


# --- construction


def test_sorted_sample_rejects_bad_input():
    with pytest.raises(DomainError):
        SortedSample(np.array([2.0, 1.0]))
    with pytest.raises(DomainError):
        SortedSample(np.array([]))
    with pytest.raises(DomainError):
        SortedSample.from_values([1.0, np.nan])


def test_atoms_are_legal():
    s = SortedSample.from_values([1.0, 1.0, 1.0])
    assert empirical_cdf(s, 1.0) == 1.0


# --- empirical cdf and generalized inverse


@pytest.mark.parametrize("x, expected", [(2.0, 2 / 3), (0.0, 0.0), (3.0, 1.0)])
def test_empirical_cdf_examples(x, expected):
    assert empirical_cdf(SortedSample.from_values([1, 2, 3]), x) == pytest.approx(expected)


@pytest.mark.parametrize("values, u, expected", [([1, 2, 3], 0.5, 2), ([1, 2, 3], 1 / 3, 1), ([5], 0.99, 5)])
def test_generalized_inverse_examples(values, u, expected):
    assert generalized_inverse(EmpiricalDF.from_values(values), u) == expected


def test_generalized_inverse_domain():
    with pytest.raises(DomainError):
        generalized_inverse(EmpiricalDF.from_values([1.0]), 0.0)


@given(samples, st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_inverse_is_infimum(vals, u):
    df = EmpiricalDF.from_values(vals)
    q = df.inverse(u)
    assert df(q) >= u - 1e-12
    below = df.sample.values[df.sample.values < q]
    if below.size:
        assert df(below.max()) < u + 1e-12


# --- between samples


def test_between_samples_examples(rng):
    assert mallows_between_samples([0.0], [1.0], 2) == 1.0
    assert mallows_between_samples([1, 2, 3], [2, 3, 4], 1) == pytest.approx(1.0)
    a = rng.uniform(size=500)
    assert mallows_between_samples(a, a[::-1], 2) == 0.0
    for r in (0.5, 1, 2, 3):
        assert mallows_between_samples(a, a, r) == 0.0


def _brute_force(a, b, r):
    return min(np.mean(np.abs(np.asarray(a) - np.asarray(b)[list(p)]) ** r) for p in itertools.permutations(range(len(a))))


def test_four_point_brute_force():
    a = [0.3, -1.2, 2.5, 0.0]
    b = [1.1, 0.4, -0.7, 3.3]
    for r in (1.0, 2.0, 3.0):
        assert mallows_between_samples(a, b, r) ** r == pytest.approx(_brute_force(a, b, r), rel=1e-12)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_comonotone_minimality(size, seed):
    g = np.random.default_rng(seed)
    a, b = g.normal(size=size), g.normal(size=size)
    for r in (1.0, 2.0):
        sorted_cost = mallows_equal_size(a, b, r) ** r
        assert sorted_cost <= _brute_force(a, b, r) + 1e-12


@given(samples.filter(lambda v: len(v) > 0), st.integers(0, 2**32 - 1))
def test_merged_grid_matches_equal_size_path(vals, seed):
    g = np.random.default_rng(seed)
    a = np.asarray(vals)
    b = g.normal(size=a.size) * 10
    for r in (1.0, 2.0, 2.5):
        assert mallows_between_samples(a, b, r) == pytest.approx(mallows_equal_size(a, b, r), rel=1e-12, abs=1e-12)


@given(samples, samples, samples, st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_metric_axioms(a, b, c, r):
    dab = mallows_between_samples(a, b, r)
    assert dab == mallows_between_samples(b, a, r)
    dac = mallows_between_samples(a, c, r)
    dcb = mallows_between_samples(c, b, r)
    assert dab <= dac + dcb + 1e-12 * (1 + dac + dcb)


@given(samples, samples, st.floats(0.01, 100), st.floats(-100, 100), st.sampled_from([0.5, 1.0, 2.0]))
def test_affine_compatibility(a, b, scale, shift, r):
    sa, sb = SortedSample.from_values(a), SortedSample.from_values(b)
    lhs = mallows_between_samples(sa.affine(scale, shift), sb.affine(scale, shift), r)
    assert lhs == pytest.approx(scale * mallows_between_samples(sa, sb, r), rel=1e-9, abs=1e-9)


@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_liapounov_ordering(size, seed):
    g = np.random.default_rng(seed)
    a, b = g.standard_t(3, size=size), g.normal(size=size)
    orders = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0]
    vals = [mallows_equal_size(a, b, r) for r in orders]
    assert all(x <= y * (1 + 1e-12) + 1e-15 for x, y in zip(vals, vals[1:]))


def test_unequal_sizes_against_quadrature(rng):
    a, b = rng.normal(size=7), rng.exponential(size=5)
    fa, fb = EmpiricalDF.from_values(a), EmpiricalDF.from_values(b)
    brk = np.union1d(np.arange(1, 7) / 7, np.arange(1, 5) / 5)
    pts = np.concatenate([[0], brk, [1]])
    val = sum(
        integrate.quad(lambda u: abs(fa.inverse(u) - fb.inverse(u)) ** 2, lo, hi)[0] for lo, hi in zip(pts[:-1], pts[1:])
    )
    assert mallows_between_samples(a, b, 2) == pytest.approx(math.sqrt(val), rel=1e-10)


def test_order_must_be_positive():
    with pytest.raises(DomainError):
        mallows_between_samples([0.0], [1.0], 0.0)


# --- against the normal law


def test_closed_form_examples():
    assert mallows_closed_form_normal(NormalLaw(), NormalLaw()) == 0.0
    assert mallows_closed_form_normal(NormalLaw(1, 1), NormalLaw()) == 1.0
    assert mallows_closed_form_normal(NormalLaw(1, 2), NormalLaw()) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_point_mass_vs_normal():
    pt = EmpiricalDF.from_values([0.0])
    assert mallows_vs_normal(pt, r=2) == pytest.approx(1.0, abs=1e-12)
    assert mallows_vs_normal(pt, r=1) == pytest.approx(math.sqrt(2 / math.pi), abs=1e-12)
    assert mallows_vs_normal(pt, r=3) == pytest.approx((2 * math.sqrt(2 / math.pi)) ** (1 / 3), abs=1e-8)


def test_two_atom_closed_form():
    # V = +-1: d_2^2 = E (Z - sign Z)^2 = 2 - 2 E|Z|
    v = EmpiricalDF.from_values([-1.0, 1.0])
    assert mallows_vs_normal(v, r=2) ** 2 == pytest.approx(2 - 2 * math.sqrt(2 / math.pi), abs=1e-12)


@pytest.mark.parametrize("r", [0.5, 1.0, 1.7, 2.0, 3.0])
def test_vs_normal_matches_direct_quadrature(rng, r):
    x = np.sort(rng.normal(0.3, 1.4, size=6))
    m = x.size
    total = 0.0
    for i in range(m):
        total += integrate.quad(lambda u: abs(x[i] - norm_quantile(u)) ** r, i / m, (i + 1) / m, limit=200, epsabs=1e-12)[0]
    assert mallows_vs_normal(x, r=r) == pytest.approx(total ** (1 / r), rel=1e-6)


def test_quadrature_and_closed_form_paths_agree(rng):
    x = rng.normal(size=50)
    import mallows_lab.transport as tr

    s = SortedSample.from_values(x)
    u, q = tr._quantile_cells(s.count)
    for r, exact in ((1.0, tr._cost_r1), (2.0, tr._cost_r2)):
        closed = np.sum(exact(s.values, u[:-1], u[1:], q[:-1], q[1:]))
        quad = np.sum(tr._cost_quadrature(s.values, q[:-1], q[1:], r, 1e-12))
        assert closed == pytest.approx(quad, abs=1e-9)


def test_quantile_grid_convergence():
    prev = None
    for m in (100, 1000, 10_000):
        grid = norm_quantile((np.arange(1, m + 1) - 0.5) / m)
        d = mallows_vs_normal(SortedSample(grid), r=1)
        if prev is not None:
            assert d < prev
        prev = d
    assert prev < 0.01


def test_large_normal_sample_is_close(rng):
    x = rng.standard_normal(10**6)
    assert mallows_vs_normal(x, r=2) < 0.01


def test_location_scale_law(rng):
    x = rng.normal(2.0, 3.0, size=200)
    law = NormalLaw(2.0, 3.0)
    assert mallows_vs_normal(x, law, r=2) == pytest.approx(3.0 * mallows_vs_normal((x - 2.0) / 3.0, r=2), rel=1e-12)


# --- Kolmogorov distance


def test_kolmogorov_examples(rng):
    assert kolmogorov_vs_normal([0.0]) == 0.5
    assert kolmogorov_vs_normal([-10.0, 10.0]) == pytest.approx(0.5, abs=1e-20)
    x = rng.standard_normal(10**5)
    d = kolmogorov_vs_normal(x)
    assert d < 0.01
    assert d == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-14)


@given(samples)
def test_corollary_bound_holds(vals):
    d1 = mallows_vs_normal(vals, r=1)
    dk = kolmogorov_vs_normal(vals)
    assert 0.0 <= dk <= 1.0
    assert dk <= corollary_kolmogorov_bound(d1)
