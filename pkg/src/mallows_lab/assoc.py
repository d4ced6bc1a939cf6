"""Covariance structure of replica ensembles and empirical association checks.

The estimators work on a :class:`ReplicaEnsemble`: rows are independent
process realizations (or several well-separated windows of one chain, tied
together by ``groups``), columns are consecutive sites.  All error bars are
delete-a-block jackknife over replicas.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .stats import (
    DEFAULT_BLOCKS,
    SIGMA_MARGIN,
    block_sums,
    jackknife,
    jackknife_labels,
    jackknife_se,
    leave_one_out,
)

_ROW_CHUNK = 4096
_CHUNK_FLOATS = 2_000_000


def _accumulate(target, lab, values):
    """``target[b] += sum of values rows labelled b`` (few labels per chunk)."""
    for b in np.unique(lab):
        target[b] += values[lab == b].sum(axis=0)


@dataclass(eq=False)
class ReplicaEnsemble:
    """``values[r, i]`` is site ``offset + i`` of realization ``r``.

    ``cond_mean`` optionally holds ``E[X_i | all other sites]`` at the same
    configuration; when present the covariance estimator uses it for the
    off-diagonal terms (a conditional-expectation, variance-reduced estimator
    that stays unbiased because ``E[E[X_i|rest] X_j] = E[X_i X_j]`` for
    ``j != i``).
    """

    values: np.ndarray
    offset: int = 0
    groups: np.ndarray | None = None
    cond_mean: np.ndarray | None = None
    known_mean: float | None = None
    periodic: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(self.values)):
            raise DomainError("ensemble contains non-finite entries")
        if self.groups is not None:
            self.groups = np.asarray(self.groups)
            if self.groups.shape != (self.values.shape[0],):
                raise DomainError("groups must label every row")
        if self.cond_mean is not None:
            self.cond_mean = np.asarray(self.cond_mean, dtype=float)
            if self.cond_mean.shape != self.values.shape:
                raise DomainError("cond_mean must match the shape of values")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def size(self) -> int:
        """Window length N."""
        return self.values.shape[1]

    @property
    def replicas(self) -> int:
        return self.n_rows if self.groups is None else int(np.unique(self.groups).size)

    def labels(self, n_blocks: int = DEFAULT_BLOCKS) -> np.ndarray:
        return jackknife_labels(self.groups, self.n_rows, n_blocks)

    def subset(self, rows) -> "ReplicaEnsemble":
        rows = np.asarray(rows)
        return ReplicaEnsemble(
            self.values[rows],
            offset=self.offset,
            groups=None if self.groups is None else self.groups[rows],
            cond_mean=None if self.cond_mean is None else self.cond_mean[rows],
            known_mean=self.known_mean,
            periodic=self.periodic,
            meta=dict(self.meta),
        )

    def window(self, start: int, length: int) -> "ReplicaEnsemble":
        """Sites ``[start, start+length)`` relative to the ensemble start."""
        if start < 0 or start + length > self.size:
            raise DomainError(f"window [{start}, {start + length}) outside ensemble of size {self.size}")
        sl = slice(start, start + length)
        return ReplicaEnsemble(
            self.values[:, sl],
            offset=self.offset + start,
            groups=self.groups,
            cond_mean=None if self.cond_mean is None else self.cond_mean[:, sl],
            known_mean=self.known_mean,
            periodic=self.periodic and start == 0 and length == self.size,
            meta=dict(self.meta),
        )


@dataclass
class CovarianceSummary:
    """Estimated covariances.

    Stationary mode: ``lag_cov[j] = c(j)`` for ``j = 0..max_lag`` (``c(-j)`` is
    ``c(j)`` by construction).  Non-stationary mode: ``lag_cov[s, J + d] =
    cov(X_k, X_{k+d})`` for ``k = sites[s]`` and ``|d| <= J``.
    """

    stationary: bool
    lag_cov: np.ndarray
    se: np.ndarray
    replicates: np.ndarray
    max_lag: int
    chi: float
    chi_se: float
    j_max: int
    truncation_bias: float
    truncation_flag: bool
    zero_variance: bool
    sites: np.ndarray | None = None
    site_var: np.ndarray | None = None
    site_var_se: np.ndarray | None = None
    n_rows: int = 0

    def lag(self, j: int) -> float:
        if not self.stationary:
            raise DomainError("lag accessor only defined in stationary mode")
        return float(self.lag_cov[abs(j)])

    def lag_se(self, j: int) -> float:
        return float(self.se[abs(j)])


def _lag_products(x, y, max_lag: int, periodic: bool):
    """Row-wise sums ``sum_i x_i y_{i+j}`` for ``j = 0..max_lag``."""
    n = x.shape[1]
    size = n if periodic else 2 * n
    size = 1 << int(math.ceil(math.log2(max(size, 2))))
    if periodic:
        # circular correlation must use exactly n points
        fx = np.fft.rfft(x, n=n, axis=1)
        fy = np.fft.rfft(y, n=n, axis=1)
        out = np.fft.irfft(np.conj(fx) * fy, n=n, axis=1)
    else:
        fx = np.fft.rfft(x, n=size, axis=1)
        fy = np.fft.rfft(y, n=size, axis=1)
        out = np.fft.irfft(np.conj(fx) * fy, n=size, axis=1)
    return out[:, : max_lag + 1]


def _stationary_block_totals(ens: ReplicaEnsemble, max_lag: int, labels, nb: int, improved: bool):
    n = ens.size
    prod = np.zeros((nb, max_lag + 1))
    sums = np.zeros(nb)
    rows = np.zeros(nb)
    use_cm = improved and ens.cond_mean is not None
    for start in range(0, ens.n_rows, _ROW_CHUNK):
        sl = slice(start, start + _ROW_CHUNK)
        x = ens.values[sl]
        lab = labels[sl]
        p = _lag_products(x, x, max_lag, ens.periodic)
        if use_cm and max_lag >= 1:
            m = ens.cond_mean[sl]
            cross = 0.5 * (_lag_products(m, x, max_lag, ens.periodic) + _lag_products(x, m, max_lag, ens.periodic))
            p[:, 1:] = cross[:, 1:]
        _accumulate(prod, lab, p)
        _accumulate(sums, lab, x.sum(axis=1))
        _accumulate(rows, lab, np.ones(x.shape[0]))
    return prod, sums, rows


def _stationary_estimate(prod, sums, rows, n: int, max_lag: int, periodic: bool, known_mean):
    counts = np.full(max_lag + 1, float(n)) if periodic else n - np.arange(max_lag + 1, dtype=float)
    second = prod / (rows[..., None] * counts)
    if known_mean is not None:
        mu = np.full(np.shape(rows), float(known_mean))
    else:
        mu = sums / (rows * n)
    return second - (mu * mu)[..., None]


def _choose_jmax(cov, se, run: int = 5):
    for j in range(1, cov.size - run + 1):
        if np.all(np.abs(cov[j : j + run]) < se[j : j + run]):
            return j, False
    return cov.size - 1, True


def estimate_covariances(
    ens: ReplicaEnsemble,
    stationary: bool = True,
    max_lag: int | None = None,
    sites=None,
    n_blocks: int = DEFAULT_BLOCKS,
    improved: bool = True,
) -> CovarianceSummary:
    """Sample covariances with jackknife standard errors.

    Stationary mode pools every window position at each lag and truncates
    the susceptibility ``chi = c(0) + 2 sum_{j>=1} c(j)`` at the first lag
    that starts a run of five lags with ``|c(j)| < SE``; the discarded tail
    (up to ``max_lag``) is reported as ``truncation_bias``.

    Non-stationary mode estimates ``cov(X_k, X_{k+d})`` across replicas for
    each requested site ``k`` and ``|d| <= max_lag``.
    """
    if ens.replicas < 2:
        raise DomainError("covariance estimates need at least two replicas")
    n = ens.size
    labels = ens.labels(n_blocks)
    nb = int(labels.max()) + 1
    if stationary:
        cap = n // 2 if ens.periodic else n - 1
        max_lag = min(cap, 64 if max_lag is None else max_lag)
        prod, sums, rows = _stationary_block_totals(ens, max_lag, labels, nb, improved)
        est = _stationary_estimate(prod.sum(0), sums.sum(), rows.sum(), n, max_lag, ens.periodic, ens.known_mean)
        reps = _stationary_estimate(
            leave_one_out(prod), leave_one_out(sums), leave_one_out(rows), n, max_lag, ens.periodic, ens.known_mean
        )
        se = jackknife_se(reps)
        j_max, flag = _choose_jmax(est, se)
        weights = np.zeros(max_lag + 1)
        weights[0] = 1.0
        weights[1 : j_max + 1] = 2.0
        chi = float(est @ weights)
        chi_se = float(jackknife_se(reps @ weights))
        tail = float(2.0 * est[j_max + 1 :].sum())
        zero_var = not est[0] > 1e-14
        if zero_var:
            warnings.warn("zero-variance ensemble: every site is constant", RuntimeWarning, stacklevel=2)
        return CovarianceSummary(
            stationary=True,
            lag_cov=est,
            se=se,
            replicates=reps,
            max_lag=max_lag,
            chi=chi,
            chi_se=chi_se,
            j_max=j_max,
            truncation_bias=tail,
            truncation_flag=flag,
            zero_variance=zero_var,
            n_rows=ens.n_rows,
        )
    return _nonstationary(ens, max_lag, sites, labels, nb, improved)


def _nonstationary(ens, max_lag, sites, labels, nb, improved):
    n = ens.size
    max_lag = min(n - 1, 16 if max_lag is None else max_lag)
    if sites is None:
        stride = max(1, n // 256)
        sites = np.arange(0, n, stride)
    sites = np.asarray(sites, dtype=int)
    lags = np.arange(-max_lag, max_lag + 1)
    partner = sites[:, None] + lags[None, :]
    valid = (partner >= 0) & (partner < n)
    partner_c = np.clip(partner, 0, n - 1)
    use_cm = improved and ens.cond_mean is not None
    s_x = np.zeros((nb, n))
    s_xy = np.zeros((nb, sites.size, lags.size))
    rows = np.zeros(nb)
    chunk = max(1, _CHUNK_FLOATS // (sites.size * lags.size))
    for start in range(0, ens.n_rows, chunk):
        sl = slice(start, start + chunk)
        x = ens.values[sl]
        lab = labels[sl]
        xs = x[:, sites][:, :, None]
        xp = x[:, partner_c]
        prod = xs * xp
        if use_cm:
            m = ens.cond_mean[sl]
            cross = 0.5 * (m[:, sites][:, :, None] * xp + xs * m[:, partner_c])
            off = lags != 0
            prod[:, :, off] = cross[:, :, off]
        _accumulate(s_xy, lab, prod)
        _accumulate(s_x, lab, x)
        _accumulate(rows, lab, np.ones(x.shape[0]))

    def cov_from(sx, sxy, r):
        mean = sx / r[..., None]
        ms = np.take(mean, sites, axis=-1)[..., :, None]
        mp = np.take(mean, partner_c, axis=-1)
        c = sxy / r[..., None, None] - ms * mp
        c = c * (r / (r - 1.0))[..., None, None]
        return np.where(valid, c, 0.0)

    est = cov_from(s_x.sum(0), s_xy.sum(0), rows.sum())
    reps = cov_from(leave_one_out(s_x), leave_one_out(s_xy), leave_one_out(rows))
    se = jackknife_se(reps)
    row_sums = est.sum(axis=1)
    k_star = int(np.argmax(row_sums))
    chi = float(row_sums[k_star])
    chi_se = float(jackknife_se(reps.sum(axis=2)[:, k_star]))
    site_var = est[:, max_lag]
    # truncation check on the worst site: last lags still significant?
    edge = np.abs(est[:, [0, -1]]) > se[:, [0, -1]]
    flag = bool(np.any(edge & valid[:, [0, -1]]))
    zero_var = not np.min(site_var) > 1e-14
    if zero_var:
        warnings.warn("zero-variance site in ensemble", RuntimeWarning, stacklevel=3)
    return CovarianceSummary(
        stationary=False,
        lag_cov=est,
        se=se,
        replicates=reps,
        max_lag=max_lag,
        chi=chi,
        chi_se=chi_se,
        j_max=max_lag,
        truncation_bias=float("nan"),
        truncation_flag=flag,
        zero_variance=zero_var,
        sites=sites,
        site_var=site_var,
        site_var_se=se[:, max_lag],
        n_rows=ens.n_rows,
    )


@dataclass
class CoxGrimmettProfile:
    n: np.ndarray
    u_hat: np.ndarray  # (n_max+1,) stationary or (sites, n_max+1)
    se: np.ndarray
    envelope: np.ndarray
    tail_radius: int
    truncation_flag: bool
    slope: float
    slope_se: float
    fit_points: np.ndarray
    sites: np.ndarray | None = None

    def nonincreasing(self, margin: float = SIGMA_MARGIN) -> bool:
        u = np.atleast_2d(self.u_hat)
        s = np.atleast_2d(self.se)
        step_se = np.hypot(s[:, 1:], s[:, :-1])
        return bool(np.all(np.diff(u, axis=1) <= margin * step_se + 1e-15))

    def envelope_sum(self) -> float:
        return float(np.sum(np.maximum(self.envelope, 0.0)))


def fit_decay_slope(n, u, se, lo: int = 1, hi: int | None = None, min_z: float = 2.0):
    """Weighted least-squares slope of ``log u`` against ``log n``.

    Only points with ``u > min_z * se`` enter; weights are ``(u/se)^2``
    (inverse variance of ``log u`` by the delta method).
    """
    n = np.asarray(n, dtype=float)
    u = np.asarray(u, dtype=float)
    se = np.asarray(se, dtype=float)
    hi = n.max() if hi is None else hi
    sel = (n >= lo) & (n <= hi) & (n > 0) & (u > min_z * se) & (u > 0)
    if np.count_nonzero(sel) < 2:
        return float("nan"), float("nan"), n[sel]
    x = np.log(n[sel])
    y = np.log(u[sel])
    w = np.where(se[sel] > 0, (u[sel] / np.where(se[sel] > 0, se[sel], 1.0)) ** 2, 1e12)
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    slope = np.sum(w * (x - xm) * (y - ym)) / sxx
    return float(slope), float(math.sqrt(1.0 / sxx)), n[sel]


def fit_exponential_decay(cov: CovarianceSummary, lo: int = 1, hi: int | None = None, min_z: float = 2.0):
    """Fit ``c(j) ~ C exp(-m j)`` by weighted least squares on ``log c(j)``.

    Stationary summaries only; lags with ``c(j) <= min_z * se`` are dropped.
    Returns ``(C, m, m_se, lags_used)``; NaNs when fewer than two lags survive.
    """
    if not cov.stationary:
        raise DomainError("exponential decay fit needs a stationary covariance summary")
    hi = cov.max_lag if hi is None else min(hi, cov.max_lag)
    j = np.arange(cov.max_lag + 1, dtype=float)
    c = np.asarray(cov.lag_cov, dtype=float)
    se = np.asarray(cov.se, dtype=float)
    sel = (j >= lo) & (j <= hi) & (c > min_z * se) & (c > 0)
    if np.count_nonzero(sel) < 2:
        return float("nan"), float("nan"), float("nan"), j[sel]
    x, y = j[sel], np.log(c[sel])
    w = np.where(se[sel] > 0, (c[sel] / np.where(se[sel] > 0, se[sel], 1.0)) ** 2, 1e12)
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    slope = np.sum(w * (x - xm) * (y - ym)) / sxx
    return float(math.exp(ym - slope * xm)), float(-slope), float(math.sqrt(1.0 / sxx)), x


def cox_grimmett_profile(
    cov: CovarianceSummary,
    n_max: int,
    radius: int | None = None,
    fit_range: tuple[int, int] | None = None,
) -> CoxGrimmettProfile:
    """Tail sums ``u(n) = sum_{|j| >= n} c(j)`` truncated at ``|j| <= n_max + radius``."""
    radius = n_max if radius is None else radius
    want = n_max + radius
    tail = min(want, cov.max_lag)
    flag = tail < want
    ns = np.arange(n_max + 1)
    if n_max > cov.max_lag:
        raise DomainError(f"n_max={n_max} exceeds available lag depth {cov.max_lag}")
    if cov.stationary:
        # weights W[n, j]: 1 for j = 0 when n = 0, 2 for n <= j <= tail, j >= 1
        w = np.zeros((n_max + 1, cov.max_lag + 1))
        for k in ns:
            w[k, max(k, 1) : tail + 1] = 2.0
            if k == 0:
                w[k, 0] = 1.0
        u = w @ cov.lag_cov
        reps = cov.replicates @ w.T
        se = jackknife_se(reps)
        envelope = u + SIGMA_MARGIN * se
        lo, hi = fit_range if fit_range else (1, n_max)
        slope, slope_se, pts = fit_decay_slope(ns, u, se, lo, hi)
        return CoxGrimmettProfile(ns, u, se, envelope, radius, flag, slope, slope_se, pts)
    lags = np.arange(-cov.max_lag, cov.max_lag + 1)
    dist = np.abs(lags)
    w = ((dist[None, :] >= ns[:, None]) & (dist[None, :] <= tail)).astype(float)
    u = cov.lag_cov @ w.T
    reps = cov.replicates @ w.T
    se = jackknife_se(reps)
    envelope = np.max(u + SIGMA_MARGIN * se, axis=0)
    lo, hi = fit_range if fit_range else (1, n_max)
    slope, slope_se, pts = fit_decay_slope(ns, np.mean(u, axis=0), np.sqrt(np.mean(se**2, axis=0) / u.shape[0]), lo, hi)
    return CoxGrimmettProfile(ns, u, se, envelope, radius, flag, slope, slope_se, pts, sites=cov.sites)


# ---------------------------------------------------------------------------
# association test


@dataclass
class AssociationReport:
    min_studentized: float
    passed: bool
    trials: int
    studentized: np.ndarray
    kinds: list
    worst: dict


def _monotone_function(rng, x, anchor: int, n_sites: int, spread: int = 3):
    """Random coordinatewise nondecreasing function of the columns of ``x``."""
    n_coords = int(rng.integers(1, 5))
    lo, hi = max(0, anchor - spread), min(n_sites, anchor + spread + 1)
    coords = np.unique(np.concatenate([[anchor], rng.integers(lo, hi, size=n_coords - 1)]))
    kind = ("staircase", "indicator_product", "clipped_linear")[int(rng.integers(3))]
    cols = x[:, coords]
    if kind == "staircase":
        out = np.zeros(x.shape[0])
        for c in range(cols.shape[1]):
            steps = int(rng.integers(1, 5))
            qs = np.sort(rng.uniform(0.05, 0.95, size=steps))
            thresholds = np.quantile(cols[:, c], qs)
            weights = rng.uniform(0.1, 1.0, size=steps)
            out += (cols[:, c, None] > thresholds[None, :]) @ weights
        return out, kind, coords
    if kind == "indicator_product":
        thresholds = np.array([np.quantile(cols[:, c], rng.uniform(0.1, 0.7)) for c in range(cols.shape[1])])
        return np.all(cols > thresholds[None, :], axis=1).astype(float), kind, coords
    weights = rng.uniform(0.0, 1.0, size=cols.shape[1])
    weights[0] += 0.1
    lin = cols @ weights
    lo_q, hi_q = np.quantile(lin, sorted(rng.uniform(0.0, 1.0, size=2)))
    return np.clip(lin, lo_q, hi_q), kind, coords


def association_test(
    ens: ReplicaEnsemble, trials: int = 200, seed: int = 0, n_blocks: int = DEFAULT_BLOCKS
) -> AssociationReport:
    """Randomized check of ``cov(f(X), g(X)) >= 0`` for monotone ``f, g``.

    Functions are random staircases, products of upper-threshold indicators
    and clipped nonnegative linear maps on a few nearby coordinates; pairs
    share the anchor coordinate, except one trial in ten which compares two
    distinct single coordinates directly.  PASS iff the minimum studentized
    covariance is at least -3.
    """
    if trials < 1:
        raise DomainError("association_test needs at least one trial")
    rng = np.random.default_rng(seed)
    x = ens.values
    n_sites = x.shape[1]
    labels = ens.labels(n_blocks)
    nb = int(labels.max()) + 1
    zs, kinds = [], []
    worst = {}
    for t in range(trials):
        anchor = int(rng.integers(n_sites))
        if t % 10 == 9 and n_sites > 1:
            other = (anchor + int(rng.integers(1, min(n_sites, 4)))) % n_sites
            f, g = x[:, anchor], x[:, other]
            kind = ("identity", "identity")
            coords = (np.array([anchor]), np.array([other]))
        else:
            f, kf, cf = _monotone_function(rng, x, anchor, n_sites)
            g, kg, cg = _monotone_function(rng, x, anchor, n_sites)
            kind = (kf, kg)
            coords = (cf, cg)
        tot = block_sums(np.column_stack([f, g, f * g, np.ones_like(f)]), labels, nb)

        def cov_of(t_):
            r = t_[..., 3]
            return (t_[..., 2] - t_[..., 0] * t_[..., 1] / r) / (r - 1.0)

        c = cov_of(tot.sum(0))
        se = float(jackknife_se(cov_of(leave_one_out(tot))))
        # near-constant functions (e.g. clipped at equal quantiles on discrete spins)
        noise = 64 * np.finfo(float).eps * math.sqrt(np.mean(f * f) * np.mean(g * g))
        if abs(c) <= noise and se <= noise:
            c, se = 0.0, 0.0
        if se > 0:
            z = c / se
        else:
            z = 0.0 if abs(c) < 1e-14 else math.copysign(math.inf, c)
        zs.append(z)
        kinds.append(kind)
        if not worst or z < worst["z"]:
            worst = {"z": float(z), "cov": float(c), "se": se, "kinds": kind, "coords": [a.tolist() for a in coords]}
    zs = np.asarray(zs, dtype=float)
    zmin = float(zs.min())
    return AssociationReport(zmin, zmin >= -SIGMA_MARGIN, trials, zs, kinds, worst)


# ---------------------------------------------------------------------------
# characteristic-function gap


@dataclass
class CFGap:
    lhs: float
    rhs: float
    se: float
    holds: bool


def _cf_gap_terms(x, freqs):
    phase = x @ freqs
    joint = np.mean(np.exp(1j * phase))
    marg = np.prod(np.mean(np.exp(1j * x * freqs[None, :]), axis=0))
    lhs = abs(joint - marg)
    c = np.cov(x, rowvar=False) if x.shape[1] > 1 else np.zeros((1, 1))
    a = np.abs(np.outer(freqs, freqs))
    np.fill_diagonal(a, 0.0)
    rhs = 0.5 * float(np.sum(a * c))
    return np.array([lhs, rhs])


def cf_gap_check(ens: ReplicaEnsemble, freqs, sites=None, n_blocks: int = DEFAULT_BLOCKS) -> CFGap:
    """Empirical check of ``|phi(r) - prod phi_j(r_j)| <= 1/2 sum_{j != k} |r_j r_k| cov(X_j, X_k)``."""
    freqs = np.asarray(freqs, dtype=float)
    if sites is None:
        sites = np.arange(freqs.size)
    x = ens.values[:, np.asarray(sites)]
    if not np.any(freqs):
        return CFGap(0.0, 0.0, 0.0, True)
    est, _, reps = jackknife(lambda v: _cf_gap_terms(v, freqs), (x,), ens.labels(n_blocks))
    se = float(jackknife_se(reps[:, 0] - reps[:, 1]))
    lhs, rhs = float(est[0]), float(est[1])
    return CFGap(lhs, rhs, se, lhs <= rhs + SIGMA_MARGIN * se)


def cf_gap_exact(configs, probs, freqs) -> CFGap:
    """Same inequality evaluated exactly under a discrete law (``configs`` with ``probs``)."""
    configs = np.asarray(configs, dtype=float)
    p = np.asarray(probs, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    joint = np.sum(p * np.exp(1j * (configs @ freqs)))
    marg = np.prod(np.sum(p[:, None] * np.exp(1j * configs * freqs[None, :]), axis=0))
    mean = p @ configs
    cov = (configs * p[:, None]).T @ configs - np.outer(mean, mean)
    a = np.abs(np.outer(freqs, freqs))
    np.fill_diagonal(a, 0.0)
    lhs = float(abs(joint - marg))
    rhs = 0.5 * float(np.sum(a * cov))
    return CFGap(lhs, rhs, 0.0, lhs <= rhs)
