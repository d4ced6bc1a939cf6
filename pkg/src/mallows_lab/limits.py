"""Normal-limit harness for partial sums of associated sequences.

Stabilized sums, block decompositions with variance diagnostics,
Berry-Esseen bounds, moment-ratio checks and distance-to-normal curves.
Every error bar is a delete-a-block jackknife over replicas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assoc import CovarianceSummary, ReplicaEnsemble, cox_grimmett_profile, estimate_covariances
from .errors import DomainError, ModelGuardError
from .normal import STANDARD_NORMAL, NormalLaw, normal_abs_moment
from .stats import DEFAULT_BLOCKS, SIGMA_MARGIN, TrendResult, jackknife_se, trend_to_zero
from .transport import (
    EmpiricalDF,
    SortedSample,
    corollary_kolmogorov_bound,
    kolmogorov_vs_normal,
    mallows_vs_normal,
)

CENTERINGS = ("known_mean", "empirical_mean")
SCALINGS = ("theoretical_sigma", "empirical_sigma")
MIN_REPLICAS = 100

REPORT_COLUMNS = (
    "model",
    "k",
    "n",
    "r",
    "d_r",
    "d_r_se",
    "d_K",
    "mom_emp",
    "mom_target",
    "var_ratio",
    "be_bound",
    "replicas",
    "seed",
)


@dataclass(frozen=True)
class PartialSumSpec:
    """Which windows ``[offset, offset + n)`` to stabilize and which orders to test."""

    offset: int
    lengths: tuple
    r_values: tuple
    centering: str = "known_mean"
    scaling: str = "empirical_sigma"
    stationary: bool = True

    def __post_init__(self):
        lengths = tuple(int(n) for n in self.lengths)
        r_values = tuple(float(r) for r in self.r_values)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "r_values", r_values)
        if self.offset < 0:
            raise DomainError("offset must be nonnegative")
        if not lengths or any(n < 2 for n in lengths):
            raise DomainError("window lengths must all be at least 2")
        if list(lengths) != sorted(set(lengths)):
            raise DomainError("window lengths must be strictly ascending")
        if not r_values or any(not r > 0 for r in r_values):
            raise DomainError("r_values must be a nonempty list of positive orders")
        if self.centering not in CENTERINGS:
            raise DomainError(f"centering must be one of {CENTERINGS}")
        if self.scaling not in SCALINGS:
            raise DomainError(f"scaling must be one of {SCALINGS}")


@dataclass(frozen=True)
class BlockScheme:
    n: int
    l_n: int
    m_n: int
    remainder: int
    delta: float

    def __post_init__(self):
        if self.m_n * self.l_n + self.remainder != self.n or not 0 <= self.remainder < self.l_n:
            raise DomainError(f"inconsistent block scheme {self}")


def make_scheme(n: int, delta: float = 0.2, l_n: int | None = None) -> BlockScheme:
    """``l_n = max(1, floor(n^delta))`` blocks of length ``l_n`` plus a short remainder.

    >>> make_scheme(10, l_n=3)
    BlockScheme(n=10, l_n=3, m_n=3, remainder=1, delta=0.2)
    """
    if not 0 < delta < 0.25:
        raise DomainError("delta must lie in (0, 1/4)")
    if n < 1:
        raise DomainError("n must be positive")
    if l_n is None:
        # the epsilon keeps exact powers such as 1024**0.2 == 4 from rounding down
        l_n = max(1, int(math.floor(n**delta + 1e-9)))
    if not 1 <= l_n <= n:
        raise DomainError("block length must lie in [1, n]")
    m = n // l_n
    return BlockScheme(n, l_n, m, n - m * l_n, delta)


@dataclass
class ScheduleCheck:
    """Trends of ``l_n``, ``n/l_n`` and ``l_n^3/m_n`` along a length schedule."""

    schemes: list
    l_nondecreasing: bool
    n_over_l_increasing: bool
    l3_over_m_decreasing: bool

    @property
    def passed(self) -> bool:
        return self.l_nondecreasing and self.n_over_l_increasing and self.l3_over_m_decreasing


def schedule_check(lengths, delta: float = 0.2) -> ScheduleCheck:
    schemes = [make_scheme(n, delta) for n in lengths]
    l = np.array([s.l_n for s in schemes], dtype=float)
    n = np.array([s.n for s in schemes], dtype=float)
    m = np.array([s.m_n for s in schemes], dtype=float)
    return ScheduleCheck(
        schemes,
        bool(np.all(np.diff(l) >= 0)),
        bool(np.all(np.diff(n / l) > 0)),
        bool(np.all(np.diff(l**3 / m) <= 1e-12)),
    )


# ---------------------------------------------------------------------------
# stabilized sums


@dataclass
class StabilizedSums:
    """``values[n]`` holds one stabilized sum per ensemble row (row order kept)."""

    spec: PartialSumSpec
    values: dict
    labels: np.ndarray
    raw_sums: dict
    center: dict
    scale: dict
    replicas: int
    notes: list = field(default_factory=list)

    def sample(self, n: int) -> SortedSample:
        return SortedSample.from_values(self.values[n])


def _halves(labels):
    """Cross-fit split: even jackknife blocks vs odd ones (replicas never straddle)."""
    half = labels % 2
    return [np.flatnonzero(half == 0), np.flatnonzero(half == 1)]


def stabilized_sums(
    ens: ReplicaEnsemble,
    spec: PartialSumSpec,
    sigma: float | None = None,
    mean: float | None = None,
    n_blocks: int = DEFAULT_BLOCKS,
    min_replicas: int = MIN_REPLICAS,
    cov_max_lag: int | None = None,
) -> StabilizedSums:
    """Centered and scaled window sums ``V = (S - center) / scale``.

    Stationary mode uses ``center = n mu`` and ``scale = sqrt(n) sigma``;
    non-stationary mode uses ``center = E S`` and ``scale = sd(S)`` of the
    window itself.  Empirical quantities for one half of the replicas are
    always estimated on the other half, so no replica is scaled by a
    statistic it helped compute.

    ``sigma`` (stationary) and ``mean`` override the theoretical values;
    ``theoretical_sigma`` requires ``sigma`` in stationary mode.
    """
    k = spec.offset
    if k + max(spec.lengths) > ens.size:
        raise DomainError(f"window [{k}, {k + max(spec.lengths)}) exceeds ensemble length {ens.size}")
    if ens.replicas < min_replicas:
        raise DomainError(f"need at least {min_replicas} replicas, have {ens.replicas}")
    labels = ens.labels(n_blocks)
    halves = _halves(labels)
    mu_known = mean if mean is not None else ens.known_mean
    if spec.centering == "known_mean" and mu_known is None:
        raise DomainError("known_mean centering requested but the model has no known mean")
    if spec.scaling == "theoretical_sigma" and spec.stationary and sigma is None:
        raise DomainError("theoretical_sigma scaling needs an explicit sigma")

    values, raw, centers, scales = {}, {}, {}, {}
    notes = []
    chi_half = [None, None]
    if spec.stationary and spec.scaling == "empirical_sigma":
        region = ens.window(k, max(spec.lengths)) if not ens.periodic else ens
        for h, rows in enumerate(halves):
            cov = estimate_covariances(region.subset(rows), stationary=True, max_lag=cov_max_lag, n_blocks=n_blocks)
            if cov.zero_variance or not cov.chi > 0:
                raise ModelGuardError("zero variance estimate: the sequence is degenerate")
            if cov.truncation_flag:
                notes.append(f"half {h}: susceptibility truncation did not settle within {cov.max_lag} lags")
            chi_half[h] = cov
    for n in spec.lengths:
        s = ens.values[:, k : k + n].sum(axis=1)
        raw[n] = s
        v = np.empty_like(s)
        cen, sca = [], []
        for h, rows in enumerate(halves):
            other = halves[1 - h]
            if spec.centering == "known_mean":
                c = n * float(mu_known)
            elif spec.stationary:
                c = n * float(ens.values[other, k : k + n].mean()) if not ens.periodic else n * float(ens.values[other].mean())
            else:
                c = float(s[other].mean())
            if spec.stationary:
                sig = sigma if spec.scaling == "theoretical_sigma" else math.sqrt(chi_half[1 - h].chi)
                scale = math.sqrt(n) * sig
            else:
                d = s[other] - (c if spec.centering == "known_mean" else s[other].mean())
                dof = other.size if spec.centering == "known_mean" else other.size - 1
                scale = math.sqrt(float(d @ d) / dof)
            if not scale > 1e-12:
                raise ModelGuardError(f"zero variance estimate for window length {n}")
            v[rows] = (s[rows] - c) / scale
            cen.append(c)
            sca.append(scale)
        values[n] = v
        centers[n] = tuple(cen)
        scales[n] = tuple(sca)
    return StabilizedSums(spec, values, labels, raw, centers, scales, ens.replicas, notes)


# ---------------------------------------------------------------------------
# convergence curves

_EMITTED: list = []


def emitted_rows() -> list:
    """Every report row built in this process (for the global corollary audit)."""
    return list(_EMITTED)


@dataclass(frozen=True)
class ReportRow:
    model: str
    k: int
    n: int
    r: float
    d_r: float
    d_r_se: float
    d_K: float
    d_1: float
    mom_emp: float
    mom_se: float
    mom_target: float
    var_ratio: float
    be_bound: float
    replicas: int
    seed: int | str

    @property
    def dk_bound(self) -> float:
        return corollary_kolmogorov_bound(self.d_1)

    @property
    def dk_bound_ok(self) -> bool:
        return self.d_K <= self.dk_bound

    def csv_fields(self) -> list:
        return [getattr(self, c) for c in REPORT_COLUMNS]


@dataclass
class ConvergenceReport:
    rows: list
    lengths: tuple
    r_values: tuple
    d_r: dict  # r -> (len(n),) estimates
    d_r_reps: dict  # r -> (blocks, len(n)) jackknife replicates
    mom_gap: dict
    mom_gap_reps: dict
    d_K: np.ndarray
    d_1: np.ndarray

    def trend(self, r: float, threshold: float | None = None, margin: float = SIGMA_MARGIN) -> TrendResult:
        return trend_to_zero(self.d_r[float(r)], self.d_r_reps[float(r)], threshold, margin)

    def moment_trend(self, r: float, threshold: float | None = None, margin: float = SIGMA_MARGIN) -> TrendResult:
        return trend_to_zero(self.mom_gap[float(r)], self.mom_gap_reps[float(r)], threshold, margin)

    def corollary_holds(self) -> bool:
        return all(row.dk_bound_ok for row in self.rows)

    def liapounov_holds(self, rtol: float = 1e-9) -> bool:
        """``d_r <= d_s`` for ``r <= s`` on every length."""
        rs = sorted(self.d_r)
        for a, b in zip(rs, rs[1:]):
            if np.any(self.d_r[a] > self.d_r[b] * (1 + rtol) + 1e-12):
                return False
        return True


def _leave_block_out(x, labels):
    for b in np.unique(labels):
        yield x[labels != b]


def convergence_curve(
    sums: StabilizedSums,
    law: NormalLaw = STANDARD_NORMAL,
    model: str = "",
    seed: int | str = "",
    be_bounds: dict | None = None,
    extra_r: tuple = (1.0,),
) -> ConvergenceReport:
    """Distances ``d_r(F_n, law)`` and ``d_K``, moment gaps and variance ratios per window length.

    ``d_1`` is always computed (it feeds the Kolmogorov corollary check),
    whether or not it is among the requested orders.
    """
    spec = sums.spec
    r_all = sorted(set(spec.r_values) | set(float(r) for r in extra_r))
    labels = sums.labels
    d_r = {r: [] for r in r_all}
    d_reps = {r: [] for r in r_all}
    gap = {r: [] for r in r_all}
    gap_reps = {r: [] for r in r_all}
    mom = {r: [] for r in r_all}
    mom_se = {r: [] for r in r_all}
    d_k = []
    var_ratio = []
    for n in spec.lengths:
        v = sums.values[n]
        full = EmpiricalDF.from_values(v)
        subs = [EmpiricalDF.from_values(x) for x in _leave_block_out(v, labels)]
        d_k.append(kolmogorov_vs_normal(full, law))
        var_ratio.append(float(np.mean(((v - law.mean) / law.stddev) ** 2)))
        z = (v - law.mean) / law.stddev
        for r in r_all:
            d_r[r].append(mallows_vs_normal(full, law, r))
            d_reps[r].append([mallows_vs_normal(s, law, r) for s in subs])
            target = normal_abs_moment(r)
            a = np.abs(z) ** r
            m_full = float(a.mean())
            m_reps = np.array([x.mean() for x in _leave_block_out(a, labels)])
            mom[r].append(m_full)
            mom_se[r].append(float(jackknife_se(m_reps)))
            gap[r].append(abs(m_full - target))
            gap_reps[r].append(np.abs(m_reps - target))
    d_r = {r: np.array(x) for r, x in d_r.items()}
    d_reps = {r: np.array(x).T for r, x in d_reps.items()}
    gap = {r: np.array(x) for r, x in gap.items()}
    gap_reps = {r: np.array(x).T for r, x in gap_reps.items()}
    d_k = np.array(d_k)
    rows = []
    for i, n in enumerate(spec.lengths):
        for r in spec.r_values:
            row = ReportRow(
                model=model,
                k=spec.offset,
                n=n,
                r=r,
                d_r=float(d_r[r][i]),
                d_r_se=float(jackknife_se(d_reps[r][:, i])),
                d_K=float(d_k[i]),
                d_1=float(d_r[1.0][i]),
                mom_emp=mom[r][i],
                mom_se=mom_se[r][i],
                mom_target=normal_abs_moment(r),
                var_ratio=var_ratio[i],
                be_bound=float("nan") if not be_bounds else float(be_bounds.get(n, float("nan"))),
                replicas=sums.replicas,
                seed=seed,
            )
            rows.append(row)
    _EMITTED.extend(rows)
    return ConvergenceReport(rows, spec.lengths, spec.r_values, d_r, d_reps, gap, gap_reps, d_k, d_r[1.0])


# ---------------------------------------------------------------------------
# block decomposition


def _var_stat(x, known_center):
    """Variance from rows of ``x`` (last axis kept), around a known center or the sample mean."""
    if known_center is not None:
        d = x - known_center
        return np.mean(d * d, axis=0)
    return np.var(x, axis=0, ddof=1)


@dataclass
class BlockDiagnostics:
    scheme: BlockScheme
    k: int
    sigma2_window: float
    sigma2_window_se: float
    sigma2_mblocks: float
    sigma2_mblocks_se: float
    s2_sum: float
    s2_sum_se: float
    cross_cov_total: float
    cross_cov_total_se: float
    cross_cov_bound: float
    ratio_window: float  # sigma2_window / sigma2_mblocks
    ratio_window_se: float
    ratio_blocks: float  # sigma2_mblocks / s2_sum
    ratio_blocks_se: float
    lower_bound: float  # (m l) * c_hat
    upper_bound: float  # (m l) * v_hat(0)
    third_moments: np.ndarray
    be_bound: float
    coarse_be_bound: float
    replicas: int

    def sandwich_ok(self, margin: float = SIGMA_MARGIN) -> bool:
        """``s2_sum <= sigma2_mblocks <= sigma2_window`` within ``margin`` SEs."""
        a = self.s2_sum - self.sigma2_mblocks <= margin * math.hypot(self.s2_sum_se, self.sigma2_mblocks_se)
        b = self.sigma2_mblocks - self.sigma2_window <= margin * math.hypot(self.sigma2_mblocks_se, self.sigma2_window_se)
        return bool(a and b)

    def cross_bound_ok(self, margin: float = SIGMA_MARGIN) -> bool:
        """``sigma2_mblocks <= s2_sum + 2 m sum_{j<=l} v(j)`` within ``margin`` SEs."""
        slack = margin * math.hypot(self.s2_sum_se, self.sigma2_mblocks_se)
        return bool(self.sigma2_mblocks <= self.s2_sum + self.cross_cov_bound + slack)

    def ratios_within(self, lo: float, hi: float, margin: float = SIGMA_MARGIN) -> bool:
        """Both variance ratios inside ``[lo, hi]``, allowing ``margin`` SEs either side."""
        ok = True
        for val, se in ((self.ratio_window, self.ratio_window_se), (self.ratio_blocks, self.ratio_blocks_se)):
            ok &= lo - margin * se <= val <= hi + margin * se
        return bool(ok)

    def csv_fields(self) -> list:
        return [
            self.k,
            self.scheme.n,
            self.scheme.l_n,
            self.scheme.m_n,
            self.scheme.remainder,
            self.sigma2_window,
            self.sigma2_window_se,
            self.sigma2_mblocks,
            self.sigma2_mblocks_se,
            self.s2_sum,
            self.s2_sum_se,
            self.cross_cov_total,
            self.cross_cov_bound,
            self.ratio_window,
            self.ratio_window_se,
            self.ratio_blocks,
            self.ratio_blocks_se,
            self.lower_bound,
            self.upper_bound,
            self.be_bound,
        ]


BLOCK_COLUMNS = (
    "k",
    "n",
    "l_n",
    "m_n",
    "remainder",
    "sigma2_window",
    "sigma2_window_se",
    "sigma2_mblocks",
    "sigma2_mblocks_se",
    "s2_sum",
    "s2_sum_se",
    "cross_cov_total",
    "cross_cov_bound",
    "ratio_window",
    "ratio_window_se",
    "ratio_blocks",
    "ratio_blocks_se",
    "lower_bound",
    "upper_bound",
    "be_bound",
)


def _envelope_v(ens: ReplicaEnsemble, k: int, n: int, l_n: int, stationary: bool, cov: CovarianceSummary | None, n_blocks):
    """``v(j)`` for ``j = 0..l_n``: Cox-Grimmett tail sums plus three SEs (max over sites)."""
    if cov is None:
        region = ens.window(k, n) if not (ens.periodic and n == ens.size and k == 0) else ens
        if stationary:
            cov = estimate_covariances(region, stationary=True, max_lag=max(4 * l_n, 32), n_blocks=n_blocks)
        else:
            sites = np.unique(np.linspace(0, n - 1, min(n, 24)).astype(int))
            cov = estimate_covariances(region, stationary=False, max_lag=max(2 * l_n, 16), sites=sites, n_blocks=n_blocks)
    depth = cov.max_lag
    prof = cox_grimmett_profile(cov, n_max=min(l_n, depth), radius=depth - min(l_n, depth))
    env = np.asarray(prof.envelope, dtype=float)
    if stationary:
        c_min = float(cov.lag_cov[0])
    else:
        c_min = float(np.min(cov.site_var))
    return np.maximum(env, 0.0), c_min, cov


def block_diagnostics(
    ens: ReplicaEnsemble,
    scheme: BlockScheme,
    k: int = 0,
    stationary: bool = True,
    cov: CovarianceSummary | None = None,
    n_blocks: int = DEFAULT_BLOCKS,
) -> BlockDiagnostics:
    """Variance sandwich for the block decomposition of ``S_[k, k+n)``.

    ``cross_cov_total`` is the direct estimate ``sigma2_mblocks - s2_sum``;
    ``cross_cov_bound = 2 m_n sum_{j=1}^{l_n} v(j)`` uses the Cox-Grimmett
    envelope ``v`` from a separate covariance estimate.
    """
    n, l, m = scheme.n, scheme.l_n, scheme.m_n
    if k < 0 or k + n > ens.size:
        raise DomainError(f"window [{k}, {k + n}) outside ensemble of size {ens.size}")
    x = ens.values[:, k : k + n]
    blocks = x[:, : m * l].reshape(ens.n_rows, m, l).sum(axis=2)
    s_win = x.sum(axis=1)
    s_mb = blocks.sum(axis=1)
    mu = ens.known_mean
    labels = ens.labels(n_blocks)

    def stats(rows):
        bw = blocks[rows]
        c_b = None if mu is None else l * mu
        v_win = float(_var_stat(s_win[rows], None if mu is None else n * mu))
        v_mb = float(_var_stat(s_mb[rows], None if mu is None else m * l * mu))
        s2 = float(np.sum(_var_stat(bw, c_b)))
        return np.array([v_win, v_mb, s2, v_mb - s2, v_win / v_mb, v_mb / s2])

    full = stats(slice(None))
    reps = np.array([stats(labels != b) for b in np.unique(labels)])
    se = jackknife_se(reps)
    if not full[2] > 0:
        raise ModelGuardError("zero variance block sums")
    env, c_min, _ = _envelope_v(ens, k, n, l, stationary, cov, n_blocks)
    v_tail = float(np.sum(env[1 : l + 1])) if env.size > 1 else 0.0
    bound = 2.0 * m * v_tail
    centered = blocks - (blocks.mean(axis=0) if mu is None else l * mu)
    third = np.mean(np.abs(centered) ** 3, axis=0)
    be = berry_esseen_bound(third, full[2])
    site_center = x.mean(axis=0) if mu is None else mu
    c_star = float(np.max(np.mean(np.abs(x - site_center) ** 3, axis=0)))
    coarse = coarse_berry_esseen(m, l, c_star, c_min)
    return BlockDiagnostics(
        scheme=scheme,
        k=k,
        sigma2_window=full[0],
        sigma2_window_se=se[0],
        sigma2_mblocks=full[1],
        sigma2_mblocks_se=se[1],
        s2_sum=full[2],
        s2_sum_se=se[2],
        cross_cov_total=full[3],
        cross_cov_total_se=se[3],
        cross_cov_bound=bound,
        ratio_window=full[4],
        ratio_window_se=se[4],
        ratio_blocks=full[5],
        ratio_blocks_se=se[5],
        lower_bound=m * l * c_min,
        upper_bound=m * l * float(env[0]),
        third_moments=third,
        be_bound=be,
        coarse_be_bound=coarse,
        replicas=ens.replicas,
    )


def berry_esseen_bound(block_third_moments, s2_sum: float) -> float:
    """``6 sum E|xi_j|^3 / (sum var xi_j)^{3/2}`` for independent zero-mean summands.

    >>> round(berry_esseen_bound([1.0] * 900, 900.0), 12)
    0.2
    """
    t = np.asarray(block_third_moments, dtype=float)
    if t.size == 0 or np.any(~np.isfinite(t)) or np.any(t < 0):
        raise DomainError("third moments must be finite and nonnegative")
    if not s2_sum > 0:
        raise DomainError("variance sum must be positive")
    return float(6.0 * t.sum() / s2_sum**1.5)


def coarse_berry_esseen(m_n: int, l_n: int, c_star: float, c: float) -> float:
    """``6 m l^3 C_* / (m l c)^{3/2}``: the block bound with ``E|xi|^3 <= l^3 C_*`` and ``var >= l c``."""
    if not c > 0:
        return float("inf")
    return float(6.0 * m_n * l_n**3 * c_star / (m_n * l_n * c) ** 1.5)


# ---------------------------------------------------------------------------
# moment ratios


def psi(r: float, r_star: float) -> float:
    """Decay exponent threshold ``r*(r-2) / (2(r*-r))`` for moment convergence of order ``r``."""
    if not 2 < r < r_star:
        raise DomainError("need 2 < r < r*")
    return r_star * (r - 2.0) / (2.0 * (r_star - r))


@dataclass
class MomentRatioTable:
    r: float
    lengths: tuple
    offsets: np.ndarray
    ratio: np.ndarray  # M(n)
    se: np.ndarray
    step_diffs: np.ndarray
    step_ses: np.ndarray
    bounded: bool
    theta_hat: float | None = None
    theta_se: float | None = None
    theta_needed: float | None = None
    theta_supported: bool | None = None  # advisory only


def birkel_moment_check(
    ens: ReplicaEnsemble,
    spec: PartialSumSpec,
    r: float,
    theta_claim: float | None = None,
    r_star: float | None = None,
    theta_se: float = 0.0,
    n_offsets: int = 8,
    mean: float | None = None,
    n_blocks: int = DEFAULT_BLOCKS,
    margin: float = SIGMA_MARGIN,
) -> MomentRatioTable:
    """``M(n) = max_k E|S_[k,k+n) - n mu|^r / n^{r/2}`` along the schedule.

    Bounded means the last step of the schedule does not grow by more than
    ``margin`` paired SEs (growth that has saturated is allowed earlier on).
    With ``theta_claim`` and ``r_star`` it also reports, as an advisory, whether
    the decay exponent exceeds ``psi(r, r_star)`` by ``margin`` SEs.
    """
    if not r > 0:
        raise DomainError("r must be positive")
    mu = mean if mean is not None else ens.known_mean
    labels = ens.labels(n_blocks)
    blocks = np.unique(labels)
    ratios, reps = [], []
    span = ens.size - spec.offset
    offsets_used = None
    for n in spec.lengths:
        if n > span:
            raise DomainError(f"window length {n} exceeds the available {span} sites")
        ks = spec.offset + np.unique(np.linspace(0, span - n, min(n_offsets, span - n + 1)).astype(int))
        offsets_used = ks
        cs = np.cumsum(np.pad(ens.values, ((0, 0), (1, 0))), axis=1)
        s = cs[:, ks + n] - cs[:, ks]  # rows x offsets
        c = n * mu if mu is not None else s.mean(axis=0)
        a = np.abs(s - c) ** r / n ** (r / 2.0)
        ratios.append(float(np.max(a.mean(axis=0))))
        reps.append([float(np.max(a[labels != b].mean(axis=0))) for b in blocks])
    ratios = np.array(ratios)
    reps = np.array(reps).T
    se = jackknife_se(reps)
    diffs = np.diff(ratios)
    dse = jackknife_se(np.diff(reps, axis=1)) if len(ratios) > 1 else np.zeros(0)
    bounded = bool(len(diffs) == 0 or diffs[-1] <= margin * dse[-1])
    table = MomentRatioTable(r, spec.lengths, offsets_used, ratios, se, diffs, dse, bounded)
    if theta_claim is not None and r_star is not None and r > 2:
        need = psi(r, r_star)
        table.theta_hat = float(theta_claim)
        table.theta_se = float(theta_se)
        table.theta_needed = need
        table.theta_supported = bool(theta_claim - margin * theta_se > need)
    return table
