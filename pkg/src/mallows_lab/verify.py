"""Self-check suite: exact oracles, closed forms and structural invariants."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .assoc import ReplicaEnsemble, association_test
from .gibbs import FiniteRange, Interval, PlusMinus, exact_enumeration, sample_ensemble, transfer_matrix_oracle
from .gibbs.spins import interval_conditional_cdf, interval_conditional_inverse
from .limits import PartialSumSpec, block_diagnostics, convergence_curve, make_scheme, stabilized_sums
from .normal import NormalLaw
from .transport import (
    SortedSample,
    mallows_closed_form_normal,
    mallows_equal_size,
    mallows_vs_normal,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = ""):
        self.checks.append(CheckResult(name, bool(passed), detail))

    def lines(self) -> list:
        out = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}" + (f"  ({c.detail})" if c.detail else "") for c in self.checks]
        out.append(f"{'PASS' if self.passed else 'FAIL'}: {sum(c.passed for c in self.checks)}/{len(self.checks)} checks")
        return out


def _check_transport(rep: VerifyReport):
    d = mallows_closed_form_normal(NormalLaw(1.0, 2.0), NormalLaw())
    rep.add("transport: closed form N(1,2) vs N(0,1)", abs(d - math.sqrt(2.0)) < 1e-15, f"{d:.15f}")
    m = 10_000
    from scipy.special import ndtri

    grid = 1.0 + 2.0 * ndtri((np.arange(1, m + 1) - 0.5) / m)
    dq = mallows_vs_normal(SortedSample(grid), r=2.0)
    rep.add("transport: quantile grid reproduces closed form", abs(dq - math.sqrt(2.0)) < 5e-3, f"{dq:.6f}")
    point = mallows_vs_normal(SortedSample(np.zeros(1)), r=2.0)
    rep.add("transport: point mass at 0 has d_2 = 1", abs(point - 1.0) < 1e-9, f"{point:.12f}")
    rng = np.random.default_rng(11)
    ok = True
    for _ in range(40):
        size = int(rng.integers(1, 6))
        a, b = rng.normal(size=size), rng.normal(size=size)
        for r in (1.0, 2.0):
            best = mallows_equal_size(a, b, r) ** r
            for perm in itertools.permutations(range(size)):
                cost = np.mean(np.abs(np.sort(a) - b[list(perm)]) ** r)
                ok &= best <= cost + 1e-12
    rep.add("transport: sorted pairing is minimal", ok)


def _check_oracles(rep: VerifyReport, sign: float):
    law = exact_enumeration(FiniteRange(0.25, 1), 8, "periodic")
    tm = transfer_matrix_oracle(0.25, 8, "periodic")
    diff = float(np.max(np.abs(law.two_point - tm)))
    rep.add("oracle: enumeration vs transfer matrix", diff < 1e-12, f"max diff {diff:.2e}")
    # GKS: E[s_i s_j] >= 0 and nondecreasing in the coupling
    grid = (0.05, 0.1, 0.2, 0.3)
    corr = [exact_enumeration(FiniteRange(J, 1), 8, "free", sign=sign).two_point for J in grid]
    nonneg = all(np.all(c >= -1e-12) for c in corr)
    monotone = all(np.all(b - a >= -1e-12) for a, b in zip(corr, corr[1:]))
    rep.add("oracle: GKS positivity and monotonicity", nonneg and monotone, f"min corr {min(c.min() for c in corr):.3f}")


def _check_sampler(rep: VerifyReport):
    law = exact_enumeration(FiniteRange(0.25, 1), 6, "periodic")
    ens = sample_ensemble(FiniteRange(0.25, 1), PlusMinus(), 6, 100, 1, 50, 2024, boundary="periodic", windows=400)
    x = ens.values
    labels = ens.labels(20)
    est = x.T @ x / x.shape[0]
    reps = []
    for b in np.unique(labels):
        xb = x[labels != b]
        reps.append(xb.T @ xb / xb.shape[0])
    reps = np.array(reps)
    nb = reps.shape[0]
    se = np.sqrt((nb - 1) / nb * np.sum((reps - reps.mean(0)) ** 2, axis=0))
    z = np.abs(est - law.two_point)[~np.eye(6, dtype=bool)] / se[~np.eye(6, dtype=bool)]
    rep.add("sampler: heat bath vs exact two-point function", float(z.max()) < 4.0, f"max |z| {z.max():.2f}")
    u = np.linspace(1e-6, 1 - 1e-6, 101)
    worst = 0.0
    for h in (-50.0, -3.0, -1e-6, 1e-6, 0.7, 50.0):
        back = interval_conditional_cdf(interval_conditional_inverse(u, h), h)
        worst = max(worst, float(np.max(np.abs(back - u))))
    rep.add("sampler: interval conditional round trip", worst < 1e-12, f"{worst:.1e}")


def _anti_fixture(rows: int = 4000, seed: int = 3) -> ReplicaEnsemble:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((rows, 8))
    x = z.copy()
    x[:, 1::2] = -z[:, 0::2] + 0.3 * z[:, 1::2]
    return ReplicaEnsemble(x)


def _check_association(rep: VerifyReport):
    ens = sample_ensemble(FiniteRange(0.2, 1), Interval(), 32, 30, 1, 1000, 5, boundary="free")
    good = association_test(ens, trials=100, seed=1)
    rep.add("association: ferromagnetic chain passes", good.passed, f"min z {good.min_studentized:.2f}")
    bad = association_test(_anti_fixture(), trials=100, seed=1)
    rep.add("association: anti-correlated fixture fails", not bad.passed, f"min z {bad.min_studentized:.2f}")


def _check_invariants(rep: VerifyReport, check_dk_bound: bool):
    ens = sample_ensemble(FiniteRange(0.2, 1), Interval(), 256, 30, 1, 1000, 9, boundary="periodic")
    spec = PartialSumSpec(0, (4, 16, 64, 256), (1.0, 2.0, 3.0))
    report = convergence_curve(stabilized_sums(ens, spec), model="verify")
    rep.add("invariant: Liapounov order d_r <= d_s", report.liapounov_holds())
    if check_dk_bound:
        rep.add("invariant: Kolmogorov corollary bound on every row", report.corollary_holds())
    diag = [block_diagnostics(ens, make_scheme(n, 0.2), 0) for n in (64, 256)]
    rep.add("invariant: variance sandwich", all(d.sandwich_ok() for d in diag))
    rep.add("invariant: block cross-covariance bound", all(d.cross_bound_ok() for d in diag))
    rep.add("invariant: scheme arithmetic", all(d.scheme.m_n * d.scheme.l_n + d.scheme.remainder == d.scheme.n for d in diag))


def verify_suite(hamiltonian_sign: float = 1.0, check_dk_bound: bool = True) -> VerifyReport:
    """Run every self-check.

    ``hamiltonian_sign = -1`` flips the sign of the chain used in the
    correlation-inequality check (a fixture that must fail);
    ``check_dk_bound = False`` drops only the Kolmogorov corollary check.
    """
    rep = VerifyReport()
    _check_transport(rep)
    _check_oracles(rep, hamiltonian_sign)
    _check_sampler(rep)
    _check_association(rep)
    _check_invariants(rep, check_dk_bound)
    return rep
