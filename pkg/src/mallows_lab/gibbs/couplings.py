"""Coupling families ``J(i, j) >= 0`` for ferromagnetic spin chains.

Variants: no coupling (product measures), finite-range constant coupling,
long-range power law ``beta |i-j|^-alpha`` and a non-translation-invariant
perturbed power law ``beta (|i-j|^-alpha + r_ij)`` with
``C1 |i-j|^-alpha <= r_ij <= C2 |i-j|^-alpha``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from ..errors import DomainError, ModelGuardError

TAIL_GUARD = 1e-3

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def pair_uniform(seed: int, i, j):
    """Deterministic U[0,1) attached to the unordered pair {i, j}.

    Counter-based: ``splitmix64(splitmix64(seed) ^ splitmix64(lo) + hi)``,
    so the draw depends only on the pair and the seed, never on the volume.
    """
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    lo = np.minimum(i, j).astype(np.uint64)
    hi = np.maximum(i, j).astype(np.uint64)
    with np.errstate(over="ignore"):
        key = _splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
        z = _splitmix64((key ^ _splitmix64(lo)) + hi)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class CouplingFamily:
    """Base class; subclasses implement ``pair(i, j, d)`` for distance ``d >= 1``."""

    name = "base"

    def pair(self, i, j, d):
        raise NotImplementedError

    def J(self, i, j):
        i = np.asarray(i)
        j = np.asarray(j)
        d = np.abs(i - j)
        out = np.where(d > 0, self.pair(i, j, np.maximum(d, 1)), 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def range(self) -> float:
        """Interaction range (``inf`` for power laws)."""
        return math.inf

    def tail_mass(self, radius: int) -> float:
        """Upper bound on ``sup_i sum_{|i-j| > radius} J(i, j)`` over the whole line."""
        return 0.0

    def describe(self) -> dict:
        return {"variant": self.name, **asdict(self)}


@dataclass(frozen=True)
class Zero(CouplingFamily):
    name = "zero"

    def pair(self, i, j, d):
        return np.zeros(np.broadcast(i, j, d).shape)

    @property
    def range(self) -> float:
        return 0


@dataclass(frozen=True)
class FiniteRange(CouplingFamily):
    strength: float = 0.1
    L: int = 1
    name = "finite_range"

    def __post_init__(self):
        if not self.strength > 0:
            raise DomainError(f"finite-range coupling needs J > 0, got {self.strength}")
        if int(self.L) != self.L or self.L < 1:
            raise DomainError(f"finite-range coupling needs integer L >= 1, got {self.L}")

    def pair(self, i, j, d):
        return np.where(np.asarray(d) <= self.L, self.strength, 0.0)

    @property
    def range(self) -> float:
        return int(self.L)

    def tail_mass(self, radius: int) -> float:
        return 2.0 * self.strength * max(0, int(self.L) - radius)

    def describe(self) -> dict:
        return {"variant": self.name, "J": self.strength, "L": int(self.L)}


@dataclass(frozen=True)
class LongRange(CouplingFamily):
    beta: float = 0.05
    alpha: float = 3.0
    name = "long_range"

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"long-range coupling needs beta > 0, got {self.beta}")
        if not self.alpha > 1:
            raise DomainError(f"long-range coupling needs alpha > 1, got {self.alpha}")

    def pair(self, i, j, d):
        return self.beta * np.asarray(d, dtype=float) ** (-self.alpha)

    def tail_mass(self, radius: int) -> float:
        return 2.0 * self.beta * float(special.zeta(self.alpha, radius + 1))


@dataclass(frozen=True)
class Perturbed(CouplingFamily):
    """``beta * (|i-j|^-alpha + r_ij)`` with ``r_ij`` drawn per pair from ``perturbation_seed``.

    ``beta = 1`` is the unscaled family.
    """

    alpha: float = 3.0
    c1: float = 0.5
    c2: float = 2.0
    perturbation_seed: int = 0
    beta: float = 1.0
    name = "perturbed"

    def __post_init__(self):
        if not self.alpha > 2:
            raise DomainError(f"perturbed coupling needs alpha > 2, got {self.alpha}")
        if not 0 < self.c1 < 1:
            raise DomainError(f"perturbed coupling needs 0 < C1 < 1, got {self.c1}")
        if not self.c2 > 1:
            raise DomainError(f"perturbed coupling needs C2 > 1, got {self.c2}")
        if not self.beta > 0:
            raise DomainError(f"perturbed coupling needs beta > 0, got {self.beta}")

    def perturbation(self, i, j, d):
        u = pair_uniform(self.perturbation_seed, i, j)
        return (self.c1 + (self.c2 - self.c1) * u) * np.asarray(d, dtype=float) ** (-self.alpha)

    def pair(self, i, j, d):
        base = np.asarray(d, dtype=float) ** (-self.alpha)
        return self.beta * (base + self.perturbation(i, j, d))

    def tail_mass(self, radius: int) -> float:
        return 2.0 * self.beta * (1.0 + self.c2) * float(special.zeta(self.alpha, radius + 1))


def coupling_from_dict(d: dict) -> CouplingFamily:
    d = dict(d)
    variant = d.pop("variant")
    if variant == "zero":
        return Zero()
    if variant == "finite_range":
        return FiniteRange(strength=float(d["J"]), L=int(d.get("L", 1)))
    if variant == "long_range":
        return LongRange(beta=float(d["beta"]), alpha=float(d["alpha"]))
    if variant == "perturbed":
        return Perturbed(
            alpha=float(d["alpha"]),
            c1=float(d["c1"]),
            c2=float(d["c2"]),
            perturbation_seed=int(d["perturbation_seed"]),
            beta=float(d.get("beta", 1.0)),
        )
    raise DomainError(f"unknown coupling variant {variant!r}")


@dataclass
class Band:
    """Banded couplings for a finite volume.

    ``right[i, d-1] = J(i, i+d)`` for ``d = 1..K`` (wrapping when periodic,
    zero past the edge otherwise).  Every unordered bond appears exactly once.
    """

    right: np.ndarray
    periodic: bool
    tail_mass: float
    retained_mass: float

    @property
    def size(self) -> int:
        return self.right.shape[0]

    @property
    def radius(self) -> int:
        return self.right.shape[1]

    def dense(self) -> np.ndarray:
        n, k = self.right.shape
        out = np.zeros((n, n))
        i = np.arange(n)
        for d in range(1, k + 1):
            j = i + d
            ok = np.ones(n, bool) if self.periodic else j < n
            jj = j[ok] % n
            out[i[ok], jj] += self.right[i[ok], d - 1]
            out[jj, i[ok]] += self.right[i[ok], d - 1]
        return out

    def row_sums(self) -> np.ndarray:
        return self.dense().sum(axis=1) if self.size <= 2048 else _band_row_sums(self)


def _band_row_sums(band: Band) -> np.ndarray:
    n, k = band.right.shape
    out = band.right.sum(axis=1)
    for d in range(1, k + 1):
        col = band.right[:, d - 1]
        if band.periodic:
            out = out + np.roll(col, d)
        else:
            out[d:] += col[: n - d]
    return out


def build_band(coupling: CouplingFamily, n: int, boundary: str = "free", r_cut: int | None = None, guard: bool = True) -> Band:
    """Banded coupling table for ``n`` sites.

    Couplings beyond ``r_cut`` are dropped; the dropped mass over the whole
    line is reported and, with ``guard``, must stay below ``1e-3`` of the
    retained mass.
    """
    if n < 1:
        raise DomainError("volume must hold at least one site")
    if boundary not in ("free", "periodic"):
        raise DomainError(f"unknown boundary {boundary!r}")
    periodic = boundary == "periodic"
    in_volume = (n - 1) // 2 if periodic else n - 1
    rng_ = coupling.range
    k = in_volume if r_cut is None else min(in_volume, int(r_cut))
    if math.isfinite(rng_):
        k = min(k, int(rng_))
    k = max(k, 0)
    i = np.arange(n)
    right = np.zeros((n, max(k, 1)))
    for d in range(1, k + 1):
        j = i + d
        vals = coupling.pair(i, j % n if periodic else j, d)
        if not periodic:
            vals = np.where(j < n, vals, 0.0)
        right[:, d - 1] = vals
    if k == 0:
        right = np.zeros((n, 1))
    # a free volume keeping every in-volume pair drops nothing; a ring drops everything past n/2
    tail = coupling.tail_mass(k) if (periodic or k < in_volume) else 0.0
    band = Band(right, periodic, tail, 0.0)
    retained = float(np.max(_band_row_sums(band))) if n > 1 else 0.0
    band.retained_mass = retained
    if not np.all(np.isfinite(right)):
        raise ModelGuardError("non-finite coupling values")
    if guard and tail > TAIL_GUARD * max(retained, 1e-300) and tail > 0:
        raise ModelGuardError(
            f"coupling tail mass {tail:.3g} beyond radius {k} exceeds {TAIL_GUARD:g} x retained mass {retained:.3g}; "
            f"raise r_cut"
        )
    return band
