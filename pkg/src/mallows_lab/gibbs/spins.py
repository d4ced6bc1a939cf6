"""Single-site spin spaces and their exact heat-bath conditionals.

The conditional law of one site with local field ``h`` has density
proportional to ``exp(h s)`` against the a-priori measure ``lambda``.
"""

from __future__ import annotations

import math
from dataclasses import KW_ONLY, dataclass, field

import numpy as np
from scipy import stats

from ..errors import DomainError

PLUS_MINUS = 0
INTERVAL = 1
REAL_LAW = 2

SMALL_FIELD = 1e-8


@dataclass(frozen=True)
class SpinSpace:
    _: KW_ONLY
    kind: int
    name: str

    def describe(self) -> dict:
        return {"spins": self.name}

    @property
    def known_mean(self) -> float | None:
        """Exact site mean when no exterior field is present (spin-flip symmetry)."""
        return 0.0


@dataclass(frozen=True)
class PlusMinus(SpinSpace):
    kind: int = field(default=PLUS_MINUS, kw_only=True)
    name: str = field(default="plus_minus", kw_only=True)


@dataclass(frozen=True)
class Interval(SpinSpace):
    kind: int = field(default=INTERVAL, kw_only=True)
    name: str = field(default="interval", kw_only=True)


@dataclass(frozen=True)
class RealLaw(SpinSpace):
    """``E = R`` with an arbitrary a-priori law; only usable without couplings."""

    kind: int = field(default=REAL_LAW, kw_only=True)
    name: str = field(default="real", kw_only=True)
    dist: str = "norm"
    params: tuple = (0.0, 1.0)

    def __post_init__(self):
        frozen = self.frozen()
        var = float(frozen.var())
        if not (math.isfinite(var) and var > 0):
            raise DomainError(f"a-priori law {self.dist}{self.params} must have finite positive variance")

    def frozen(self):
        try:
            return getattr(stats, self.dist)(*self.params)
        except (AttributeError, TypeError) as exc:
            raise DomainError(f"unknown a-priori law {self.dist!r}") from exc

    def describe(self) -> dict:
        return {"spins": self.name, "dist": self.dist, "params": list(self.params)}

    @property
    def known_mean(self) -> float | None:
        return float(self.frozen().mean())

    def ppf(self, u):
        return self.frozen().ppf(u)


def spin_space_from_dict(d: dict) -> SpinSpace:
    name = d["spins"]
    if name == "plus_minus":
        return PlusMinus()
    if name == "interval":
        return Interval()
    if name == "real":
        return RealLaw(dist=d.get("dist", "norm"), params=tuple(float(p) for p in d.get("params", (0.0, 1.0))))
    raise DomainError(f"unknown spin space {name!r}")


# --- interval conditional: density exp(h s)/Z on [-1, 1]


def interval_conditional_cdf(s, h):
    """``F(s) = (e^{hs} - e^{-h}) / (e^{h} - e^{-h})``, evaluated without cancellation."""
    s = np.asarray(s, dtype=float)
    h = np.asarray(h, dtype=float)
    small = np.abs(h) < SMALL_FIELD
    ha = np.where(small, 1.0, np.abs(h))
    sa = np.where(h >= 0, s, -s)
    # for h > 0: F = exp(-2h) expm1(h (s+1)) / (-expm1(-2h))
    pos = np.exp(-2.0 * ha) * np.expm1(ha * (sa + 1.0)) / (-np.expm1(-2.0 * ha))
    out = np.where(h >= 0, pos, 1.0 - pos)
    return np.where(small, 0.5 * (s + 1.0), out)


def interval_conditional_inverse(u, h):
    """Inverse of :func:`interval_conditional_cdf`: ``ln(u e^h + (1-u) e^-h) / h``."""
    u = np.asarray(u, dtype=float)
    h = np.asarray(h, dtype=float)
    small = np.abs(h) < SMALL_FIELD
    ha = np.where(small, 1.0, np.abs(h))
    ua = np.where(h >= 0, u, 1.0 - u)
    with np.errstate(divide="ignore"):
        pos = 1.0 + np.log1p((1.0 - ua) * np.expm1(-2.0 * ha)) / ha
    # u = 0 with a strong field underflows to -inf; the support ends at -1
    pos = np.maximum(pos, -1.0)
    out = np.where(h >= 0, pos, -pos)
    return np.where(small, 2.0 * u - 1.0, out)


def conditional_mean(kind: int, h):
    """``E[s | h]`` under the single-site conditional of each spin space."""
    h = np.asarray(h, dtype=float)
    if kind == PLUS_MINUS:
        return np.tanh(h)
    if kind == INTERVAL:
        # Langevin function coth(h) - 1/h, series near zero
        small = np.abs(h) < 1e-3
        hs = np.where(small, 1.0, h)
        big = 1.0 / np.tanh(hs) - 1.0 / hs
        return np.where(small, h / 3.0 - h**3 / 45.0, big)
    raise DomainError("conditional mean only available for bounded spin spaces")
