"""Exact finite-volume oracles for +-1 chains.

Two independent routes: brute-force enumeration of all ``2^N``
configurations (any coupling family) and 2x2 transfer matrices for
nearest-neighbour chains.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from ..errors import DomainError, ModelGuardError
from .couplings import CouplingFamily, FiniteRange, build_band
from .sampler import exterior_field

MAX_ENUMERATION_SITES = 16


@dataclass(frozen=True, eq=False)
class ExactLaw:
    """Finite-volume Gibbs law given by its full probability table."""

    configs: np.ndarray  # (2^N, N) of +-1
    probs: np.ndarray

    @property
    def size(self) -> int:
        return self.configs.shape[1]

    def expect(self, f) -> np.ndarray:
        """``E[f(s)]`` where ``f`` maps the (2^N, N) config array to per-config values."""
        vals = np.asarray(f(self.configs), dtype=float)
        return np.tensordot(self.probs, vals, axes=(0, 0))

    @cached_property
    def mean(self) -> np.ndarray:
        return self.probs @ self.configs

    @cached_property
    def two_point(self) -> np.ndarray:
        """``E[s_i s_j]``."""
        return (self.configs * self.probs[:, None]).T @ self.configs

    @cached_property
    def covariance(self) -> np.ndarray:
        return self.two_point - np.outer(self.mean, self.mean)

    def block_moments(self, start: int, stop: int, max_order: int = 4) -> np.ndarray:
        """``E[S^p]`` for ``S = sum_{start <= i < stop} s_i`` and ``p = 1..max_order``."""
        s = self.configs[:, start:stop].sum(axis=1)
        return np.array([self.probs @ s.astype(float) ** p for p in range(1, max_order + 1)])

    def conditional_plus(self, site: int):
        """``P(s_site = +1 | rest)`` for every configuration of the other sites."""
        flip = self.configs.copy()
        flip[:, site] *= -1
        idx = _config_index(flip)
        p_self, p_flip = self.probs, self.probs[idx]
        plus = self.configs[:, site] > 0
        return np.where(plus, p_self / (p_self + p_flip), p_flip / (p_self + p_flip))


def _all_configs(n: int) -> np.ndarray:
    codes = np.arange(1 << n, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return (2 * bits - 1).astype(np.int8)


def _config_index(configs) -> np.ndarray:
    n = configs.shape[1]
    bits = (np.asarray(configs) > 0).astype(np.int64)
    return bits @ (1 << np.arange(n - 1, -1, -1))


def exact_enumeration(
    coupling: CouplingFamily,
    N: int,
    boundary: str = "free",
    r_cut: int | None = None,
    sign: float = 1.0,
    exterior_left=None,
    exterior_right=None,
) -> ExactLaw:
    """Brute-force Gibbs law over ``{-1,+1}^N`` with weight ``exp(sign * s^T J s + h_ext . s)``.

    ``sign = -1`` flips the Hamiltonian (an antiferromagnetic fixture).
    """
    if N > MAX_ENUMERATION_SITES:
        raise ModelGuardError(f"exact enumeration refused for N = {N} > {MAX_ENUMERATION_SITES}")
    if N < 1:
        raise DomainError("need at least one site")
    band = build_band(coupling, N, boundary, r_cut, guard=False)
    J = band.dense()
    configs = _all_configs(N)
    s = configs.astype(float)
    energy = sign * np.einsum("ci,ij,cj->c", s, J, s)
    if exterior_left is not None or exterior_right is not None:
        energy = energy + s @ exterior_field(coupling, N, exterior_left, exterior_right)
    logp = energy - logsumexp(energy)
    return ExactLaw(configs, np.exp(logp))


def transfer_matrix_oracle(J: float, N: int, boundary: str = "periodic") -> np.ndarray:
    """``E[s_i s_j]`` for the nearest-neighbour chain with bond weight ``exp(2J s s')``.

    ``boundary`` is ``"periodic"``, ``"free"``; :func:`transfer_matrix_infinite`
    gives the infinite-chain limit.
    """
    if boundary not in ("periodic", "free"):
        raise DomainError(f"unknown boundary {boundary!r}")
    if N < 1:
        raise DomainError("need at least one site")
    K = 2.0 * J
    # symmetric eigen-decomposition: T = e^K I + e^-K (J - I) has eigenvectors (1,1)/sqrt2, (1,-1)/sqrt2
    lam = np.array([2.0 * np.cosh(K), 2.0 * np.sinh(K)])
    V = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    S = np.diag([1.0, -1.0])

    def tpow(p):
        ratio = np.array([1.0, lam[1] / lam[0]]) ** p
        return (V * ratio) @ V.T  # T^p / lam0^p

    out = np.eye(N)
    if boundary == "periodic":
        if N < 3:
            raise DomainError("periodic transfer-matrix oracle needs N >= 3")
        z = np.trace(tpow(N))
        for i in range(N):
            for j in range(i + 1, N):
                d = j - i
                out[i, j] = out[j, i] = np.trace(S @ tpow(d) @ S @ tpow(N - d)) / z
        return out
    one = np.ones(2)
    z = one @ tpow(N - 1) @ one
    for i in range(N):
        for j in range(i + 1, N):
            out[i, j] = out[j, i] = one @ tpow(i) @ S @ tpow(j - i) @ S @ tpow(N - 1 - j) @ one / z
    return out


def transfer_matrix_infinite(J: float, k: int) -> float:
    """Infinite-chain limit ``E[s_0 s_k] = tanh(2J)^|k|``."""
    return float(np.tanh(2.0 * J) ** abs(k))


def transfer_matrix_for(coupling: CouplingFamily, N: int, boundary: str = "periodic") -> np.ndarray:
    if not isinstance(coupling, FiniteRange) or coupling.L != 1:
        raise DomainError("transfer-matrix oracle only covers nearest-neighbour (L = 1) chains")
    return transfer_matrix_oracle(coupling.strength, N, boundary)
