"""Jackknife-over-replicas error bars and trend checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_BLOCKS = 64
SIGMA_MARGIN = 3.0


def jackknife_labels(groups, n_rows: int, n_blocks: int = DEFAULT_BLOCKS) -> np.ndarray:
    """Map every row to a jackknife block.

    Rows sharing a replica id (``groups``) always land in the same block so
    that windows of one chain are deleted together.  Replicas are dealt into
    at most ``n_blocks`` contiguous blocks.
    """
    if groups is None:
        groups = np.arange(n_rows)
    groups = np.asarray(groups)
    uniq, inv = np.unique(groups, return_inverse=True)
    nb = max(2, min(n_blocks, uniq.size))
    return (inv * nb) // uniq.size


def jackknife_se(replicates) -> np.ndarray:
    """Standard error from leave-one-block-out replicates (block axis first)."""
    reps = np.asarray(replicates, dtype=float)
    b = reps.shape[0]
    dev = reps - reps.mean(axis=0)
    return np.sqrt((b - 1) / b * np.sum(dev * dev, axis=0))


def jackknife(stat, arrays, labels):
    """Evaluate ``stat(*arrays)`` on the full rows and on every leave-one-block-out subset.

    Returns ``(estimate, se, replicates)``.
    """
    labels = np.asarray(labels)
    est = np.asarray(stat(*arrays), dtype=float)
    reps = []
    for b in np.unique(labels):
        keep = labels != b
        reps.append(stat(*(a[keep] for a in arrays)))
    reps = np.asarray(reps, dtype=float)
    return est, jackknife_se(reps), reps


def block_sums(values, labels, n_blocks: int | None = None) -> np.ndarray:
    """Sum rows of ``values`` per jackknife block (block axis first)."""
    values = np.asarray(values, dtype=float)
    nb = int(labels.max()) + 1 if n_blocks is None else n_blocks
    out = np.zeros((nb,) + values.shape[1:])
    np.add.at(out, labels, values)
    return out


def leave_one_out(block_totals) -> np.ndarray:
    return block_totals.sum(axis=0, keepdims=True) - block_totals


@dataclass
class TrendResult:
    passed: bool
    values: np.ndarray
    step_diffs: np.ndarray
    step_ses: np.ndarray
    final_value: float
    threshold: float | None
    notes: list[str] = field(default_factory=list)


def trend_to_zero(values, replicates, threshold: float | None = None, margin: float = SIGMA_MARGIN) -> TrendResult:
    """Decreasing trend along a schedule, within ``margin`` standard errors.

    Each step ``values[i+1] - values[i]`` must stay below ``margin`` times
    its paired jackknife SE (the replicates share blocks across the schedule,
    so the SE of the difference is taken from differenced replicates), and
    the last value must fall below ``threshold`` when one is given.
    """
    values = np.asarray(values, dtype=float)
    reps = np.asarray(replicates, dtype=float)
    diffs = np.diff(values)
    ses = jackknife_se(np.diff(reps, axis=1)) if len(values) > 1 else np.zeros(0)
    notes = []
    ok = True
    for i, (d, s) in enumerate(zip(diffs, ses)):
        if d > margin * s:
            ok = False
            notes.append(f"step {i}->{i + 1} increases by {d:.4g} > {margin}*SE ({s:.3g})")
    final = float(values[-1])
    if threshold is not None and not final < threshold:
        ok = False
        notes.append(f"final value {final:.4g} not below {threshold}")
    return TrendResult(ok, values, diffs, ses, final, threshold, notes)


def integrated_autocorr_time(series, c: float = 5.0) -> float:
    """Integrated autocorrelation time with Sokal's automatic window."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    n = x.size
    if n < 4 or not np.any(x):
        return 1.0
    f = np.fft.rfft(x, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    acf /= acf[0]
    tau = 1.0
    for w in range(1, n):
        tau = 1.0 + 2.0 * np.sum(acf[1 : w + 1])
        if w >= c * tau:
            break
    return float(max(tau, 1.0))
