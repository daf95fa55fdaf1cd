"""Univariate multiscale spacing test, used as a reference for the wedge tests.

For order statistics ``X_(1) <= ... <= X_(n)`` the local statistic on
``(X_(j), X_(k))`` sums ``beta`` over the rescaled interior points.  The
multiscale statistic maximizes its normalized absolute value over all
pairs with ``k - j > 1``.  Indices here are 1-based, as for order
statistics.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateScaleError, InsufficientDataError, InvalidInputError
from .nullsim import BLOCK, block_rng, empirical_quantile, replicate_statistic
from .statistics import _seq_sum, beta, critical_value, scale_tables

NOT_INCREASING = "not_increasing"
NOT_DECREASING = "not_decreasing"
NONE = "none"


@dataclass(frozen=True)
class IntervalDecision:
    j: int
    k: int
    T_jk: float
    c_jk: float
    verdict: str

    def to_dict(self) -> dict:
        return {"j": self.j, "k": self.k, "T_jk": self.T_jk, "c_jk": self.c_jk, "verdict": self.verdict}


def interval_verdict(T: float, c: float) -> str:
    if T < -c:
        return NOT_INCREASING
    if T > c:
        return NOT_DECREASING
    return NONE


def _sorted(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("sample contains non-finite values")
    return np.sort(x)


def spacing_statistic(sorted_sample, j: int, k: int) -> float:
    """``sum_{i=j+1}^{k-1} beta((X_(i) - X_(j)) / (X_(k) - X_(j)))``."""
    x = np.asarray(sorted_sample, dtype=np.float64).ravel()
    n = x.shape[0]
    if not (1 <= j < k <= n and k - j > 1):
        raise InvalidInputError(f"invalid pair ({j}, {k}) for n={n}")
    if np.any(np.diff(x) < 0):
        raise InvalidInputError("sample must be sorted")
    den = x[k - 1] - x[j - 1]
    if not den > 0.0:
        raise DegenerateScaleError(f"tied end points X_({j}) = X_({k})")
    return _seq_sum(beta((x[j:k - 1] - x[j - 1]) / den))


def _tables(n: int):
    if n < 3:
        raise InsufficientDataError(f"multiscale statistic needs n >= 3, got {n}")
    return scale_tables(n - 1, n)


def multiscale_statistic(sample) -> float:
    """``max_{k-j>1} sqrt(3/(k-j-1)) |T_jk| - Gamma((k-j)/(n-1))``."""
    x = _sorted(sample)
    scale, penalty = _tables(x.shape[0])
    return kernels.scan_max(x, scale, penalty)[0]


def _uniform_block(n: int, seed: int, b: int) -> np.ndarray:
    return np.sort(block_rng(seed, b).random((BLOCK, n)), axis=1)


def univariate_replicates(n: int, reps: int, seed: int, workers: int = 1) -> np.ndarray:
    """Multiscale statistic of ``reps`` uniform samples (block RNG contract of nullsim)."""
    if reps < 1:
        raise InvalidInputError("reps must be positive")
    scale, penalty = _tables(n)
    nblocks = -(-reps // BLOCK)

    def one(b):
        return kernels.scan_max_rows(_uniform_block(n, seed, b), scale, penalty)

    if workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(one, range(nblocks)))
    else:
        parts = [one(b) for b in range(nblocks)]
    return np.concatenate(parts)[:reps]


def univariate_quantile(n: int, alpha: float, reps: int, seed: int, workers: int = 1) -> float:
    """Simulated ``(1 - alpha)``-quantile ``kappa_n(alpha)`` of the multiscale statistic."""
    if not (0.0 < alpha < 1.0):
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha!r}")
    return empirical_quantile(univariate_replicates(n, reps, seed, workers), alpha)


def univariate_test(sample, kappa: float) -> list:
    """Intervals on which a monotonicity hypothesis is rejected at constant ``kappa``."""
    x = _sorted(sample)
    n = x.shape[0]
    scale, penalty = _tables(n)
    js, ks, _ = kernels.scan_exceed(x, scale, penalty, kappa - 1e-9)
    out = []
    for j, k in zip(js.tolist(), ks.tolist()):
        try:
            T = spacing_statistic(x, j + 1, k + 1)
        except DegenerateScaleError:
            continue
        c = critical_value(k - j, n, kappa)
        v = interval_verdict(T, c)
        if v != NONE:
            out.append(IntervalDecision(j + 1, k + 1, T, c, v))
    return out


@dataclass(frozen=True)
class PairedQuantiles:
    counts: tuple
    n: int
    alpha: float
    reps: int
    kappa_wedges: float
    kappa_univariate: float
    max_excess: float
    wedge_values: np.ndarray
    univariate_values: np.ndarray


def paired_quantiles(n: int, counts, alpha: float = 0.05, reps: int = 1000, seed: int = 0) -> PairedQuantiles:
    """Wedge and univariate quantiles on shared uniform replicates.

    Wedge ``i`` takes the contiguous block of ``counts[i]`` spacings of the
    sorted uniform sample following the previous block, so its ratios are
    exactly a local statistic of the univariate sample; hence the wedge
    maximum never exceeds the univariate one on the same replicate.
    ``max_excess`` is the largest replicate-wise excess (rounding only).
    """
    counts = tuple(int(c) for c in counts)
    if any(c < 2 for c in counts) or sum(counts) > n - 1:
        raise InvalidInputError("counts must be >= 2 and sum to at most n - 1")
    scale, penalty = _tables(n)
    nblocks = -(-reps // BLOCK)
    wv, uv = [], []
    for b in range(nblocks):
        S = _uniform_block(n, seed, b)
        uv.append(kernels.scan_max_rows(S, scale, penalty))
        blocks, s = [], 0
        for c in counts:
            lo, hi = S[:, s:s + 1], S[:, s + c:s + c + 1]
            blocks.append((S[:, s + 1:s + c] - lo) / (hi - lo))
            s += c
        wv.append(replicate_statistic(blocks, n, "two_sided_wedge"))
    wv = np.concatenate(wv)[:reps]
    uv = np.concatenate(uv)[:reps]
    return PairedQuantiles(counts, n, alpha, reps, empirical_quantile(wv, alpha), empirical_quantile(uv, alpha),
                           float(np.max(wv - uv)), wv, uv)


def closed_form_n3_quantile(alpha: float) -> float:
    """``kappa_3(alpha)``: for ``n = 3`` the statistic is ``sqrt(3)|2U - 1| - Gamma(1)``."""
    return math.sqrt(3.0) * (1.0 - alpha) - math.sqrt(2.0)
