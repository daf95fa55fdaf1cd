"""Spacing statistics on wedges and wedge subsections.

For a scan with projected distances ``p_1 <= ... <= p_N`` in dimension
``d`` the ratios ``(p_j / p_N) ** d`` are i.i.d. uniform order statistics
when the density is constant on the wedge.  The statistic sums
``beta(u) = 2u - 1`` over them: positive values point to a density that
increases along the axis, negative values to one that decreases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScaleError, InsufficientDataError, InvalidInputError

E = math.e


def beta(z):
    """``2z - 1`` on the open unit interval, zero elsewhere (vectorized)."""
    z = np.asarray(z, dtype=np.float64)
    out = np.where((z > 0.0) & (z < 1.0), 2.0 * z - 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def gamma_penalty(delta):
    """Multiscale penalty ``sqrt(2 log(e / delta))`` for ``0 < delta < e``."""
    arr = np.asarray(delta, dtype=np.float64)
    if np.any(~(arr > 0.0)) or np.any(~(arr < E)):
        raise InvalidInputError(f"gamma_penalty needs 0 < delta < e, got {delta!r}")
    out = np.sqrt(2.0 * np.log(E / arr))
    return float(out) if out.ndim == 0 else out


def _seq_sum(values: np.ndarray) -> float:
    # left-to-right accumulation; keeps whole-wedge and (0, N) subsection sums bit-identical
    if values.size == 0:
        return 0.0
    return float(np.cumsum(values)[-1])


@dataclass(frozen=True)
class StatisticValue:
    value: float
    count: int

    @property
    def span(self) -> int:
        return self.count + 1


def statistic_wedge(scan, d: int) -> StatisticValue:
    """``sum_{j<N} beta((p_j / p_N) ** d)``."""
    p = np.asarray(scan.distances, dtype=np.float64)
    N = p.shape[0]
    if N < 2:
        raise InsufficientDataError(f"wedge statistic needs at least 2 points, got {N}")
    pd = p ** d
    return StatisticValue(_seq_sum(beta(pd[:-1] / pd[-1])), N - 1)


def statistic_subsection(scan, j: int, k: int, d: int) -> StatisticValue:
    """Statistic of the slab between the ``j``-th and ``k``-th ordered points.

    Index 0 is the wedge vertex (projected distance 0), so ``(0, N)`` gives
    the whole-wedge statistic exactly.
    """
    p = np.asarray(scan.distances, dtype=np.float64)
    N = p.shape[0]
    if not (0 <= j < k <= N and k - j > 1):
        raise InvalidInputError(f"invalid subsection ({j}, {k}) for N={N}")
    pd = np.concatenate([[0.0], p ** d])
    den = pd[k] - pd[j]
    if not den > 0.0:
        raise DegenerateScaleError(f"subsection ({j}, {k}) has tied end points")
    return StatisticValue(_seq_sum(beta((pd[j + 1:k] - pd[j]) / den)), k - j - 1)


def normalize(value: float, n: int, span: int, one_sided: bool = False) -> float:
    """Scale-calibrated statistic ``sqrt(3/(span-1)) |T| - Gamma(span/(n-1))``.

    With ``one_sided`` the absolute value is replaced by ``-T``, so large
    values indicate a decrease along the axis.
    """
    if isinstance(value, StatisticValue):
        value = value.value
    if span < 2 or n < 3:
        raise InvalidInputError(f"normalize needs span >= 2 and n >= 3, got span={span}, n={n}")
    t = -value if one_sided else abs(value)
    return math.sqrt(3.0 / (span - 1)) * t - gamma_penalty(span / (n - 1))


def critical_value(span: int, n: int, kappa: float) -> float:
    """Rejection threshold ``sqrt((span-1)/3) (kappa + Gamma(span/(n-1)))`` for ``|T|``."""
    if span < 2:
        raise InvalidInputError(f"critical value needs span >= 2, got {span}")
    return math.sqrt((span - 1) / 3.0) * (kappa + gamma_penalty(span / (n - 1)))


def scale_tables(max_span: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``sqrt(3/(s-1))`` and ``Gamma(s/(n-1))`` indexed by span ``s`` (entries < 2 unused)."""
    s = np.arange(max_span + 1, dtype=np.float64)
    scale = np.zeros(max_span + 1)
    penalty = np.zeros(max_span + 1)
    if max_span >= 2:
        scale[2:] = np.sqrt(3.0 / (s[2:] - 1.0))
        penalty[2:] = gamma_penalty(s[2:] / (n - 1))
    return scale, penalty


def subsection_spans(N: int, max_scales: int | None = 200) -> np.ndarray | None:
    """Admissible spans ``k - j`` for a wedge holding ``N`` points.

    ``None`` (every span ``2..N``) unless ``N`` exceeds ``max_scales``; then
    the ladder ``N, N//2, N//4, ...`` down to 2, each with all offsets.
    """
    if max_scales is None or N <= max_scales:
        return None
    spans = []
    s = N
    while s >= 2:
        spans.append(s)
        s //= 2
    return np.array(sorted(set(spans), reverse=True), dtype=np.int64)
