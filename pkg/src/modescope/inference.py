"""Local mode test, monotonicity map and grid mode detection.

A wedge rejects "the density increases along the axis" when its spacing
statistic falls below ``-threshold`` and rejects "the density decreases"
when it exceeds ``threshold``; thresholds share one critical constant
``kappa`` across every test of a run.  A mode is declared at a vertex when
every wedge there rejects "increasing".
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateScaleError, InvalidInputError
from .geometry import Grid, ScaleParams, WedgeLayout, as_sample, bounding_box, scan_wedge
from .nullsim import NullConfig, NullQuantile, calibrate, simulate_null
from .statistics import (critical_value, normalize, scale_tables, statistic_subsection,
                         statistic_wedge, subsection_spans)

log = logging.getLogger(__name__)

INCREASE_REJECTED = "increase_rejected"
DECREASE_REJECTED = "decrease_rejected"
NONE = "none"
INSUFFICIENT = "insufficient_data"

__all__ = [
    "WedgeDecision", "ModeTestResult", "MonotonicityMap", "ModeDetection", "TheoryConstants",
    "critical_value", "local_mode_test", "monotonicity_map", "detect_modes", "theory_constants",
    "LocalModeProcedure", "GridModeProcedure", "MapProcedure",
]


@dataclass(frozen=True)
class WedgeDecision:
    vertex: int
    direction: int
    N: int
    T: float | None
    threshold: float | None
    verdict: str
    scale: tuple

    def to_dict(self) -> dict:
        return {"vertex": self.vertex, "direction": self.direction, "N": self.N, "T": self.T,
                "threshold": self.threshold, "verdict": self.verdict, "scale": list(self.scale)}

    @classmethod
    def from_dict(cls, d: dict) -> "WedgeDecision":
        return cls(int(d["vertex"]), int(d["direction"]), int(d["N"]), d["T"], d["threshold"],
                   d["verdict"], tuple(d["scale"]))


def verdict_for(T: float, threshold: float) -> str:
    if T < -threshold:
        return INCREASE_REJECTED
    if T > threshold:
        return DECREASE_REJECTED
    return NONE


def _resolve_layout(scales, n: int, d: int) -> WedgeLayout:
    if isinstance(scales, WedgeLayout):
        if scales.dim != d:
            raise InvalidInputError(f"layout is {scales.dim}-dimensional, sample is {d}-dimensional")
        return scales
    if isinstance(scales, ScaleParams):
        return WedgeLayout.from_params(scales)
    raise InvalidInputError("scales must be a WedgeLayout or ScaleParams")


def _vertex_stats(X, x0, layout: WedgeLayout):
    """Scans and whole-wedge statistics (``None`` when N < 2) at one vertex."""
    d = X.shape[1]
    out = []
    for K in layout.wedges_at(x0):
        scan = scan_wedge(X, K)
        out.append((scan, statistic_wedge(scan, d) if scan.N >= 2 else None))
    return out


def _mode_score(X, stats) -> float:
    # mode declared iff kappa < min over wedges of the one-sided normalized statistic
    n = X.shape[0]
    worst = math.inf
    for scan, st in stats:
        if st is None:
            return -math.inf
        worst = min(worst, normalize(st.value, n, scan.N, one_sided=True))
    return worst if stats else -math.inf


class LocalModeProcedure:
    """Mode test at one fixed vertex; calibration target for the local test."""

    def __init__(self, x0, layout: WedgeLayout):
        self.x0 = np.asarray(x0, dtype=np.float64).ravel()
        self.layout = layout

    def critical_kappa(self, X) -> float:
        return _mode_score(X, _vertex_stats(X, self.x0, self.layout))

    def describe(self) -> dict:
        return {"procedure": "local-test", "x0": self.x0.tolist(), "layout": self.layout.to_dict()}


class GridModeProcedure:
    """Mode detection over all grid vertices with a shared threshold."""

    def __init__(self, grid: Grid, layout: WedgeLayout):
        self.grid = grid
        self.layout = layout

    def critical_kappa(self, X) -> float:
        return max((_mode_score(X, _vertex_stats(X, v, self.layout)) for v in self.grid.vertices),
                   default=-math.inf)

    def describe(self) -> dict:
        return {"procedure": "detect-modes", "grid": _grid_dict(self.grid),
                "layout": self.layout.to_dict()}


class MapProcedure:
    """Two-sided monotonicity tests on every wedge (and optionally every subsection)."""

    def __init__(self, grid: Grid, layout: WedgeLayout, use_subsections: bool = False,
                 max_scales: int | None = 200):
        self.grid = grid
        self.layout = layout
        self.use_subsections = use_subsections
        self.max_scales = max_scales

    def critical_kappa(self, X) -> float:
        n, d = X.shape
        best = -math.inf
        for v in self.grid.vertices:
            for scan, st in _vertex_stats(X, v, self.layout):
                if st is None:
                    continue
                if self.use_subsections:
                    a = np.concatenate([[0.0], scan.distances ** d])
                    scale, pen = scale_tables(scan.N, n)
                    z = kernels.scan_max(a, scale, pen, subsection_spans(scan.N, self.max_scales))[0]
                else:
                    z = normalize(st.value, n, scan.N)
                best = max(best, z)
        return best

    def describe(self) -> dict:
        return {"procedure": "map", "grid": _grid_dict(self.grid), "layout": self.layout.to_dict(),
                "use_subsections": self.use_subsections, "max_scales": self.max_scales}


def _grid_dict(grid: Grid) -> dict:
    return {"lower": grid.lower.tolist(), "upper": grid.upper.tolist(), "mesh": grid.mesh,
            "shape": list(grid.shape)}


@dataclass(frozen=True)
class ModeTestResult:
    x0: np.ndarray
    mode_detected: bool
    per_wedge: tuple
    kappa: NullQuantile | None

    def to_dict(self) -> dict:
        return {"x0": np.asarray(self.x0).tolist(), "mode_detected": self.mode_detected,
                "per_wedge": [w.to_dict() for w in self.per_wedge],
                "kappa": None if self.kappa is None else self.kappa.to_dict()}


def _mode_decisions(X, stats, kappa: float, vertex: int = 0) -> tuple:
    n = X.shape[0]
    out = []
    for i, (scan, st) in enumerate(stats):
        if st is None:
            out.append(WedgeDecision(vertex, i, scan.N, None, None, INSUFFICIENT, (0, scan.N)))
            continue
        thr = critical_value(scan.N, n, kappa)
        out.append(WedgeDecision(vertex, i, scan.N, st.value, thr, verdict_for(st.value, thr),
                                 (0, scan.N)))
    return tuple(out)


def _detected(decisions) -> bool:
    return bool(decisions) and all(w.verdict == INCREASE_REJECTED for w in decisions)


def _default_box(X):
    return bounding_box(X)


def local_mode_test(sample, x0, scales, alpha: float = 0.05, mode: str = "raw", seed: int = 0,
                    reps: int = 1000, kappa: NullQuantile | None = None, reference_box=None,
                    workers: int = 1) -> ModeTestResult:
    """Test for a mode at ``x0``.

    ``raw`` simulates the one-sided constant conditional on the observed
    wedge counts; ``calibrated`` calibrates it on uniform data in
    ``reference_box`` (default: the sample's bounding box).  A precomputed
    ``kappa`` skips both.
    """
    X = as_sample(sample)
    n, d = X.shape
    if n < 3:
        raise InvalidInputError("local mode test needs n >= 3")
    layout = _resolve_layout(scales, n, d)
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    stats = _vertex_stats(X, x0, layout)
    if kappa is None:
        kappa = _obtain_kappa([s.N for s, _ in stats], n, alpha, mode, seed, reps, workers,
                              "one_sided_wedge", lambda: LocalModeProcedure(x0, layout),
                              reference_box if reference_box is not None else _default_box(X))
    if kappa is None:
        decisions = _mode_decisions(X, stats, math.inf)
        return ModeTestResult(x0, False, decisions, None)
    decisions = _mode_decisions(X, stats, kappa.kappa)
    return ModeTestResult(x0, _detected(decisions), decisions, kappa)


def _obtain_kappa(counts, n, alpha, mode, seed, reps, workers, flavor, make_procedure, box,
                  max_scales=200):
    if mode == "raw":
        if not any(c >= 2 for c in counts):
            return None
        cfg = NullConfig(tuple(counts), n, alpha, reps, seed, flavor, max_scales)
        return simulate_null(cfg, workers=workers)
    if mode == "calibrated":
        return calibrate(make_procedure(), alpha, reps, box, n, seed, workers=workers)
    raise InvalidInputError(f"mode must be 'raw' or 'calibrated', got {mode!r}")


@dataclass(frozen=True)
class MonotonicityMap:
    grid: Grid
    layout: WedgeLayout
    decisions: tuple
    alpha: float
    kappa: NullQuantile | None
    use_subsections: bool = False
    counts: tuple = field(default=(), repr=False)

    def whole_wedge(self) -> dict:
        """``{(vertex, direction): WedgeDecision}`` for the whole-wedge scale."""
        return {(w.vertex, w.direction): w for w in self.decisions if w.scale[0] == 0
                and w.scale[1] == w.N}

    def rejections(self) -> list:
        return [w for w in self.decisions if w.verdict in (INCREASE_REJECTED, DECREASE_REJECTED)]


def _map_vertex(X, vi, v, layout, kappa, use_subsections, max_scales):
    n, d = X.shape
    out = []
    for di, (scan, st) in enumerate(_vertex_stats(X, v, layout)):
        if st is None:
            out.append(WedgeDecision(vi, di, scan.N, None, None, INSUFFICIENT, (0, scan.N)))
            continue
        thr = critical_value(scan.N, n, kappa)
        out.append(WedgeDecision(vi, di, scan.N, st.value, thr, verdict_for(st.value, thr),
                                 (0, scan.N)))
        if not use_subsections:
            continue
        a = np.concatenate([[0.0], scan.distances ** d])
        scale, pen = scale_tables(scan.N, n)
        # kernel screens with a small slack; verdicts come from the exact statistic
        js, ks, _ = kernels.scan_exceed(a, scale, pen, kappa - 1e-9,
                                        subsection_spans(scan.N, max_scales))
        for j, k in zip(js.tolist(), ks.tolist()):
            if j == 0 and k == scan.N:
                continue
            try:
                sv = statistic_subsection(scan, j, k, d)
            except DegenerateScaleError:
                log.warning("skipping degenerate subsection (%d, %d) at vertex %d, direction %d",
                            j, k, vi, di)
                continue
            t = critical_value(k - j, n, kappa)
            verdict = verdict_for(sv.value, t)
            if verdict != NONE:
                out.append(WedgeDecision(vi, di, scan.N, sv.value, t, verdict, (j, k)))
    return out


def _all_counts(X, grid, layout):
    return [scan_wedge(X, K).N for v in grid.vertices for K in layout.wedges_at(v)]


def monotonicity_map(sample, grid: Grid, scales, alpha: float = 0.05, use_subsections: bool = False,
                     seed: int = 0, reps: int = 1000, kappa: NullQuantile | None = None,
                     mode: str = "raw", reference_box=None, max_scales: int | None = 200,
                     workers: int = 1) -> MonotonicityMap:
    """Simultaneous monotonicity tests on every wedge (and subsection) of the grid.

    Whole-wedge decisions are recorded for every wedge; subsection decisions
    only where a hypothesis is rejected.
    """
    X = as_sample(sample)
    n, d = X.shape
    layout = _resolve_layout(scales, n, d)
    if len(grid.vertices) == 0:
        raise InvalidInputError("grid has no vertices")
    if layout.overlapping():
        log.warning("wedges at a vertex overlap; the joint error guarantee does not hold")
    counts = tuple(_all_counts(X, grid, layout))
    if kappa is None:
        flavor = "multiscale_subsections" if use_subsections else "two_sided_wedge"
        kappa = _obtain_kappa(counts, n, alpha, mode, seed, reps, workers, flavor,
                              lambda: MapProcedure(grid, layout, use_subsections, max_scales),
                              reference_box if reference_box is not None else _default_box(X), max_scales)
    k = math.inf if kappa is None else kappa.kappa

    def job(item):
        vi, v = item
        return _map_vertex(X, vi, v, layout, k, use_subsections, max_scales)

    items = list(enumerate(grid.vertices))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, items))
    else:
        parts = [job(it) for it in items]
    decisions = tuple(w for part in parts for w in part)
    return MonotonicityMap(grid, layout, decisions, alpha, kappa, use_subsections, counts)


@dataclass(frozen=True)
class ModeDetection:
    grid: Grid
    layout: WedgeLayout
    modes: tuple
    kappa: NullQuantile | None
    alpha: float

    @property
    def precision(self) -> float:
        return self.grid.mesh

    def __iter__(self):
        return iter(self.modes)

    def __len__(self):
        return len(self.modes)

    def mode_vertices(self) -> np.ndarray:
        return np.array([v for v, _ in self.modes]).reshape(-1, self.grid.lower.shape[0])


def detect_modes(sample, grid: Grid, scales, alpha: float = 0.05, mode: str = "raw", seed: int = 0,
                 reps: int = 1000, kappa: NullQuantile | None = None, reference_box=None,
                 workers: int = 1) -> ModeDetection:
    """Grid vertices at which every wedge rejects "increasing" under a shared threshold."""
    X = as_sample(sample)
    n, d = X.shape
    layout = _resolve_layout(scales, n, d)
    if len(grid.vertices) == 0:
        raise InvalidInputError("grid has no vertices")
    per_vertex = [_vertex_stats(X, v, layout) for v in grid.vertices]
    if kappa is None:
        counts = [s.N for stats in per_vertex for s, _ in stats]
        kappa = _obtain_kappa(counts, n, alpha, mode, seed, reps, workers, "one_sided_wedge",
                              lambda: GridModeProcedure(grid, layout),
                              reference_box if reference_box is not None else _default_box(X))
    modes = []
    if kappa is not None:
        for vi, (v, stats) in enumerate(zip(grid.vertices, per_vertex)):
            decisions = _mode_decisions(X, stats, kappa.kappa, vi)
            if _detected(decisions):
                modes.append((np.array(v), ModeTestResult(np.array(v), True, decisions, kappa)))
    return ModeDetection(grid, layout, tuple(modes), kappa, alpha)


@dataclass(frozen=True)
class TheoryConstants:
    d: int
    j: int
    D_value: float
    C_bound: float
    context: str


def d_decreasing(d: int, j: int) -> float:
    """Constant D for the "not increasing" direction at order ``j``.

    ``j = 2`` is the local-test constant, ``j = 1`` the grid-detection one.
    """
    a = 2 * d + j
    ratio = (1.0 - d / (d + j)) ** ((d + j) / d)
    inner = 1.0 - d * d / (2.0 * a * a) * (-1.0 + math.sqrt(1.0 + 4.0 * (a / d) ** 2))
    return 2.0 * math.sqrt(2.0) * a * (d + j) / (j * ratio * math.sqrt(inner))


def d_increasing(d: int, j: int) -> float:
    """Lower bound on D for the "not decreasing" direction at order ``j``."""
    a = 2 * d + j
    first = a * (-1.0 + math.sqrt(1.0 + 2.0 * j * j / (a * a)))
    second = 1.0 - j * j / (2.0 * a * a) * (-1.0 + math.sqrt(1.0 + 4.0 * a * a / (j * j)))
    return j * (d + j) * 2.0 * math.sqrt(2.0) / (first * math.sqrt(second))


def theory_constants(d: int, j: int, c: float, f_at_mode: float) -> TheoryConstants:
    """Guidance constants for choosing ``C1`` and ``C2``.

    ``j = 2``: local test, bound ``C1^(d+4) C2^(d-1) > 4 D^2 f(x0) / (c^2 (d+4))``.
    ``j = 1``: grid detection, bound ``D^2 c1 / (c^2 (d+4))`` with
    ``f_at_mode`` the upper density bound ``c1``.
    Never enforced by the procedures.
    """
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise InvalidInputError(f"dimension must be a positive integer, got {d!r}")
    if j not in (1, 2):
        raise InvalidInputError(f"order j must be 1 or 2, got {j!r}")
    if not (c > 0 and f_at_mode > 0):
        raise InvalidInputError("curvature bound c and density value must be positive")
    D = d_decreasing(d, j)
    if j == 2:
        bound = 4.0 * D * D / (c * c) * f_at_mode / (d + 4)
        context = "local-test"
    else:
        bound = D * D / (c * c) * f_at_mode / (d + 4)
        context = "detect-modes"
    return TheoryConstants(d, j, D, bound, context)
