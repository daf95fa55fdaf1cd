"""Monte-Carlo null distributions of the maximum wedge statistics.

Conditional on the wedge counts ``N^1, ..., N^M`` the whole-wedge statistics
under a locally constant density are independent sums of ``beta`` over
``N^i - 1`` uniforms.  The critical constant ``kappa`` is the empirical
``(1 - alpha)``-quantile of the maximum normalized statistic.

Random streams: replicates are drawn in fixed blocks of ``BLOCK``; block
``b`` uses ``SeedSequence(seed, spawn_key=(b,))`` and replicate ``r`` is row
``r % BLOCK`` of block ``r // BLOCK``.  A replicate's values therefore depend
only on ``(seed, r, counts)`` and never on the number of workers.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import InsufficientDataError, InvalidInputError
from .statistics import scale_tables, subsection_spans

log = logging.getLogger(__name__)

BLOCK = 128
FLAVORS = ("two_sided_wedge", "one_sided_wedge", "multiscale_subsections")


@dataclass(frozen=True)
class NullConfig:
    counts: tuple
    n: int
    alpha: float = 0.05
    reps: int = 1000
    seed: int = 0
    flavor: str = "two_sided_wedge"
    max_scales: int | None = 200

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if any(c < 0 for c in counts):
            raise InvalidInputError("wedge counts must be nonnegative")
        if self.flavor not in FLAVORS:
            raise InvalidInputError(f"unknown flavor {self.flavor!r}; choose from {FLAVORS}")
        if not (0.0 < self.alpha < 1.0):
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.reps < 1:
            raise InvalidInputError("reps must be positive")
        if self.n < 3:
            raise InvalidInputError("n must be at least 3")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = list(self.counts)
        return d


@dataclass(frozen=True)
class NullQuantile:
    kappa: float
    config: object
    replicate_values: np.ndarray | None = field(default=None, repr=False, compare=False)
    kind: str = "simulated"

    def to_dict(self) -> dict:
        cfg = self.config.to_dict() if hasattr(self.config, "to_dict") else dict(self.config)
        return {"kind": self.kind, "kappa": self.kappa, "config": cfg}

    @classmethod
    def from_dict(cls, data: dict) -> "NullQuantile":
        cfg = data["config"]
        if data.get("kind", "simulated") == "simulated":
            cfg = NullConfig(**{**cfg, "counts": tuple(cfg["counts"])})
        return cls(float(data["kappa"]), cfg, None, data.get("kind", "simulated"))


def empirical_quantile(values, alpha: float) -> float:
    """The ``ceil((1 - alpha) * R)``-th smallest of ``R`` values (at least the 1st)."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise InsufficientDataError("no replicate values")
    rank = math.ceil((1.0 - alpha) * v.size - 1e-9)
    rank = min(max(rank, 1), v.size)
    return float(v[rank - 1])


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(block),)))


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Generator for one replicate of a data-generating simulation."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(replicate),)))


def whole_wedge_stats(U: np.ndarray) -> np.ndarray:
    """Row-wise ``sum(beta(U))`` for sorted uniforms in ``[0, 1]``.

    Evaluated as the (0, N) pair of the kernels on ``[0, U, 1]`` so that the
    multiscale flavor restricted to that pair agrees to the last bit.
    """
    m = U.shape[1]
    if m == 0:
        return np.zeros(U.shape[0])
    D = np.cumsum(U, axis=1)[:, -1]
    tj = np.count_nonzero(U == 0.0, axis=1)
    tk = np.count_nonzero(U == 1.0, axis=1)
    return 2.0 * D / 1.0 - float(m) + tj.astype(np.float64) - tk.astype(np.float64)


def replicate_statistic(blocks, n: int, flavor: str, max_scales: int | None = 200) -> np.ndarray:
    """Maximum normalized statistic per replicate.

    ``blocks`` holds one ``(R, N_i - 1)`` array of sorted interior uniforms
    per wedge.
    """
    best = None
    for U in blocks:
        U = np.ascontiguousarray(U, dtype=np.float64)
        N = U.shape[1] + 1
        if N < 2:
            continue
        scale, penalty = scale_tables(N, n)
        if flavor == "multiscale_subsections":
            A = np.empty((U.shape[0], N + 1))
            A[:, 0] = 0.0
            A[:, 1:N] = U
            A[:, N] = 1.0
            z = kernels.scan_max_rows(A, scale, penalty, subsection_spans(N, max_scales))
        else:
            T = whole_wedge_stats(U)
            t = -T if flavor == "one_sided_wedge" else np.abs(T)
            z = scale[N] * t - penalty[N]
        best = z if best is None else np.maximum(best, z)
    if best is None:
        raise InsufficientDataError("every wedge holds fewer than 2 observations")
    return best


def _simulate_block(config: NullConfig, active: list, b: int) -> np.ndarray:
    total = sum(c - 1 for c in active)
    draws = block_rng(config.seed, b).random((BLOCK, total))
    blocks, start = [], 0
    for c in active:
        blocks.append(np.sort(draws[:, start:start + c - 1], axis=1))
        start += c - 1
    return replicate_statistic(blocks, config.n, config.flavor, config.max_scales)


def replicate_maxima(config: NullConfig, workers: int = 1) -> np.ndarray:
    active = [c for c in config.counts if c >= 2]
    if not active:
        raise InsufficientDataError("every wedge holds fewer than 2 observations")
    nblocks = -(-config.reps // BLOCK)
    if workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda b: _simulate_block(config, active, b), range(nblocks)))
    else:
        parts = [_simulate_block(config, active, b) for b in range(nblocks)]
    return np.concatenate(parts)[: config.reps]


def simulate_null(config: NullConfig, workers: int = 1, keep_replicates: bool = False) -> NullQuantile:
    """Simulated critical constant for the configured flavor."""
    values = replicate_maxima(config, workers)
    kappa = empirical_quantile(values, config.alpha)
    log.debug("simulated kappa %.4f (%s, %d wedges, reps=%d)", kappa, config.flavor,
              len(config.counts), config.reps)
    return NullQuantile(kappa, config, values if keep_replicates else None)


@dataclass(frozen=True)
class CalibrationConfig:
    procedure: dict
    n: int
    alpha: float
    reps: int
    seed: int
    reference_box: tuple
    scope: str = "global"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reference_box"] = [list(map(float, b)) for b in self.reference_box]
        return d


def calibration_criticals(procedure, reference_box, n: int, reps: int, seed: int,
                          workers: int = 1) -> np.ndarray:
    """Per replicate, the critical kappa of ``procedure`` on uniform data in the box."""
    lower = np.asarray(reference_box[0], dtype=np.float64)
    upper = np.asarray(reference_box[1], dtype=np.float64)
    if lower.shape != upper.shape or not np.all(upper > lower):
        raise InvalidInputError("reference box must satisfy lower < upper in every coordinate")

    def one(r):
        X = lower + (upper - lower) * replicate_rng(seed, r).random((n, lower.shape[0]))
        return procedure.critical_kappa(X)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return np.array(list(ex.map(one, range(reps))), dtype=np.float64)
    return np.array([one(r) for r in range(reps)], dtype=np.float64)


def calibrate(procedure, alpha: float, reps: int, reference_box, n: int, seed: int,
              workers: int = 1, keep_replicates: bool = False) -> NullQuantile:
    """Threshold giving false-discovery frequency ``alpha`` on uniform reference data.

    The procedure reports for each replicate the kappa below which it would
    make a discovery; the returned kappa is the ``(1 - alpha)``-quantile of
    those, so that the discovery frequency on uniform data is ``alpha`` up to
    Monte-Carlo error.  One threshold is calibrated per procedure (global).
    """
    if not (0.0 < alpha <= 1.0):
        raise InvalidInputError(f"alpha must lie in (0, 1], got {alpha!r}")
    values = calibration_criticals(procedure, reference_box, n, reps, seed, workers)
    kappa = empirical_quantile(values, alpha)
    box = (tuple(map(float, np.ravel(reference_box[0]))), tuple(map(float, np.ravel(reference_box[1]))))
    cfg = CalibrationConfig(procedure.describe(), n, alpha, reps, seed, box)
    return NullQuantile(kappa, cfg, values if keep_replicates else None, kind="calibrated")
