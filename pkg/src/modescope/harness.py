"""Simulation studies: level/power of the local test, mode detection, oracles.

Every frequency is reported with its run count and binomial standard error.
Data for run ``r`` come from ``SeedSequence(seed, spawn_key=(r, 0))``; the
raw-mode null simulation of run ``r`` is seeded from ``spawn_key=(r, 1)`` and
calibration from ``spawn_key=(CALIBRATION_KEY,)``, so a scenario and seed
fully determine the table.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .errors import InvalidInputError
from .geometry import ScaleParams, Wedge, WedgeLayout, build_grid, planar_directions
from .inference import GridModeProcedure, LocalModeProcedure, detect_modes, local_mode_test
from .nullsim import NullConfig, calibrate, simulate_null

CALIBRATION_KEY = 2**31 - 1

TRIMODAL = {
    "kind": "mixture",
    "weights": [1 / 3, 1 / 3, 1 / 3],
    "means": [[-0.05, 2.1], [-1.9, -0.07], [2.0, -0.1]],
    "covs": [np.diag([0.5, 0.5]).tolist(), np.diag([0.2, 0.2]).tolist(), np.diag([0.25, 0.25]).tolist()],
}
STANDARD_NORMAL = {"kind": "normal", "mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]}
# shape-study covariances, specified by their eigenvalues (0.5, 1) and (0.5, 1.5)
SIGMA_1 = {"kind": "normal", "mean": [0.0, 0.0], "cov": [[0.5, 0.0], [0.0, 1.0]]}
SIGMA_2 = {"kind": "normal", "mean": [0.0, 0.0], "cov": [[0.5, 0.0], [0.0, 1.5]]}
SIGMA_NOTE = ("covariance realized as a diagonal matrix with the stated eigenvalues; "
              "the off-diagonal layout of the source matrices is not symmetric")
LEVEL_BOX = ((-2.5, -2.5), (2.5, 2.5))
DETECTION_BOX = ((-3.5, -1.5), (3.5, 3.5))


def uniform_box(lower, upper) -> dict:
    return {"kind": "uniform", "lower": list(map(float, lower)), "upper": list(map(float, upper))}


def _check_cov(cov) -> None:
    c = np.asarray(cov, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or not np.allclose(c, c.T):
        raise InvalidInputError("covariance must be a symmetric square matrix")
    try:
        np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        raise InvalidInputError("covariance must be positive definite") from None


def _check_density(density: dict) -> None:
    kind = density.get("kind")
    if kind == "uniform":
        if not np.all(np.asarray(density["upper"]) > np.asarray(density["lower"])):
            raise InvalidInputError("uniform box needs lower < upper")
    elif kind == "normal":
        _check_cov(density["cov"])
    elif kind == "mixture":
        w = np.asarray(density["weights"], dtype=float)
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise InvalidInputError("mixture weights must be positive and sum to 1")
        if not (len(w) == len(density["means"]) == len(density["covs"])):
            raise InvalidInputError("mixture needs one mean and covariance per weight")
        for c in density["covs"]:
            _check_cov(c)
    else:
        raise InvalidInputError(f"unknown density kind {kind!r}")


def sample_density(density: dict, n: int, rng: np.random.Generator) -> np.ndarray:
    kind = density["kind"]
    if kind == "uniform":
        lo = np.asarray(density["lower"], dtype=float)
        hi = np.asarray(density["upper"], dtype=float)
        return lo + (hi - lo) * rng.random((n, lo.shape[0]))
    if kind == "normal":
        mean = np.asarray(density["mean"], dtype=float)
        L = np.linalg.cholesky(np.asarray(density["cov"], dtype=float))
        return mean + rng.standard_normal((n, mean.shape[0])) @ L.T
    # categorical label first, then the component's Gaussian
    w = np.asarray(density["weights"], dtype=float)
    means = np.asarray(density["means"], dtype=float)
    chol = np.array([np.linalg.cholesky(np.asarray(c, dtype=float)) for c in density["covs"]])
    labels = rng.choice(len(w), size=n, p=w / w.sum())
    Z = rng.standard_normal((n, means.shape[1]))
    return means[labels] + np.einsum("nij,nj->ni", chol[labels], Z)


def run_rng(seed: int, run: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(run), int(stream))))


def derived_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Scenario:
    density: dict
    n: int
    layout: WedgeLayout
    runs: int = 1000
    seed: int = 0
    alpha: float = 0.05
    mode: str = "calibrated"
    x0: tuple | None = (0.0, 0.0)
    grid: object = None
    reference_box: tuple | None = None
    calibration_x0: tuple | None = None
    calibration_reps: int = 1000
    null_reps: int = 1000
    label: str = ""
    notes: str = ""

    def __post_init__(self):
        _check_density(self.density)
        if self.mode not in ("raw", "calibrated"):
            raise InvalidInputError(f"mode must be raw or calibrated, got {self.mode!r}")
        if self.runs < 0:
            raise InvalidInputError("runs must be nonnegative")

    def box(self):
        if self.reference_box is not None:
            return self.reference_box
        if self.density["kind"] == "uniform":
            return (tuple(self.density["lower"]), tuple(self.density["upper"]))
        raise InvalidInputError("calibrated scenarios need a reference box")

    def to_dict(self) -> dict:
        return {
            "label": self.label, "density": self.density, "n": self.n, "runs": self.runs,
            "seed": self.seed, "alpha": self.alpha, "mode": self.mode,
            "x0": None if self.x0 is None else list(self.x0),
            "layout": self.layout.to_dict(),
            "grid": None if self.grid is None else {
                "lower": self.grid.lower.tolist(), "upper": self.grid.upper.tolist(), "mesh": self.grid.mesh},
            "reference_box": None if self.reference_box is None else [list(b) for b in self.reference_box],
            "calibration_x0": None if self.calibration_x0 is None else list(self.calibration_x0),
            "calibration_reps": self.calibration_reps, "null_reps": self.null_reps, "notes": self.notes,
        }


@dataclass(frozen=True)
class Frequency:
    hits: int
    runs: int

    @property
    def rate(self) -> float:
        return self.hits / self.runs if self.runs else float("nan")

    @property
    def se(self) -> float:
        if not self.runs:
            return float("nan")
        p = self.rate
        return math.sqrt(p * (1 - p) / self.runs)

    def to_dict(self) -> dict:
        return {"hits": self.hits, "runs": self.runs, "rate": self.rate, "se": self.se}


def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def scenario_kappa(sc: Scenario, procedure, workers: int = 1):
    """Calibrated constant shared by every run of a calibrated scenario."""
    return calibrate(procedure, sc.alpha, sc.calibration_reps, sc.box(), sc.n,
                     derived_seed(sc.seed, CALIBRATION_KEY), workers=workers)


@dataclass(frozen=True)
class LevelPowerResult:
    scenario: Scenario
    frequency: Frequency
    kappa: object = None

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.to_dict(), "frequency": self.frequency.to_dict(),
                "kappa": None if self.kappa is None else self.kappa.to_dict()}


def _box_center(box):
    return tuple((np.asarray(box[0], float) + np.asarray(box[1], float)) / 2)


def run_level_power(sc: Scenario, workers: int = 1) -> LevelPowerResult:
    """Frequency with which the local test declares a mode at ``sc.x0``.

    Calibrated scenarios calibrate once, at ``calibration_x0`` (default: the
    centre of the reference box), and reuse that constant for every run.
    """
    x0 = np.asarray(sc.x0, dtype=float)
    kappa = None
    if sc.mode == "calibrated" and sc.runs:
        cx = np.asarray(sc.calibration_x0 if sc.calibration_x0 is not None else _box_center(sc.box()))
        kappa = scenario_kappa(sc, LocalModeProcedure(cx, sc.layout), workers)

    def one(r):
        X = sample_density(sc.density, sc.n, run_rng(sc.seed, r))
        res = local_mode_test(X, x0, sc.layout, sc.alpha, sc.mode, seed=derived_seed(sc.seed, r, 1),
                              reps=sc.null_reps, kappa=kappa)
        return res.mode_detected

    hits = sum(_map(one, range(sc.runs), workers))
    return LevelPowerResult(sc, Frequency(int(hits), sc.runs), kappa)


@dataclass(frozen=True)
class DetectionStudyResult:
    scenario: Scenario
    per_vertex: dict
    any_mode: Frequency
    kappa: object = None

    def frequency_at(self, vertex) -> Frequency:
        return self.per_vertex.get(_vkey(vertex), Frequency(0, self.any_mode.runs))

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.to_dict(),
                "per_vertex": [{"vertex": list(k), **v.to_dict()} for k, v in sorted(self.per_vertex.items())],
                "any_mode": self.any_mode.to_dict(),
                "kappa": None if self.kappa is None else self.kappa.to_dict()}


def _vkey(v):
    return tuple(round(float(c), 9) for c in v)


def run_mode_detection_study(sc: Scenario, workers: int = 1) -> DetectionStudyResult:
    """Per-vertex frequency of declared modes over ``sc.runs`` samples."""
    if sc.grid is None:
        raise InvalidInputError("mode detection scenarios need a grid")
    kappa = None
    if sc.mode == "calibrated" and sc.runs:
        kappa = scenario_kappa(sc, GridModeProcedure(sc.grid, sc.layout), workers)

    def one(r):
        X = sample_density(sc.density, sc.n, run_rng(sc.seed, r))
        det = detect_modes(X, sc.grid, sc.layout, sc.alpha, sc.mode, seed=derived_seed(sc.seed, r, 1),
                           reps=sc.null_reps, kappa=kappa)
        return [_vkey(v) for v, _ in det]

    counts, anyhit = {}, 0
    for found in _map(one, range(sc.runs), workers):
        anyhit += bool(found)
        for k in found:
            counts[k] = counts.get(k, 0) + 1
    per_vertex = {k: Frequency(c, sc.runs) for k, c in counts.items()}
    return DetectionStudyResult(sc, per_vertex, Frequency(anyhit, sc.runs), kappa)


def wedge_bounding_box(K: Wedge):
    d = K.dim
    t = math.tan(K.angle)
    corners = [K.vertex]
    for signs in itertools.product((-1.0, 1.0), repeat=d - 1):
        offset = K.direction + sum((s * t * b for s, b in zip(signs, K.complement)), np.zeros(d))
        corners.append(K.vertex + K.length * offset)
    corners = np.array(corners)
    return corners.min(axis=0), corners.max(axis=0)


def sample_in_wedge(K: Wedge, count: int, rng: np.random.Generator, density: str = "uniform"):
    """Rejection sampling inside ``K``; ``density="linear"`` weights by projected distance.

    Returns the points and the acceptance ratio.
    """
    lo, hi = wedge_bounding_box(K)
    out, drawn, have = [], 0, 0
    while have < count:
        m = max(2 * (count - have), 64)
        cand = lo + (hi - lo) * rng.random((m, K.dim))
        keep = K.contains_many(cand)
        if density == "linear":
            keep &= rng.random(m) * K.length < K.project(cand)
        elif density != "uniform":
            raise InvalidInputError(f"unknown oracle density {density!r}")
        drawn += m
        out.append(cand[keep])
        have += int(keep.sum())
    return np.concatenate(out)[:count], have / drawn


@dataclass(frozen=True)
class OracleSummary:
    ks_statistics: np.ndarray = field(repr=False)
    p_values: np.ndarray = field(repr=False)
    rejection_rate: float
    aggregate_p_value: float
    acceptance_ratio: float

    def to_dict(self) -> dict:
        return {"rejection_rate": self.rejection_rate, "aggregate_p_value": self.aggregate_p_value,
                "mean_ks": float(np.mean(self.ks_statistics)), "acceptance_ratio": self.acceptance_ratio,
                "reps": int(self.p_values.size)}


def uniformity_oracle(K: Wedge, n_points: int, reps: int, seed: int, density: str = "uniform",
                      level: float = 0.05) -> OracleSummary:
    """KS check that ``(p_j / p_N) ** d`` behave as uniform order statistics.

    Points are drawn inside ``K`` (uniformly, or with density proportional to
    the projected distance for a power check of the oracle itself).
    """
    from .geometry import scan_wedge

    d = K.dim
    ks, ps, acc = [], [], []
    for r in range(reps):
        pts, ratio = sample_in_wedge(K, n_points, run_rng(seed, r), density)
        p = scan_wedge(pts, K).distances
        u = (p[:-1] / p[-1]) ** d
        res = stats.kstest(u, "uniform")
        ks.append(res.statistic)
        ps.append(res.pvalue)
        acc.append(ratio)
    ps = np.array(ps)
    agg = stats.kstest(ps, "uniform").pvalue if reps > 1 else float("nan")
    return OracleSummary(np.array(ks), ps, float(np.mean(ps < level)), float(agg), float(np.mean(acc)))


def normal_wedge_mass(K: Wedge) -> float:
    """Standard-normal probability of a planar wedge with vertex at the origin."""
    if K.dim != 2 or np.any(K.vertex != 0):
        raise InvalidInputError("closed form only for planar wedges at the origin")
    t = math.tan(K.angle)
    f = lambda p: stats.norm.pdf(p) * (2 * stats.norm.cdf(t * p) - 1)
    return integrate.quad(f, 0.0, K.length)[0]


def expected_normal_counts(layout: WedgeLayout, n: int) -> tuple:
    """Rounded expected wedge counts at the origin under the standard normal."""
    return tuple(int(round(n * normal_wedge_mass(K))) for K in layout.wedges_at(np.zeros(2)))


def table_quantile(n: int, reps: int = 10_000, seed: int = 0, alpha: float = 0.05, workers: int = 1):
    """One-sided constant for the local-test geometry, conditional on expected normal counts."""
    layout = WedgeLayout.from_params(ScaleParams(2.0, 9.65, n, 2))
    counts = expected_normal_counts(layout, n)
    return simulate_null(NullConfig(counts, n, alpha, reps, seed, "one_sided_wedge"), workers=workers)


def local_layout(n: int, C1: float = 2.0, C2: float = 9.65) -> WedgeLayout:
    return WedgeLayout.from_params(ScaleParams(C1, C2, n, 2))


def level_power_row(n: int, runs: int, seed: int, layout: WedgeLayout | None = None,
                    power_density: dict = STANDARD_NORMAL, x0=(0.0, 0.0), which=("level", "power", "level_cal", "power_cal"),
                    workers: int = 1, label: str = "", notes: str = "") -> dict:
    """Raw/calibrated level (uniform box) and power (``power_density``) at ``x0``."""
    layout = layout or local_layout(n)
    level_density = uniform_box(*LEVEL_BOX)
    specs = {
        "level": (level_density, "raw"),
        "power": (power_density, "raw"),
        "level_cal": (level_density, "calibrated"),
        "power_cal": (power_density, "calibrated"),
    }
    row = {"n": n, "length": layout.length, "directions": len(layout.directions), "label": label}
    if notes:
        row["notes"] = notes
    for i, key in enumerate(which):
        dens, mode = specs[key]
        sc = Scenario(dens, n, layout, runs, derived_seed(seed, n, i), mode=mode, x0=tuple(x0),
                      reference_box=LEVEL_BOX, label=f"{label}:{key}", notes=notes)
        row[key] = run_level_power(sc, workers).frequency
    return row


def detection_layout() -> WedgeLayout:
    return WedgeLayout(0.5, math.pi / 4, planar_directions(4))


def detection_grid():
    return build_grid([-3.0, -1.0], [3.0, 3.0], 1.0)


def detection_scenario(density: dict, runs: int, seed: int, n: int = 2500, mode: str = "calibrated",
                       label: str = "") -> Scenario:
    return Scenario(density, n, detection_layout(), runs, seed, mode=mode, x0=None, grid=detection_grid(),
                    reference_box=DETECTION_BOX, label=label)


TABLES = ("table1", "table2", "table4", "table5", "lengths", "directions", "detection")


def run_table(name: str, runs: int, seed: int, slow: bool = False, workers: int = 1) -> dict:
    """Reproduce one of the published simulation tables; returns rows of frequencies."""
    sizes = (100, 500, 5000) if slow else (100, 500)
    rows = []
    if name == "table1":
        for n in sizes:
            q = table_quantile(n, reps=max(runs, 1), seed=derived_seed(seed, n), workers=workers)
            rows.append({"n": n, "counts": list(q.config.counts), "kappa": q.kappa})
    elif name == "table2":
        rows = [level_power_row(n, runs, seed, workers=workers, label="table2") for n in sizes]
    elif name == "lengths":
        for C1 in (2.0, 1.5, 1.0):
            rows.append(level_power_row(500, runs, seed, local_layout(500, C1=C1), workers=workers,
                                        label=f"lengths:C1={C1}"))
    elif name == "table4":
        for tag, dens in (("sigma1", SIGMA_1), ("sigma2", SIGMA_2)):
            for n in sizes:
                rows.append(level_power_row(n, runs, seed, power_density=dens, which=("power", "power_cal"),
                                            workers=workers, label=f"table4:{tag}", notes=SIGMA_NOTE))
    elif name == "table5":
        for x0 in ((0.2, 0.2), (0.7, 0.7)):
            for n in sizes:
                rows.append(level_power_row(n, runs, seed, x0=x0, which=("power", "power_cal"),
                                            workers=workers, label=f"table5:x0={x0}"))
    elif name == "directions":
        for M in (4, 6, 8):
            layout = WedgeLayout.from_params(ScaleParams(2.0, 9.65 * 4 / M, 500, 2))
            rows.append(level_power_row(500, runs, seed, layout, workers=workers, label=f"directions:M={M}"))
    elif name == "detection":
        for tag, dens in (("trimodal", TRIMODAL), ("uniform", uniform_box(*DETECTION_BOX))):
            res = run_mode_detection_study(detection_scenario(dens, runs, derived_seed(seed, len(tag)), label=tag),
                                           workers)
            rows.append({"label": tag, "per_vertex": res.to_dict()["per_vertex"], "any_mode": res.any_mode})
    else:
        raise InvalidInputError(f"unknown table {name!r}; choose from {TABLES}")
    return {"table": name, "runs": runs, "seed": seed, "slow": slow, "rows": rows}


# synthetic stand-in for a two-source photon event list: uniform background on
# the unit square plus two compact Gaussian sources slightly off the grid vertices
TWO_SOURCES = ((0.31, 0.29), (0.69, 0.61))
TWO_SOURCE_BOX = ((0.0, 0.0), (1.0, 1.0))


def two_source_sample(rng: np.random.Generator, n: int = 3000, source_fraction: float = 0.2,
                      sigma: float = 0.03) -> np.ndarray:
    k = rng.binomial(n, source_fraction)
    centers = np.asarray(TWO_SOURCES)[rng.integers(0, 2, k)]
    src = centers + sigma * rng.standard_normal((k, 2))
    lo, hi = (np.asarray(b) for b in TWO_SOURCE_BOX)
    return np.vstack([src, lo + (hi - lo) * rng.random((n - k, 2))])


def two_source_setup():
    """Grid, layout and reference box used with ``two_source_sample``."""
    return build_grid([0.1, 0.1], [0.9, 0.9], 0.1), WedgeLayout(0.05, math.pi / 4, planar_directions(4)), \
        TWO_SOURCE_BOX
