"""Wedges, direction sets, wedge scales and candidate grids.

A wedge with vertex ``x0``, unit axis ``e``, half-opening angle ``phi`` and
length ``l`` holds the points ``x`` with ``0 < <x - x0, e> <= l`` and
``|<x - x0, e_i>| <= tan(phi) * <x - x0, e>`` for every vector ``e_i`` of a
fixed orthonormal basis of the complement of ``e``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc
from scipy.special import ndtri

from .errors import InvalidInputError, ParameterError

UNIT_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def as_sample(points) -> np.ndarray:
    """Return the sample as a float ``(n, d)`` array, validating finiteness."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidInputError(f"sample must be a 2-d array of points, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("sample contains non-finite coordinates")
    return X


def _as_unit(e, d=None) -> np.ndarray:
    e = np.asarray(e, dtype=np.float64).ravel()
    if d is not None and e.shape[0] != d:
        raise InvalidInputError(f"direction has dimension {e.shape[0]}, expected {d}")
    if not np.all(np.isfinite(e)):
        raise InvalidInputError("direction contains non-finite entries")
    if abs(np.linalg.norm(e) - 1.0) > UNIT_TOL:
        raise InvalidInputError(f"direction must have unit norm, got {np.linalg.norm(e)!r}")
    return e


def orthonormal_complement(e, d: int | None = None) -> np.ndarray:
    """Orthonormal basis of the complement of ``span{e}`` as a ``(d-1, d)`` array.

    Gram-Schmidt over the standard basis, leaving out the axis most aligned
    with ``e``; so ``e = (0, 0, 1)`` gives ``(1, 0, 0), (0, 1, 0)``.
    """
    e = _as_unit(e, d)
    d = e.shape[0]
    skip = int(np.argmax(np.abs(e)))
    basis = [e]
    for i in range(d):
        if i == skip:
            continue
        v = np.zeros(d)
        v[i] = 1.0
        for _ in range(2):  # re-orthogonalize once for stability
            for b in basis:
                v = v - np.dot(v, b) * b
        basis.append(v / np.linalg.norm(v))
    return np.array(basis[1:]).reshape(d - 1, d)


def signed_projected_distance(x, x0, e) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    e = np.asarray(e, dtype=np.float64).ravel()
    if not (x.shape == x0.shape == e.shape):
        raise InvalidInputError(f"dimension mismatch: x {x.shape}, x0 {x0.shape}, e {e.shape}")
    return float(np.dot(x - x0, e))


@dataclass(frozen=True)
class Wedge:
    vertex: np.ndarray
    direction: np.ndarray
    angle: float
    length: float
    complement: np.ndarray = None

    def __post_init__(self):
        vertex = _frozen(self.vertex).ravel()
        direction = _as_unit(self.direction, vertex.shape[0])
        if not np.all(np.isfinite(vertex)):
            raise InvalidInputError("wedge vertex must be finite")
        if not (0.0 < self.angle < math.pi / 2):
            raise InvalidInputError(f"wedge angle must lie in (0, pi/2), got {self.angle!r}")
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise InvalidInputError(f"wedge length must be positive, got {self.length!r}")
        comp = self.complement
        if comp is None:
            comp = orthonormal_complement(direction)
        comp = np.asarray(comp, dtype=np.float64).reshape(vertex.shape[0] - 1, vertex.shape[0])
        full = np.vstack([direction, comp])
        if not np.allclose(full @ full.T, np.eye(full.shape[0]), atol=UNIT_TOL, rtol=0.0):
            raise InvalidInputError("complement basis is not orthonormal and orthogonal to the direction")
        object.__setattr__(self, "vertex", vertex)
        object.__setattr__(self, "direction", _frozen(direction))
        object.__setattr__(self, "complement", _frozen(comp))
        object.__setattr__(self, "angle", float(self.angle))
        object.__setattr__(self, "length", float(self.length))

    @property
    def dim(self) -> int:
        return self.vertex.shape[0]

    def project(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.vertex) @ self.direction

    def contains_many(self, X) -> np.ndarray:
        """Membership mask for the rows of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise InvalidInputError(f"points must have shape (n, {self.dim}), got {X.shape}")
        diff = X - self.vertex
        p = diff @ self.direction
        mask = (p > 0.0) & (p <= self.length)
        if self.dim > 1:
            side = np.abs(diff @ self.complement.T)
            mask &= np.all(side <= math.tan(self.angle) * p[:, None], axis=1)
        return mask


def wedge_contains(K: Wedge, x) -> bool:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != K.dim:
        raise InvalidInputError(f"point has dimension {x.shape[0]}, wedge has {K.dim}")
    return bool(K.contains_many(x[None, :])[0])


@dataclass(frozen=True)
class WedgeScan:
    wedge: Wedge
    member_indices: np.ndarray
    distances: np.ndarray

    @property
    def N(self) -> int:
        return int(self.distances.shape[0])


def scan_wedge(sample, K: Wedge) -> WedgeScan:
    """Sample points inside ``K`` sorted by projected distance (ties by index)."""
    X = as_sample(sample)
    idx = np.flatnonzero(K.contains_many(X))
    p = K.project(X[idx]) if idx.size else np.empty(0)
    order = np.argsort(p, kind="stable")
    return WedgeScan(K, _frozen(idx[order]).astype(np.int64), _frozen(p[order]))


@dataclass(frozen=True)
class ScaleParams:
    C1: float
    C2: float
    n: int
    d: int
    epsilon: float = 0.01

    def __post_init__(self):
        if not (self.C1 > 0 and self.C2 > 0):
            raise ParameterError("C1 and C2 must be positive")
        if not (0 < self.epsilon < 1):
            raise ParameterError("epsilon must lie in (0, 1)")
        if self.n < 3:
            raise ParameterError("sample size must be at least 3")
        if self.d < 1:
            raise ParameterError("dimension must be at least 1")


def base_length(n: int, d: int) -> float:
    """``(log n / n) ** (1 / (d + 4))``."""
    return (math.log(n) / n) ** (1.0 / (d + 4))


def default_scales(p: ScaleParams) -> tuple[float, float]:
    """Wedge length and angle for the local test: ``C1 log(n)^((d-1)/(d+4)) l_n`` and ``C2 / (2 log n)``."""
    logn = math.log(p.n)
    length = p.C1 * logn ** ((p.d - 1) / (p.d + 4)) * base_length(p.n, p.d)
    angle = p.C2 / (2.0 * logn)
    if angle >= math.pi / 2:
        raise ParameterError(f"C2 too large for this n: angle {angle:.4f} >= pi/2")
    return length, angle


def default_mesh(p: ScaleParams) -> float:
    """Grid mesh ``(2 + eps) C1 log(n) l_n``."""
    return (2.0 + p.epsilon) * p.C1 * math.log(p.n) * base_length(p.n, p.d)


def min_separation(d: int, angle: float, epsilon: float) -> float:
    """Required pairwise angle between wedge axes."""
    return (2.0 + epsilon) * math.atan(math.sqrt(d - 1) * math.tan(angle))


def planar_directions(count: int, offset: float = 0.0) -> np.ndarray:
    t = offset + 2.0 * math.pi * np.arange(count) / count
    return np.column_stack([np.cos(t), np.sin(t)])


def _sphere_candidates(d: int, count: int, seed: int) -> np.ndarray:
    u = qmc.Halton(d, scramble=True, seed=seed).random(count)
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def direction_set(d: int, angle: float, epsilon: float = 0.01, *, count: int | None = None,
                  seed: int = 0, candidates: int = 4096) -> np.ndarray:
    """Central wedge directions as a ``(M, d)`` array of unit vectors.

    In the plane the directions are equally spaced starting at ``(1, 0)``;
    ``M = floor(pi / angle + 1e-2)`` unless ``count`` is given.  For
    ``d >= 3`` a farthest-point packing of seeded low-discrepancy candidates
    is grown from the first axis while the smallest pairwise angle stays
    above ``min_separation``.
    """
    if not (0.0 < angle < math.pi / 2):
        raise ParameterError(f"angle must lie in (0, pi/2), got {angle!r}")
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        M = count if count is not None else int(math.floor(math.pi / angle + 1e-2))
        if M < 1:
            raise ParameterError("angle too large: no direction fits")
        return planar_directions(M)
    sep = min_separation(d, angle, epsilon)
    cand = _sphere_candidates(d, candidates, seed)
    first = np.zeros(d)
    first[0] = 1.0
    chosen = [first]
    closest = np.arccos(np.clip(cand @ first, -1.0, 1.0))
    while count is None or len(chosen) < count:
        i = int(np.argmax(closest))
        if closest[i] < sep:
            break
        chosen.append(cand[i])
        closest = np.minimum(closest, np.arccos(np.clip(cand @ cand[i], -1.0, 1.0)))
    return np.array(chosen)


@dataclass(frozen=True)
class WedgeLayout:
    """Length, angle and axis set shared by every wedge of a procedure."""

    length: float
    angle: float
    directions: np.ndarray = field(repr=False)

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=np.float64))
        for e in dirs:
            _as_unit(e)
        if not (0.0 < self.angle < math.pi / 2) or not self.length > 0:
            raise ParameterError("layout needs length > 0 and angle in (0, pi/2)")
        object.__setattr__(self, "directions", _frozen(dirs))
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "angle", float(self.angle))

    @classmethod
    def from_params(cls, p: ScaleParams, count: int | None = None, seed: int = 0) -> "WedgeLayout":
        length, angle = default_scales(p)
        return cls(length, angle, direction_set(p.d, angle, p.epsilon, count=count, seed=seed))

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def wedges_at(self, x0) -> list[Wedge]:
        return [Wedge(x0, e, self.angle, self.length) for e in self.directions]

    def overlapping(self) -> bool:
        """Whether any two wedges at a vertex can share interior points."""
        if self.dim == 1:
            return False
        sep = 2.0 * math.atan(math.sqrt(self.dim - 1) * math.tan(self.angle))
        cos = np.clip(self.directions @ self.directions.T, -1.0, 1.0)
        ang = np.arccos(cos[np.triu_indices(len(self.directions), 1)])
        return bool(np.any(ang < sep - 1e-9))

    def to_dict(self) -> dict:
        return {"length": self.length, "angle": self.angle, "directions": self.directions.tolist()}


@dataclass(frozen=True)
class Grid:
    lower: np.ndarray
    upper: np.ndarray
    mesh: float
    vertices: np.ndarray = field(repr=False, default=None)
    shape: tuple = ()


def grid_counts(lower, upper, mesh) -> tuple[int, ...]:
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    return tuple(int(math.floor((u - l) / mesh + 1e-9)) + 1 for l, u in zip(lower, upper))


def build_grid(lower, upper, mesh: float) -> Grid:
    """Vertices ``lower + mesh * (i_1, ..., i_d)`` inside the box, first axis slowest."""
    lower = np.asarray(lower, dtype=np.float64).ravel()
    upper = np.asarray(upper, dtype=np.float64).ravel()
    if lower.shape != upper.shape:
        raise InvalidInputError("grid bounds have different dimensions")
    if not (mesh > 0 and math.isfinite(mesh)):
        raise InvalidInputError(f"mesh must be positive, got {mesh!r}")
    if not np.all(lower < upper):
        raise InvalidInputError("grid needs lower < upper in every coordinate")
    counts = grid_counts(lower, upper, mesh)
    axes = [lo + mesh * np.arange(c) for lo, c in zip(lower, counts)]
    mesh_pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lower.shape[0])
    return Grid(_frozen(lower), _frozen(upper), float(mesh), _frozen(mesh_pts), counts)


def bounding_box(sample, pad: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    X = as_sample(sample)
    return X.min(axis=0) - pad, X.max(axis=0) + pad
