import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modescope.errors import DegenerateScaleError, InsufficientDataError, InvalidInputError
from modescope.geometry import Wedge, WedgeScan, scan_wedge
from modescope.harness import sample_in_wedge
from modescope.statistics import (beta, critical_value, gamma_penalty, normalize, statistic_subsection,
                                  statistic_wedge)


def scan(distances):
    K = Wedge(np.zeros(1), np.ones(1), 0.5, max(distances))
    return WedgeScan(K, np.arange(len(distances)), np.asarray(distances, dtype=float))


def test_beta_examples():
    assert beta(0.5) == 0 and beta(0.75) == 0.5
    assert beta(0.0) == 0 and beta(1.0) == 0 and beta(-3) == 0 and beta(2) == 0


def test_beta_antisymmetry(rng):
    z = rng.random(10_000)
    assert np.max(np.abs(beta(z) + beta(1 - z))) <= 1e-12


def test_gamma_examples():
    assert abs(gamma_penalty(1.0) - math.sqrt(2)) < 1e-12
    assert abs(gamma_penalty(1 / math.e) - 2.0) < 1e-12
    assert gamma_penalty(0.1) > gamma_penalty(0.2)
    assert gamma_penalty(2.5) > 0  # (1, e) is legal
    for bad in (0.0, -1.0, math.e, 3.0):
        with pytest.raises(InvalidInputError):
            gamma_penalty(bad)


def test_wedge_statistic_examples():
    assert statistic_wedge(scan([0.5, 1.0]), 2).value == -0.5
    assert statistic_wedge(scan([0.2, 0.5, 1.0]), 1).value == pytest.approx(-0.6, abs=1e-15)
    assert statistic_wedge(scan([0.25, 0.5, 0.75, 1.0]), 1).value == 0
    v = statistic_wedge(scan([0.5, 1.0]), 2)
    assert v.count == 1
    with pytest.raises(InsufficientDataError):
        statistic_wedge(scan([0.5]), 2)


def test_subsection_examples():
    s = scan([0.2, 0.4, 1.0])
    assert statistic_subsection(s, 1, 3, 1).value == -0.5
    assert statistic_subsection(scan([0.3, 0.6]), 0, 2, 1).value == 0
    assert statistic_subsection(s, 0, 3, 1).value == statistic_wedge(s, 1).value
    with pytest.raises(InvalidInputError):
        statistic_subsection(s, 1, 2, 1)
    with pytest.raises(InvalidInputError):
        statistic_subsection(s, 0, 4, 1)
    with pytest.raises(DegenerateScaleError):
        statistic_subsection(scan([0.2, 0.2, 0.2, 1.0]), 1, 3, 1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=40), st.integers(1, 4))
def test_whole_wedge_equals_full_subsection(values, d):
    s = scan(sorted(values))
    a, b = statistic_subsection(s, 0, s.N, d), statistic_wedge(s, d)
    assert a.value == b.value and a.count == b.count
    assert abs(b.value) <= b.count


def test_normalize_examples():
    assert normalize(0.0, 101, 2) == pytest.approx(-math.sqrt(2 * (1 + math.log(50))), abs=1e-12)
    m = 7
    assert normalize(float(m), 101, m + 1) == pytest.approx(math.sqrt(3 * m) - gamma_penalty((m + 1) / 100))
    assert normalize(-2.5, 101, 9, one_sided=True) == normalize(2.5, 101, 9)
    with pytest.raises(InvalidInputError):
        normalize(1.0, 101, 1)


def test_critical_value_identities():
    assert critical_value(2, 101, 0.0) == pytest.approx(math.sqrt(1 / 3) * gamma_penalty(0.02))
    assert abs(critical_value(17, 101, -gamma_penalty(17 / 100))) < 1e-12
    assert critical_value(10, 101, 0.3) < critical_value(10, 101, 0.4)
    assert critical_value(10, 101, 0.3) < critical_value(11, 101, 0.3)


def test_reversal_negates(rng):
    u = np.sort(rng.random(25))
    s = scan(np.concatenate([u, [1.0]]))
    r = scan(np.concatenate([np.sort(1 - u), [1.0]]))
    assert statistic_wedge(s, 1).value == pytest.approx(-statistic_wedge(r, 1).value, abs=1e-12)


def test_null_moments():
    rng = np.random.default_rng(7)
    m, reps = 12, 200_000
    z = math.sqrt(3 / m) * beta(rng.random((reps, m))).sum(axis=1)
    assert abs(z.mean()) < 3 * z.std() / math.sqrt(reps)
    assert abs(z.var() - 1) < 0.02


def test_rigid_invariance(rng):
    X = rng.normal(size=(400, 2))
    K = Wedge(np.array([0.1, 0.0]), np.array([0.8, 0.6]), 0.5, 1.5)
    th = 0.7
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    b = np.array([3.0, -2.0])
    KR = Wedge(R @ K.vertex + b, R @ K.direction, K.angle, K.length, complement=K.complement @ R.T)
    t1 = statistic_wedge(scan_wedge(X, K), 2).value
    t2 = statistic_wedge(scan_wedge(X @ R.T + b, KR), 2).value
    assert t1 == pytest.approx(t2, abs=1e-9)
    Ks = Wedge(3 * K.vertex, K.direction, K.angle, 3 * K.length, complement=K.complement)
    assert statistic_wedge(scan_wedge(3 * X, Ks), 2).value == pytest.approx(t1, abs=1e-9)


@pytest.mark.parametrize("density,sign", [("linear", 1), ("decreasing", -1)])
def test_monotone_sign(density, sign):
    K = Wedge(np.zeros(2), np.array([1.0, 0.0]), 0.5, 1.0)
    rng = np.random.default_rng(11)
    vals = []
    for _ in range(1000):
        if density == "linear":
            pts, _ = sample_in_wedge(K, 30, rng, "linear")
        else:
            pts, _ = sample_in_wedge(K, 200, rng)
            keep = rng.random(len(pts)) * K.length < K.length - K.project(pts)
            pts = pts[keep][:30]
        vals.append(statistic_wedge(scan_wedge(pts, K), 2).value)
    assert sign * np.mean(vals) > 0
