import math

import numpy as np
import pytest

from modescope.errors import InvalidInputError
from modescope.geometry import Wedge
from modescope.harness import (SIGMA_2, STANDARD_NORMAL, TRIMODAL, Frequency, Scenario, detection_scenario,
                               expected_normal_counts, local_layout, normal_wedge_mass, run_level_power,
                               run_mode_detection_study, run_table, sample_density, sample_in_wedge,
                               two_source_sample, two_source_setup, uniform_box, uniformity_oracle)
from modescope.inference import detect_modes, GridModeProcedure
from modescope.nullsim import calibrate


def test_density_validation():
    with pytest.raises(InvalidInputError):
        Scenario({**TRIMODAL, "weights": [0.5, 0.5, 0.5]}, 10, local_layout(100))
    with pytest.raises(InvalidInputError):
        Scenario({"kind": "normal", "mean": [0, 0], "cov": [[1, 0.5], [0, 1]]}, 10, local_layout(100))
    with pytest.raises(InvalidInputError):
        Scenario({"kind": "normal", "mean": [0, 0], "cov": [[1, 0], [0, -1]]}, 10, local_layout(100))
    with pytest.raises(InvalidInputError):
        Scenario({"kind": "cauchy"}, 10, local_layout(100))


def test_sampling_moments():
    rng = np.random.default_rng(0)
    X = sample_density(SIGMA_2, 200_000, rng)
    np.testing.assert_allclose(np.cov(X.T), [[0.5, 0], [0, 1.5]], atol=0.02)
    M = sample_density(TRIMODAL, 300_000, rng)
    np.testing.assert_allclose(M.mean(axis=0), np.mean(TRIMODAL["means"], axis=0), atol=0.01)
    U = sample_density(uniform_box([-1, 2], [1, 3]), 1000, rng)
    assert U.min(axis=0)[0] >= -1 and U.max(axis=0)[1] <= 3


def test_frequency_se():
    f = Frequency(30, 100)
    assert f.rate == 0.3 and f.se == pytest.approx(math.sqrt(0.21 / 100))
    assert math.isnan(Frequency(0, 0).rate)


def test_level_power_deterministic():
    sc = Scenario(STANDARD_NORMAL, 100, local_layout(100), runs=20, seed=3, mode="raw", null_reps=200)
    a, b = run_level_power(sc), run_level_power(sc, workers=4)
    assert a.frequency == b.frequency and a.frequency.runs == 20


def test_zero_runs():
    res = run_mode_detection_study(detection_scenario(TRIMODAL, 0, 1))
    assert res.per_vertex == {} and res.any_mode.runs == 0
    assert run_level_power(Scenario(STANDARD_NORMAL, 100, local_layout(100), runs=0)).frequency.runs == 0


def test_detection_study_small():
    res = run_mode_detection_study(detection_scenario(TRIMODAL, 4, 2, mode="raw"))
    assert res.frequency_at((-2, 0)).runs == 4


def test_expected_counts():
    layout = local_layout(100)
    m = normal_wedge_mass(layout.wedges_at(np.zeros(2))[0])
    rng = np.random.default_rng(1)
    from modescope.geometry import scan_wedge
    X = rng.normal(size=(400_000, 2))
    assert scan_wedge(X, layout.wedges_at(np.zeros(2))[0]).N / 400_000 == pytest.approx(m, abs=0.003)
    assert expected_normal_counts(layout, 100) == (27, 27, 27)


def test_wedge_sampling_inside():
    K = Wedge(np.array([1.0, -2.0, 0.5]), np.array([0.0, 0.6, 0.8]), 0.4, 2.0)
    pts, acc = sample_in_wedge(K, 500, np.random.default_rng(0))
    assert len(pts) == 500 and K.contains_many(pts).all() and 0 < acc <= 1


def test_oracle_uniform_and_power():
    K = Wedge(np.zeros(2), np.array([0.6, 0.8]), 0.5, 1.0)
    s = uniformity_oracle(K, 500, 200, 1)
    assert 0.02 <= s.rejection_rate <= 0.09 and s.aggregate_p_value > 0.001
    assert uniformity_oracle(K, 500, 50, 2, density="linear").rejection_rate > 0.5


def test_oracle_1d():
    K = Wedge(np.zeros(1), np.ones(1), 0.5, 3.0)
    s = uniformity_oracle(K, 100, 200, 3)
    assert 0.01 <= s.rejection_rate <= 0.1 and s.acceptance_ratio == 1.0


def test_table_dispatch():
    with pytest.raises(InvalidInputError):
        run_table("table9", 1, 1)
    t = run_table("table1", 200, 1)
    assert [r["n"] for r in t["rows"]] == [100, 500] and t["rows"][0]["counts"] == [27, 27, 27]


def test_two_source_fixture():
    grid, layout, box = two_source_setup()
    n = 3000
    kappa = calibrate(GridModeProcedure(grid, layout), 0.05, 200, box, n, 1)
    hits = 0
    for r in range(100):
        V = detect_modes(two_source_sample(np.random.default_rng(r), n), grid, layout, kappa=kappa).mode_vertices()
        hits += all(any(np.max(np.abs(v - np.array(s))) <= grid.mesh + 1e-9 for v in V)
                    for s in ((0.31, 0.29), (0.69, 0.61)))
    assert hits >= 95
