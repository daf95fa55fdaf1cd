import json
import math

import numpy as np
import pytest

from modescope import cli
from modescope.errors import DataParseError, InvalidInputError
from modescope.geometry import WedgeLayout, build_grid, direction_set
from modescope.harness import TRIMODAL, sample_density
from modescope.inference import MonotonicityMap, detect_modes, local_mode_test, monotonicity_map
from modescope.io import SCHEMA, dumps, parse_points, read_results, to_document, write_results
from modescope.render import render_svg


def test_parse_examples(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0.5,0.2\n0.9,0.0\n")
    np.testing.assert_array_equal(parse_points(p), [[0.5, 0.2], [0.9, 0.0]])
    p.write_text("x,y\n1,2\n3 4\n\n# note\n5\t6\n")
    np.testing.assert_array_equal(parse_points(p), [[1, 2], [3, 4], [5, 6]])
    p.write_text("# header comment\n1 2 3\n")
    assert parse_points(p).shape == (1, 3)


@pytest.mark.parametrize("text,line", [("1,2\n3,4\n5\n", 3), ("x,y\n1,2\n1,b\n", 3), ("", 1), ("x,y\n", 1),
                                       ("1,2\n1,nan\n", 2)])
def test_parse_errors(tmp_path, text, line):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(DataParseError) as exc:
        parse_points(p)
    assert exc.value.line == line and f"line {line}" in str(exc.value)


def test_parse_missing(tmp_path):
    with pytest.raises(DataParseError):
        parse_points(tmp_path / "none.csv")


def _map():
    X = sample_density(TRIMODAL, 3000, np.random.default_rng(1))
    grid = build_grid([-3, -1], [3, 3], 1.0)
    layout = WedgeLayout(0.5, math.pi / 4, direction_set(2, math.pi / 4))
    return X, grid, layout, monotonicity_map(X, grid, layout, seed=4, reps=200, use_subsections=True)


def test_roundtrip(tmp_path):
    X, grid, layout, mp = _map()
    doc = write_results(mp, tmp_path / "m.json", config={"x": 1}, seed=4)
    back = read_results(tmp_path / "m.json")
    assert back["schema"] == SCHEMA and back["seed"] == 4 and back["config"] == {"x": 1}
    assert back["decisions"] == list(mp.decisions)
    assert back["kappa"]["kappa"] == mp.kappa.kappa and back["kappa"]["config"]["seed"] == 4
    det = detect_modes(X, grid, layout, seed=1, reps=200)
    d = to_document(det, seed=1)
    assert all(m["precision"] == 1.0 for m in d["modes"])
    assert len(d["modes"]) == len(det)


def test_empty_document(tmp_path):
    empty = MonotonicityMap(build_grid([0, 0], [1, 1], 1), WedgeLayout(0.5, 0.7, direction_set(2, 0.7)), (), 0.05,
                            None)
    write_results(empty, tmp_path / "e.json")
    back = read_results(tmp_path / "e.json")
    assert back["decisions"] == [] and back["modes"] == []


def test_unwritable(tmp_path):
    with pytest.raises(InvalidInputError):
        write_results({"a": 1}, tmp_path / "missing" / "dir" / "x.json")


def test_svg(tmp_path):
    X, grid, layout, mp = _map()
    a = render_svg(mp)
    assert a == render_svg(mp)
    assert a.startswith("<?xml") and 'version="1.1"' in a
    assert a.count("<polygon") == 35 * 4
    assert "increase rejected" in a and "decrease rejected" in a and "no rejection" in a
    import xml.dom.minidom
    xml.dom.minidom.parseString(a)
    none = MonotonicityMap(grid, layout, (), 0.05, None)
    b = render_svg(none)
    assert "url(#hatch)" in b and b.count('fill="url(#hatch)"') == 1  # legend only
    layout3 = WedgeLayout(0.5, 0.5, direction_set(3, 0.5))
    with pytest.raises(InvalidInputError):
        render_svg(MonotonicityMap(build_grid([0, 0, 0], [1, 1, 1], 1), layout3, (), 0.05, None))


def test_cli_usage(capsys):
    assert cli.main([]) == 1
    assert "usage" in capsys.readouterr().err
    assert cli.main(["map", "--bogus"]) == 1
    assert cli.main(["frobnicate"]) == 1


@pytest.fixture
def points(tmp_path):
    X = sample_density(TRIMODAL, 2500, np.random.default_rng(5))
    p = tmp_path / "pts.csv"
    np.savetxt(p, X, delimiter=",", header="x,y", comments="")
    return p


def test_cli_requires_seed(points, capsys):
    assert cli.main(["local-test", "--input", str(points), "--x0", "-2,0"]) == 1
    assert "--seed" in capsys.readouterr().err
    assert cli.main(["simulate", "--scenario", "table2", "--runs", "1"]) == 1


def test_cli_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert cli.main(["local-test", "--input", str(bad), "--x0", "0,0", "--seed", "1"]) == 2
    assert "line 2" in capsys.readouterr().err
    assert cli.main(["local-test", "--input", str(tmp_path / "nope.csv"), "--x0", "0,0", "--seed", "1"]) == 2


def test_cli_matches_library(points, tmp_path):
    out = tmp_path / "lt.json"
    assert cli.main(["local-test", "--input", str(points), "--x0", "-2,0", "--length", "0.5", "--angle",
                     "0.7853981634", "--seed", "3", "--reps", "300", "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    layout = WedgeLayout(0.5, 0.7853981634, direction_set(2, 0.7853981634))
    res = local_mode_test(parse_points(points), [-2, 0], layout, seed=3, reps=300)
    lib = to_document(res, doc["config"], 3)
    assert dumps(lib) == out.read_text()


def test_cli_map_svg_and_kappa_reuse(points, tmp_path):
    svg, cal = tmp_path / "m.svg", tmp_path / "cal.json"
    args = ["--input", str(points), "--box", "-3,-1,3,3", "--mesh", "1", "--length", "0.5", "--angle",
            "0.7853981634"]
    assert cli.main(["map", *args, "--seed", "1", "--reps", "200", "--svg", str(svg),
                     "--output", str(tmp_path / "m.json")]) == 0
    assert svg.read_text().startswith("<?xml")
    assert cli.main(["calibrate", "--n", "2500", "--box", "-3,-1,3,3", "--mesh", "1", "--length", "0.5",
                     "--angle", "0.7853981634", "--reference-box", "-3.5,-1.5,3.5,3.5", "--reps", "50",
                     "--seed", "2", "--output", str(cal)]) == 0
    assert cli.main(["detect-modes", *args, "--kappa-file", str(cal), "--output", str(tmp_path / "d.json")]) == 0
    d = json.loads((tmp_path / "d.json").read_text())
    assert d["kappa"]["kind"] == "calibrated" and isinstance(d["modes"], list)


def test_cli_univariate(tmp_path):
    p = tmp_path / "u.txt"
    np.savetxt(p, np.random.default_rng(0).random(60))
    out = tmp_path / "u.json"
    assert cli.main(["univariate", "--input", str(p), "--seed", "1", "--reps", "200", "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["kind"] == "univariate" and doc["payload"]["n"] == 60
