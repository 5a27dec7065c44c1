import csv
import json

import pytest

from goperators import cli
from goperators.errors import UsageError

SMALL = {
    "name": "small",
    "manifold": {"dim": 1, "n_points": 64},
    "group": {"kind": "integers", "action": {"rotation": 0.7}},
    "element": {"unit": 1.0, "coeffs": [{"g": 1, "symbol": {"constant": 0.5}}]},
    "experiments": [
        {"type": "ellipticity", "windows": [8, 16], "n_bases": 4},
        {"type": "wavefront", "window_width": 8},
    ],
}


def _copy(sc):
    return json.loads(json.dumps(sc))


# -- validation --------------------------------------------------------------

@pytest.mark.parametrize("path, key", [
    ((), "colour"),
    (("manifold",), "radius"),
    (("group",), "speed"),
    (("element",), "kernel"),
    (("experiments", 0), "verbose"),
])
def test_validate_rejects_unknown_keys(path, key):
    sc = _copy(SMALL)
    obj = sc
    for p in path:
        obj = obj[p]
    obj[key] = 1
    with pytest.raises(UsageError):
        cli.validate(sc)


def test_validate_requires_fields_and_known_types():
    for drop in ("name", "manifold", "experiments"):
        sc = _copy(SMALL)
        del sc[drop]
        with pytest.raises(UsageError):
            cli.validate(sc)
    sc = _copy(SMALL)
    sc["experiments"] = [{"type": "teleport"}]
    with pytest.raises(UsageError):
        cli.validate(sc)
    sc["experiments"] = []
    with pytest.raises(UsageError):
        cli.validate(sc)


def test_validate_fills_default_tolerances():
    sc = _copy(SMALL)
    sc["tolerances"] = {"canonical": 1e-3}
    out = cli.validate(sc)
    assert out["tolerances"]["canonical"] == 1e-3
    assert out["tolerances"]["containment"] == cli.DEFAULT_TOLERANCES["containment"]
    assert "tolerances" not in SMALL


def test_builtin_scenarios_validate():
    for sc in list(cli.BUILTINS.values()) + list(cli.ACCEPTANCE.values()):
        cli.validate(sc)


def test_builders_reject_bad_input():
    grid = cli.build_grid({"dim": 1, "n_points": 16})
    with pytest.raises(UsageError):
        cli.build_symbol({"builtin": "nope"}, grid)
    with pytest.raises(UsageError):
        cli.build_symbol({}, grid)
    with pytest.raises(UsageError):
        cli.build_group({"action": {"rotation": [0.1, 0.2]}}, grid)
    with pytest.raises(UsageError):
        cli.build_representation({"representation": "teleport"}, cli.build_group(None, grid), grid)


def test_trig_symbol_builder():
    import numpy as np
    grid = cli.build_grid({"dim": 1, "n_points": 16})
    a = cli.build_symbol({"trig": {"plus": [[1, 2.0, 0.0]], "minus": [[0, 1.0, 0.0]]}}, grid)
    assert np.allclose(a.samples[:, 0], 2 * np.exp(1j * grid.axis))
    assert np.allclose(a.samples[:, 1], 1.0)


# -- list ----------------------------------------------------------------------

def test_list(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in cli.BUILTINS:
        assert name in out
    assert "acceptance-1" not in out
    assert cli.main(["list", "--acceptance", "--verbose"]) == 0
    out = capsys.readouterr().out
    assert all(f"acceptance-{n}" in out for n in range(1, 11))
    assert "[ellipticity, ellipticity, wavefront]" in out


# -- run -----------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(cli.BUILTINS))
def test_run_builtin(name, tmp_path, capsys):
    assert cli.main(["run", name, "--out-dir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["scenario"] == name and summary["pass"]
    n = len(cli.BUILTINS[name]["experiments"])
    assert len(summary["experiments"]) == n
    for r in summary["experiments"]:
        rows = list(csv.reader(open(tmp_path / f"{r['experiment']}.csv")))
        assert len(rows) >= 2
    assert "PASS" in capsys.readouterr().out


def test_run_scenario_file(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "--out-dir", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["00-ellipticity.csv", "01-wavefront.csv", "summary.json"]
    header = next(csv.reader(open(out / "00-ellipticity.csv")))
    assert header == ["base", "x", "omega", "window", "sigma_min", "verdict"]


def test_parallel_run_is_identical(tmp_path):
    a, b = tmp_path / "seq", tmp_path / "par"
    cli.run_scenario(_copy(SMALL), str(a), seed=3)
    cli.run_scenario(_copy(SMALL), str(b), seed=3, parallel=True)
    for f in ("00-ellipticity.csv", "01-wavefront.csv", "summary.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_failing_experiment_exit_code(tmp_path, capsys):
    sc = _copy(SMALL)
    sc["element"]["coeffs"][0]["symbol"] = {"constant": -1.0}
    sc["experiments"] = [{"type": "ellipticity", "windows": [8, 16], "n_bases": 4}]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(sc))
    assert cli.main(["run", str(path), "--out-dir", str(tmp_path / "o")]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_package_error_is_recorded_as_failure(tmp_path):
    # the flow time exceeds the integrator limit: the run records it instead of crashing
    sc = {"name": "late", "manifold": {"dim": 1, "n_points": 32},
          "experiments": [{"type": "egorov", "time": 0.45, "Ks": [1, 2]}]}
    summary = cli.run_scenario(sc, str(tmp_path))
    r = summary["experiments"][0]
    assert not summary["pass"] and "DomainError" in r["metrics"]["error"]
    assert (tmp_path / "00-egorov.csv").read_text().startswith("error\n")


def test_usage_errors_exit_one(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", str(bad)]) == 1
    bad.write_text(json.dumps({"name": "x", "manifold": {"dim": 1, "n_points": 8},
                               "experiments": [{"type": "egorov", "colour": 1}]}))
    assert cli.main(["run", str(bad), "--out-dir", str(tmp_path / "o")]) == 1
    assert not (tmp_path / "o").exists()
    assert cli.main([]) == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "rotation-algebra", "--frobnicate"])
    assert exc.value.code == 1
    assert "usage error" in capsys.readouterr().err


def test_load_scenario_returns_copies():
    a = cli.load_scenario("rotation-algebra")
    a["name"] = "changed"
    assert cli.load_scenario("rotation-algebra")["name"] == "rotation-algebra"
    assert cli.load_scenario("acceptance-3")["experiments"] == [{"type": "acceptance", "criterion": 3}]


def test_outputs_dir_from_scenario(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    sc = _copy(SMALL)
    sc["outputs"] = {"dir": "here"}
    (tmp_path / "s.json").write_text(json.dumps(sc))
    assert cli.main(["run", "s.json"]) == 0
    assert (tmp_path / "here" / "summary.json").exists()
