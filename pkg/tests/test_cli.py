import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from virial_lab import __version__
from virial_lab.cli import main
from virial_lab.config import DEFAULTS, ConfigError, thread_cap, validate

GOLDEN = Path(__file__).parent / "golden"

QUICK = {
    "suite": "all",
    "symbolic": {"cases": 10},
    "classical": {"periods": 10, "harmonic_steps_per_period": 200, "kepler_steps_per_period": 400},
    "spectral": {
        "scenarios": [
            {
                "name": "hydrogen",
                "grid": {"n": 300, "r_max": 40.0},
                "kinetic": {"form": "nonrelativistic"},
                "potential": {"family": "coulomb", "strength": -1.0},
                "exact_ground": -0.5,
                "tolerances": {"energy": 1e-2, "virial": 1e-2},
            }
        ],
        "offdiag": {"n": 100, "r_max": 10.0, "pairs": [[0, 1]], "tolerance": 1e-8},
    },
    "lattice": {"M": 16, "refined_M": 32, "length": 8.0},
}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture(scope="module")
def quick_report(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("quick")
    cfg = _write(tmp, QUICK)
    out = tmp / "report.json"
    code = main(["run", str(cfg), "-o", str(out), "--no-timestamp", "-q", "--csv-dir", str(tmp / "csv")])
    return code, out, tmp


@pytest.mark.parametrize(
    "a, b, want",
    [
        ("x[1,1]", "p[1,1]", "(i*hbar)"),
        ("G", "p[1,1]", "(i*hbar)*p[1,1]"),
        ("x[1,1]", "x[2,1]", "0"),
        ("G", "x[1,2]^2", "-(2*i*hbar)*x[1,2]^2"),
    ],
)
def test_commute_output(capsys, a, b, want):
    assert main(["commute", a, b]) == 0
    assert capsys.readouterr().out.strip() == want


def test_commute_G_with_angular_momentum(capsys):
    assert main(["commute", "G", "Lz", "--particles", "2"]) == 0
    assert capsys.readouterr().out.strip() == "0"


def test_dilate_output(capsys):
    assert main(["dilate", "p[1,1]^2 + x[1,1]*p[1,2]"]) == 0
    assert capsys.readouterr().out.strip() == "lam^-2*p[1,1]^2 + x[1,1]*p[1,2]"


@pytest.mark.parametrize(
    "argv",
    [
        ["commute", "x[1", "p[1,1]"],
        ["commute", "--particles", "1", "x[2,1]", "p[1,1]"],
        ["commute", "--particles", "0", "x[1,1]", "p[1,1]"],
        ["commute", "--dims", "1", "G", "Lz"],
        ["dilate"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_version(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_unknown_key_is_config_error(tmp_path, capsys):
    assert main(["run", str(_write(tmp_path, {"suite": "symbolic", "colour": "red"}))]) == 2
    assert "colour" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg",
    [
        {"suite": "everything"},
        {"lattice": {"M": 15}},
        {"spectral": {"scenarios": [{"name": "x", "grid": {"n": 4, "r_max": 1}, "kinetic": {"form": "nonrelativistic"}, "potential": {"family": "free"}}]}},
        {"classical": {"eccentricity": 1.0}},
        [],
    ],
)
def test_invalid_configs(tmp_path, cfg):
    assert main(["run", str(_write(tmp_path, cfg))]) == 2


def test_unreadable_config(tmp_path):
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == 2


def test_validate_merges_defaults():
    cfg = validate({"lattice": {"M": 32}})
    assert cfg["lattice"]["M"] == 32
    assert cfg["lattice"]["length"] == DEFAULTS["lattice"]["length"]
    assert cfg["symbolic"] == DEFAULTS["symbolic"]


def test_thread_cap():
    assert thread_cap({}) == 1
    assert thread_cap({"VIRIAL_LAB_THREADS": "4"}) == 4
    for bad in ("0", "-2", "many"):
        with pytest.raises(ConfigError):
            thread_cap({"VIRIAL_LAB_THREADS": bad})


def test_bad_thread_env_exits_2(tmp_path, monkeypatch):
    monkeypatch.setenv("VIRIAL_LAB_THREADS", "zero")
    assert main(["run", str(_write(tmp_path, {"suite": "symbolic", "symbolic": {"cases": 1}}))]) == 2


def test_symbolic_suite_passes(tmp_path, capsys):
    assert main(["run", str(_write(tmp_path, {"suite": "symbolic", "symbolic": {"cases": 20}})), "--no-timestamp"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["summary"]["failed"] == 0
    assert {c["check_id"] for c in report["checks"]} >= {"symbolic.G_f_of_p", "symbolic.G_f_of_r", "symbolic.G_H_virial"}


def test_module_error_is_annotated(tmp_path, capsys):
    cfg = {
        "suite": "spectral",
        "spectral": {
            "scenarios": [
                {
                    "name": "core",
                    "grid": {"n": 16, "r_max": 60.0},
                    "kinetic": {"form": "nonrelativistic"},
                    "potential": {"family": "coulomb", "strength": -1000.0},
                }
            ]
        },
    }
    assert main(["run", str(_write(tmp_path, cfg))]) == 3
    assert "[spectral.core] GridTooCoarse" in capsys.readouterr().err


def test_failing_check_exits_1(tmp_path, capsys):
    cfg = {
        "suite": "spectral",
        "spectral": {
            "scenarios": [
                {
                    "name": "coarse_hydrogen",
                    "grid": {"n": 40, "r_max": 40.0},
                    "kinetic": {"form": "nonrelativistic"},
                    "potential": {"family": "coulomb", "strength": -1.0},
                    "exact_ground": -0.5,
                    "tolerances": {"energy": 1e-8},
                }
            ],
        },
    }
    out = tmp_path / "r.json"
    assert main(["run", str(_write(tmp_path, cfg)), "-o", str(out)]) == 1
    capsys.readouterr()
    assert main(["report", "--summarize", str(out)]) == 1
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1].endswith("checks passed")
    assert any(line.startswith("FAIL spectral.coarse_hydrogen.l0.n0.E") for line in lines)


def test_report_summarize_rejects_garbage(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"a": 1}')
    assert main(["report", "--summarize", str(p)]) == 2
    assert main(["report", "--summarize", str(tmp_path / "nope.json")]) == 2


def test_quick_run_report_shape(quick_report):
    code, out, tmp = quick_report
    assert code in (0, 1)
    report = json.loads(out.read_text())
    assert set(report) == {"tool", "version", "config_digest", "checks", "summary"}
    ids = [c["check_id"] for c in report["checks"]]
    assert ids == sorted(ids)
    for c in report["checks"]:
        assert set(c) == {"check_id", "anchor", "inputs_digest", "value", "tolerance", "pass"}
    assert (code == 0) == all(c["pass"] for c in report["checks"])
    hydrogen = next(c for c in report["checks"] if c["check_id"] == "spectral.hydrogen.l0.n0.E")
    assert hydrogen["value"] == pytest.approx(-0.5, abs=1e-2)
    assert sorted(p.name for p in (tmp / "csv").iterdir()) == [
        "spectral_hydrogen.csv",
        "trajectory_harmonic.csv",
        "trajectory_kepler.csv",
        "trajectory_quartic.csv",
    ]


def test_report_is_deterministic(quick_report, tmp_path, monkeypatch):
    _, first, _ = quick_report
    monkeypatch.setenv("VIRIAL_LAB_THREADS", "4")
    second = tmp_path / "again.json"
    main(["run", str(_write(tmp_path, QUICK)), "-o", str(second), "--no-timestamp", "-q"])
    assert first.read_bytes() == second.read_bytes()


def test_timestamp_present_by_default(tmp_path):
    out = tmp_path / "r.json"
    main(["run", str(_write(tmp_path, {"suite": "symbolic", "symbolic": {"cases": 2}})), "-o", str(out), "-q"])
    assert "timestamp" in json.loads(out.read_text())


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "virial_lab", "commute", "x[1,1]", "p[1,1]"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "(i*hbar)"


# -- golden regression of the default suite ---------------------------------------


@pytest.fixture(scope="module")
def default_report(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("default")
    cfg = tmp / "default.json"
    cfg.write_text("{}")
    out = tmp / "report.json"
    code = main(["run", str(cfg), "-o", str(out), "--no-timestamp", "-q"])
    return code, json.loads(out.read_text())


def _close(got, want, tol):
    if isinstance(want, float) and isinstance(got, (int, float)):
        # values far below the tolerance are roundoff; compare them on the tolerance scale
        floor = 1e-3 * tol if tol else 0.0
        return math.isclose(got, want, rel_tol=1e-6, abs_tol=max(floor, 1e-14))
    return got == want


def test_default_suite_matches_golden(default_report, request):
    code, report = default_report
    path = GOLDEN / "default_report.json"
    if request.config.getoption("--update-golden"):
        GOLDEN.mkdir(exist_ok=True)
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    golden = json.loads(path.read_text())
    assert code == 0
    assert report["summary"] == golden["summary"]
    assert report["config_digest"] == golden["config_digest"]
    assert [c["check_id"] for c in report["checks"]] == [c["check_id"] for c in golden["checks"]]
    for got, want in zip(report["checks"], golden["checks"]):
        assert got["pass"] == want["pass"], got["check_id"]
        assert got["anchor"] == want["anchor"], got["check_id"]
        assert got["inputs_digest"] == want["inputs_digest"], got["check_id"]
        if got["check_id"].startswith("symbolic."):
            assert got["value"] == want["value"], got["check_id"]
        else:
            assert _close(got["value"], want["value"], want["tolerance"]), got["check_id"]
