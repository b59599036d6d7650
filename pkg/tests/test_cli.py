import csv
import json

import pytest

from ymgap import __version__
from ymgap.cli import SUBCOMMANDS, main
from ymgap.config import SCHEMA, ConfigError, RunConfig, load_config, parse_config

FAST = {
    "gauge_group": "su2",
    "grid": {"n": 4, "h": 1.0},
    "modes": {"M": 2, "k_max": 1},
    "fock": {"n_max": 6},
    "solver": {"tol": 1e-10},
    "coupling": 1.0,
    "evolve": {"dt": 0.05, "steps": 5, "amplitude": 0.3},
    "propagate": {"t": 0.005, "N": 8, "N_list": [4, 8], "method": "taylor"},
    "scan": {"M": [2], "n_max": [6], "coupling": [0.0, 0.5, 1.0]},
    "trials": 3,
    "seed": 11,
}


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_defaults():
    cfg = parse_config({})
    assert cfg == RunConfig()
    assert cfg.fock.n_max == 6 and cfg.solver.tol == 1e-8 and cfg.scan.coupling == (0.0, 0.5, 1.0)
    assert parse_config(cfg.to_dict()) == cfg


def test_nested_values_and_int_to_float():
    cfg = parse_config({"grid": {"n": 6, "h": 2}, "propagate": {"z0": [[0.1, 0.2]]}, "coupling": 1})
    assert cfg.grid.h == 2.0 and isinstance(cfg.grid.h, float)
    assert cfg.propagate.z0 == ((0.1, 0.2),)
    assert cfg.grid.n == 6 and cfg.modes.M == 3


@pytest.mark.parametrize("data,path", [
    ({"fock": {"n_max": -1}}, "fock/n_max"),
    ({"grid": {"n": 1}}, "grid/n"),
    ({"solver": {"tol": 2}}, "solver/tol"),
    ({"propagate": {"method": "euler"}}, "propagate/method"),
    ({"gauge_group": "sp4"}, "gauge_group"),
    ({"bogus": 1}, "<root>"),
    ({"grid": {"spacing": 1}}, "grid"),
    ({"seed": -3}, "seed"),
])
def test_schema_errors_name_the_field(data, path):
    with pytest.raises(ConfigError) as err:
        parse_config(data)
    assert path in [p for p, _ in err.value.errors]


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(bad)
    assert SCHEMA["additionalProperties"] is False


@pytest.mark.parametrize("sub,files", [
    ("lie-check", ["structure_constants.csv"]),
    ("classical-evolve", ["evolution.csv", "initial.bin", "initial.json", "final.bin", "final.json"]),
    ("helmholtz-check", ["helmholtz.csv"]),
    ("fock-check", ["ordering.csv", "antiwick_number.txt"]),
    ("spectrum", ["spectrum.csv"]),
    ("gap-scan", ["gap_scan.csv"]),
    ("propagate", ["convergence.csv"]),
])
def test_subcommands_pass_and_write_outputs(sub, files, tmp_path, capsys):
    cfg = write(tmp_path, FAST)
    out = tmp_path / "out"
    assert main([sub, "--config", str(cfg), "--out", str(out)]) == 0
    report = json.loads((out / f"{sub}.json").read_text())
    assert report["passed"] is True
    assert report["header"]["subcommand"] == sub and report["header"]["version"] == __version__
    assert report["header"]["seed"] == 11
    assert all(report["checks"].values())
    for f in files:
        assert (out / f).exists(), f
    printed = capsys.readouterr().out.splitlines()
    assert printed and all(line.startswith(f"PASS {sub}: ") for line in printed)


def test_gap_scan_csv_content(tmp_path):
    out = tmp_path / "out"
    main(["gap-scan", "--config", str(write(tmp_path, FAST)), "--out", str(out)])
    with (out / "gap_scan.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["M", "n_max", "coupling", "k", "lambda0", "lambda1", "gap", "min_slack"]
    assert [float(r["coupling"]) for r in rows] == [0.0, 0.5, 1.0]
    assert float(rows[0]["gap"]) == pytest.approx(1.0, abs=1e-10)  # n = 4, h = 1: min frequency 1


def test_deterministic_outputs(tmp_path):
    cfg = write(tmp_path, FAST)
    for d in ("a", "b"):
        assert main(["gap-scan", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "gap_scan.csv").read_bytes() == (tmp_path / "b" / "gap_scan.csv").read_bytes()
    ra = json.loads((tmp_path / "a" / "gap-scan.json").read_text())
    rb = json.loads((tmp_path / "b" / "gap-scan.json").read_text())
    ra["header"].pop("timestamp"), rb["header"].pop("timestamp")
    assert ra == rb


def test_seed_override_changes_random_suites(tmp_path):
    cfg = write(tmp_path, FAST)
    main(["fock-check", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["fock-check", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "12"])
    a = (tmp_path / "a" / "ordering.csv").read_text()
    b = (tmp_path / "b" / "ordering.csv").read_text()
    assert a != b
    assert json.loads((tmp_path / "b" / "fock-check.json").read_text())["header"]["seed"] == 12


def test_malformed_config_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, {"fock": {"n_max": -2}})
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "fock/n_max" in capsys.readouterr().err
    assert main(["spectrum", "--config", str(tmp_path / "missing.json")]) == 2


def test_usage_errors(tmp_path, monkeypatch):
    cfg = write(tmp_path, FAST)
    with pytest.raises(SystemExit) as err:
        main(["nonsense", "--config", str(cfg)])
    assert err.value.code == 2
    assert main(["lie-check", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "-1"]) == 2
    monkeypatch.setenv("YMGAP_THREADS", "zero")
    assert main(["lie-check", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_thread_cap_accepted(tmp_path, monkeypatch):
    monkeypatch.setenv("YMGAP_THREADS", "1")
    assert main(["lie-check", "--config", str(write(tmp_path, FAST)), "--out", str(tmp_path / "o")]) == 0


def test_pipeline_error_reports_module(tmp_path, capsys):
    cfg = write(tmp_path, {**FAST, "modes": {"M": 5000}})
    out = tmp_path / "o"
    assert main(["classical-evolve", "--config", str(cfg), "--out", str(out)]) == 3
    assert "ymgap.modes" in capsys.readouterr().err
    assert list(out.iterdir()) == []


def test_pipeline_error_removes_partial_outputs(tmp_path, monkeypatch):
    # evolution.csv is already written when saving the state files fails
    import ymgap.cli

    written = []

    def broken_save(prefix, *args, **kwargs):
        written.extend(p.name for p in prefix.parent.iterdir())
        raise OSError("disk full")

    monkeypatch.setattr(ymgap.cli, "save_cauchy", broken_save)
    out = tmp_path / "o"
    assert main(["classical-evolve", "--config", str(write(tmp_path, FAST)), "--out", str(out)]) == 3
    assert "evolution.csv" in written
    assert list(out.iterdir()) == []


def test_failed_assertion_exits_1(tmp_path, capsys):
    # an unreachable solver tolerance makes the Helmholtz suite fail its checks
    data = {**FAST, "solver": {"tol": 0.5}, "trials": 1}
    assert main(["helmholtz-check", "--config", str(write(tmp_path, data)), "--out", str(tmp_path / "o")]) == 1
    assert "FAIL helmholtz-check" in capsys.readouterr().out
    assert json.loads((tmp_path / "o" / "helmholtz-check.json").read_text())["passed"] is False


def test_every_subcommand_listed():
    assert set(SUBCOMMANDS) == {"lie-check", "classical-evolve", "helmholtz-check", "fock-check", "spectrum",
                                "gap-scan", "propagate"}
