import json

import pytest

from femtosim.cli import Config, dump_config, load_config, main, reproduce_config
from femtosim.model import ModelParams


def _config_line(path):
    first = path.read_text().splitlines()[0]
    assert first.startswith("# config: ")
    return json.loads(first.split(":", 1)[1])


def test_defaults_are_evaluation_constants():
    cfg = Config()
    assert cfg.params == ModelParams(R=100, n=10, C1=100, C2=10, C3=100, E1=0.7, E2=6.7, E3=2.7, omega=1.0)
    assert (cfg.gbr_rate, cfg.non_gbr_cap) == (10.0, 20.0)


def test_run_writes_outputs(tmp_path, capsys):
    code = main(["run", "--scenario", "simple", "--alg", "ig,fig,la", "--omega", "1.0", "--runs", "2", "--seed", "42",
                 "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "Energy Efficiency" in out and "FIG" in out
    report = json.loads((tmp_path / "run_report.json").read_text())
    assert report["runs"] == 2 and report["config"]["seed"] == 42
    assert set(report["stats"]) == {"ig", "fig", "la"}
    for name in ("run_trace.csv", "run_plot.csv", "run_table.txt"):
        assert _config_line(tmp_path / name)["seed"] == 42


def test_omega_sweep_cli(tmp_path):
    code = main(["run", "--scenario", "grid", "--rows", "2", "--cols", "2", "--alg", "ig", "--omega-sweep", "0,2",
                 "--runs", "2", "--out", str(tmp_path)])
    assert code == 0
    rep = json.loads((tmp_path / "run_report.json").read_text())
    assert set(rep["sweep"]) == {"0", "2"}
    assert "[Power Consumption (W)]" in (tmp_path / "run_tables.txt").read_text()


def test_dump_config_round_trip(tmp_path):
    path = tmp_path / "c.yaml"
    assert main(["run", "--scenario", "grid", "--alternate-circles", "--omega", "1.5", "--runs", "7",
                 "--alg", "ig,sa", "--dump-config", str(path)]) == 0
    cfg = load_config(path)
    assert cfg.runs == 7 and cfg.params.omega == 1.5 and cfg.algorithms == ("ig", "sa") and cfg.alternate_circles
    assert Config.from_dict(cfg.to_dict()) == cfg
    assert load_config(path) == cfg and dump_config(cfg) == path.read_text()


def test_validate_only(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text("scenario: simple\nruns: 3\nparams:\n  omega: 0.5\n")
    assert main(["run", "--validate-only", str(path)]) == 0
    assert list(tmp_path.iterdir()) == [path]


@pytest.mark.parametrize(
    "text,needle",
    [
        ("bogus: 1\n", "unknown config keys"),
        ("params:\n  C9: 1\n", "unknown model parameter"),
        ("params:\n  C1: 5\n", "C1 must exceed C2"),
        ("runs: 0\n", "runs"),
        ("algorithms: [ig, zz]\n", "unknown algorithms"),
        ("scenario: /no/such/topology.yaml\n", "not found"),
    ],
)
def test_invalid_configs_fail_with_diagnostic(tmp_path, capsys, text, needle):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    assert main(["run", "--validate-only", str(path)]) == 2
    assert needle in capsys.readouterr().err


def test_missing_config_file(capsys):
    assert main(["run", "--config", "/no/such.yaml"]) == 2
    assert "not found" in capsys.readouterr().err


def test_flags_override_file(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("scenario: simple\nruns: 3\nseed: 5\n")
    out = tmp_path / "o"
    assert main(["run", "--config", str(path), "--runs", "1", "--alg", "ig", "--out", str(out)]) == 0
    rep = json.loads((out / "run_report.json").read_text())
    assert rep["runs"] == 1 and rep["config"]["seed"] == 5


def test_topology_file_scenario(tmp_path, simple):
    from femtosim.topology import save_topology

    topo_path = tmp_path / "t.yaml"
    save_topology(simple, topo_path)
    assert main(["run", "--scenario", str(topo_path), "--alg", "ig", "--runs", "1", "--out", str(tmp_path / "o")]) == 0


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("FEMTOSIM_OUT", str(tmp_path / "env"))
    assert main(["run", "--alg", "la", "--runs", "1"]) == 0
    assert (tmp_path / "env" / "run_report.json").is_file()


def test_reproduce_fig3_fast(tmp_path):
    assert main(["reproduce", "fig3", "--fast", "--out", str(tmp_path)]) == 0
    for name in ("utility", "power", "efficiency"):
        lines = (tmp_path / f"fig3_{name}.csv").read_text().splitlines()
        assert lines[1] == "iteration,ig,fig,sa,la"
        assert _config_line(tmp_path / f"fig3_{name}.csv")["runs"] == 10


def test_reproduce_configs():
    assert reproduce_config("t1").algorithms == ("la", "ig", "fig", "sa")
    assert reproduce_config("t4", fast=True).runs == 10
    assert reproduce_config("t2").omegas == (0.0, 0.5, 1.0, 1.5, 2.0)
    with pytest.raises(ValueError):
        reproduce_config("t9")
