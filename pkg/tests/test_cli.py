import csv
import json

import pytest

from spraysim import cli
from spraysim.config import ConfigError, SimConfig, load_config, merge
from spraysim.scenario import GeneratorSpec, generate_scenario

TINY = GeneratorSpec(name="tiny", n_trees=2, width=128, height=32, n_core_variants=2,
                     n_edge_variants=2, n_gap_variants=2)


@pytest.fixture(scope="module")
def tiny_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("tiny")
    generate_scenario(TINY, seed=0, out_dir=d)
    return d


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# -- configuration ---------------------------------------------------------------

def test_precedence_defaults_file_flags(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"controller": {"k_p": 0.7, "thres_nozzle": 0.2}, "pwm_frequency": 20}))
    cfg = load_config(path, {"controller": {"k_p": 0.9}})
    assert cfg.controller.k_p == 0.9
    assert cfg.controller.thres_nozzle == 0.2
    assert cfg.pwm_frequency == 20
    assert cfg.controller.c_v == 0.0


def test_dump_round_trips(tmp_path):
    cfg = merge(SimConfig(), {"valve": {"a_n": 2e-6}, "pwm_mode": "waveform", "controller": {"mode": "onoff"}})
    path = tmp_path / "dump.json"
    path.write_text(cfg.dumps())
    assert load_config(path) == cfg


@pytest.mark.parametrize("bad", [{"nope": 1}, {"controller": {"nope": 1}}, {"controller": 3},
                                 {"controller": {"k_p": -1}}, {"pwm_mode": "sine"}])
def test_bad_config_rejected(bad):
    with pytest.raises(ConfigError):
        merge(SimConfig(), bad)


def test_unreadable_config(tmp_path):
    (tmp_path / "x.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "x.json")


# -- commands --------------------------------------------------------------------

def test_show_config(capsys):
    assert cli.main(["show-config", "--set", "controller.k_p=0.85"]) == 0
    assert json.loads(capsys.readouterr().out)["controller"]["k_p"] == 0.85


def test_show_config_flag_before_subcommand(capsys):
    assert cli.main(["--show-config", "--set", "pwm_mode=waveform"]) == 0
    assert json.loads(capsys.readouterr().out)["pwm_mode"] == "waveform"


def test_run_builtin_scenario(tmp_path):
    rc = cli.main(["run", "--scenario", "naju_default", "--mode", "variable", "--seed", "7", "--out", str(tmp_path)])
    assert rc == 0
    run_dir = tmp_path / "run_variable_seed7"
    assert (run_dir / "trace.csv").exists() and (run_dir / "summary.json").exists()
    assert len(list((run_dir / "stains").glob("*.segmask"))) == 54
    rows = read_csv(tmp_path / "report_variable.csv")
    assert {r["tag"] for r in rows} == {"T", "NT"}
    assert not list(tmp_path.rglob("*.tmp*"))


def test_bogus_mode_exit_code(capsys):
    assert cli.main(["run", "--mode", "bogus"]) == 1
    err = capsys.readouterr().err
    assert "all" in err and "onoff" in err and "variable" in err


def test_missing_scenario_exit_code(tmp_path, capsys):
    missing = tmp_path / "absent" / "scenario.json"
    assert cli.main(["run", "--scenario", str(missing), "--out", str(tmp_path)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_missing_raster_exit_code(tmp_path, capsys):
    d = tmp_path / "scen"
    generate_scenario(TINY, seed=0, out_dir=d)
    victim = next((d / "frames").glob("*.depth16"))
    victim.unlink()
    assert cli.main(["run", "--scenario", str(d), "--out", str(tmp_path / "o")]) == 2
    assert victim.name in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path):
    assert cli.main(["run", "--set", "controller.k_p=-2", "--out", str(tmp_path)]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 1


def test_runtime_failure_exit_code(tiny_dir, tmp_path, capsys):
    assert cli.main(["run", "--scenario", str(tiny_dir), "--set", "time_step=0.03",
                     "--out", str(tmp_path)]) == 3
    assert "runtime failure" in capsys.readouterr().err


def test_missing_subcommand():
    assert cli.main([]) == 1


def test_calibrate_usage_error():
    assert cli.main(["calibrate", "pe3"]) == 1


def test_compare_outputs(tiny_dir, tmp_path):
    assert cli.main(["compare", "--scenario", str(tiny_dir), "--seeds", "1,2", "--out", str(tmp_path),
                     "--jobs", "2"]) == 0
    rows = read_csv(tmp_path / "compare.csv")
    assert [float(r["reduction_pct"]) for r in rows if r["mode"] == "all"] == [0.0, 0.0]
    summary = json.loads((tmp_path / "compare.json").read_text())
    assert summary["seeds"] == [1, 2]
    plot = read_csv(tmp_path / "plot_duty_vs_position.csv")
    assert {r["series"] for r in plot} == {"all", "onoff", "variable"}


def test_calibrate_writes_tables(tmp_path):
    assert cli.main(["calibrate", "pe2", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "pe2.csv")
    assert len(rows) == 6 * 4
    plot = read_csv(tmp_path / "pe2_plot.csv")
    assert len({r["series"] for r in plot}) == 6
