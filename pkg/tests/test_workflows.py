import json
import math
from pathlib import Path

import pytest
import yaml

from synthsurvey.cli import main
from synthsurvey.config import config_from_mapping, load_config
from synthsurvey.workflows import (
    Session,
    Table,
    cmd_calibrate,
    cmd_decompose,
    cmd_probe,
    load_probe_prompts,
    read_table,
    table_to_csv,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = {
    "label": "small",
    "master_seed": 5,
    "sample": {"synthetic": {"n": 60, "seed": 3}},
    "scenario": {"name": "main", "survey_month": "2023-02"},
    "horizons": [0, 1],
    "temperatures": [0.0, 0.75, 1.5],
    "profile": {"temperatures": [0.0]},
    "mock": {"intercept": 2.0, "jitter": 1.0, "noise_scale": 3.0,
             "model_offsets": {"gpt-3.5-turbo-0301": -0.6, "gpt-3.5-turbo-0613": 0.0}},
    "scan": {"energy": {"grid": {"start": 0, "stop": 100, "step": 25}, "linear_range": [0, 100]}},
    "regress": {"temperatures": [0.0]},
    "probe": {"model_ids": ["gpt-3.5-turbo-0301", "gpt-3.5-turbo-0613"], "subsample": 20, "permutations": 2},
}


@pytest.fixture()
def small_config(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(yaml.safe_dump(SMALL))
    return p


def test_shipped_configs_load():
    for name in ("main_2023q1.yaml", "cv_2022q4.yaml"):
        cfg = load_config(CONFIGS / name)
        assert cfg.backend == "mock"
        assert set(cfg.scan) == {"food_rest", "energy", "other"}
    assert load_config(CONFIGS / "main_2023q1.yaml").scan["food_rest"].grid[-1] == 30.0


@pytest.mark.parametrize("override, exc", [
    ({"temperatures": [0.0, 1.7]}, ValueError),
    ({"baseline": "median"}, ValueError),
    ({"scenario": "nowhere"}, ValueError),
    ({"sample": {"file": "missing.csv"}}, FileNotFoundError),
    ({"model": {"backend": "carrier-pigeon"}}, ValueError),
    ({"decompose": {"mode": "half"}}, ValueError),
])
def test_config_validation(tmp_path, override, exc):
    with pytest.raises(exc):
        config_from_mapping({**SMALL, **override}, tmp_path)


def test_table_roundtrip(tmp_path):
    t = Table(["a", "b", "c", "d"])
    t.add(1.5, None, True, "x")
    t.add(float("nan"), -0.1, False, "y")
    p = tmp_path / "t.csv"
    p.write_text(table_to_csv(t))
    back = read_table(p)
    assert back.columns == t.columns
    assert back.rows[0] == [1.5, None, True, "x"]
    assert math.isnan(back.rows[1][0]) and back.rows[1][1:] == [-0.1, False, "y"]


def test_calibrate_sd_rises_with_temperature(small_config):
    res = cmd_calibrate(Session(load_config(small_config)))
    sd = res.tables["temperatures"].column("SD")
    assert sd == sorted(sd) and sd[0] < sd[-1]


def test_decompose_efficiency(small_config):
    res = cmd_decompose(Session(load_config(small_config)))
    for row in res.tables["contributions"].records():
        if row["method"] == "shapley":
            assert row["sum"] == pytest.approx(row["total"] - row["baseline_value"], abs=1e-9)


def test_probe_tables(small_config):
    res = cmd_probe(Session(load_config(small_config)))
    assert len(res.tables["transcript"].rows) == len(load_probe_prompts()) * 2
    assert len(load_probe_prompts()) == 13
    trend = res.tables["trend"].records()
    assert len(trend) == 2
    assert trend[0]["mean"] < trend[1]["mean"]


@pytest.mark.parametrize("verb", ["calibrate", "run", "profile", "decompose", "scan", "regress", "probe"])
def test_cli_verbs_write_outputs(tmp_path, small_config, verb, capsys):
    out = tmp_path / "out"
    assert main([verb, "--config", str(small_config), "--out-dir", str(out)]) == 0
    written = capsys.readouterr().out.split()
    assert written and all(Path(p).exists() for p in written)
    assert isinstance(json.loads((out / f"{verb}.json").read_text()), dict)
    assert any(p.endswith(".csv") for p in written)


def test_cli_offline_replay_is_byte_identical(tmp_path, small_config):
    cache = tmp_path / "cache.jsonl"
    a, b = tmp_path / "a", tmp_path / "b"
    for verb in ("calibrate", "decompose"):
        assert main([verb, "--config", str(small_config), "--cache", str(cache), "--out-dir", str(a)]) == 0
        assert main([verb, "--config", str(small_config), "--cache", str(cache), "--out-dir", str(b),
                     "--offline"]) == 0
    files = sorted(x.name for x in a.iterdir())
    assert files == sorted(x.name for x in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_cli_synth_data_and_errors(tmp_path, capsys):
    assert main(["synth-data", "--n", "25", "--seed", "4", "--out-dir", str(tmp_path)]) == 0
    path = Path(capsys.readouterr().out.strip())
    assert len(path.read_text().splitlines()) == 26
    bad = tmp_path / "bad.yaml"
    bad.write_text("temperatures: [3.0]\n")
    assert main(["calibrate", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_offline_http_backend_never_contacts_network(tmp_path):
    cfg = tmp_path / "http.yaml"
    cfg.write_text(yaml.safe_dump({**SMALL, "model": {"backend": "http"}}))
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--offline", "--out-dir", str(out)]) == 0
    rows = read_table(out / "run_responses.csv").records()
    assert rows and all("offline" in r["error"] and r["value"] is None for r in rows)
    strict = tmp_path / "strict.yaml"
    strict.write_text(yaml.safe_dump({**SMALL, "model": {"backend": "http"}, "fail_fast": True}))
    assert main(["run", "--config", str(strict), "--offline", "--out-dir", str(out)]) == 3


def test_plots_are_deterministic(tmp_path, small_config):
    pytest.importorskip("matplotlib")
    for d in ("p1", "p2"):
        assert main(["decompose", "--config", str(small_config), "--out-dir", str(tmp_path / d), "--plots"]) == 0
    svgs = sorted((tmp_path / "p1").glob("*.svg"))
    assert svgs
    for s in svgs:
        assert s.read_bytes() == (tmp_path / "p2" / s.name).read_bytes()
