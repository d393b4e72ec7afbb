import json
import math
import pathlib

import pytest

import shipcast

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_reference_allocation():
    res = shipcast.allocate()
    assert res["status"] == "optimal"
    assert res["plan"]["x"] == {
        "First Class": 560,
        "Same Day": 240,
        "Second Class": 800,
        "Standard Class": 318,
    }
    assert res["plan"]["objective"] == 5032.0
    oracle = shipcast.oracle_enumerate()
    assert oracle["plan"]["x"] == res["plan"]["x"]


def test_audit_and_instance_dicts():
    inst = shipcast.reference_instance()
    plan = shipcast.evaluate_plan([443, 155, 561, 759], inst)
    assert plan["objective"] == 5760.0
    assert plan["feasible"]
    inst["D_total"] = 3000
    res = shipcast.allocate(inst)
    assert not res["feasible"]
    assert "capacity" in res["binding"]


def test_checked_in_instance_file():
    inst = json.loads((ROOT / "data" / "reference_instance.json").read_text())
    assert shipcast.allocate(inst)["plan"]["objective"] == 5032.0


def test_bad_instance_raises_data_error():
    with pytest.raises(shipcast.DataError):
        shipcast.allocate({"modes": []})


def test_baselines():
    cmp = shipcast.compare_baselines()
    names = [b["name"] for b in cmp["baselines"]]
    assert names == ["all_standard", "uniform"]
    assert cmp["baselines"][0]["plan"]["fast_share"] == 0.0


def test_metrics_and_selection():
    assert shipcast.smape([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert shipcast.mae([1.0, 3.0], [2.0, 1.0]) == 1.5
    metrics = [
        {"model": "nhits", "mae": 1.0, "smape": 5.0},
        {"model": "nbeats", "mae": 1.0, "smape": 5.0},
        {"model": "mstl", "mae": 2.0, "smape": 5.0},
    ]
    assert shipcast.select_model(metrics) == "nbeats"


def test_decomposition_identity():
    y = [100 + 0.5 * t + 10 * math.sin(2 * math.pi * t / 4) + (t % 7) for t in range(120)]
    d = shipcast.mstl_decompose(y, [4, 52])
    for t in range(len(y)):
        total = d["trend"][t] + d["remainder"][t] + sum(s[t] for s in d["seasonal"].values())
        assert abs(total - y[t]) < 1e-9
    f = shipcast.mstl_forecast(y, [4, 52])
    assert len(f) == 4


def test_neural_forecast_is_seeded():
    y = [50 + 5 * math.sin(2 * math.pi * t / 4) for t in range(80)]
    a = shipcast.train_forecast("nhits", y, seed=3, max_epochs=60)
    b = shipcast.train_forecast("nhits", y, seed=3, max_epochs=60)
    assert a["forecast"] == b["forecast"]
    assert len(a["forecast"]) == 4
    with pytest.raises(shipcast.ConfigError):
        shipcast.train_forecast("prophet", y)


def test_ingest_and_pipeline(tmp_path):
    csv = tmp_path / "tx.csv"
    n = shipcast.write_synthetic_transactions(csv, seed=5, weeks=120)
    info = shipcast.ingest(csv)
    assert info["report"]["rows_accepted"] == n
    assert len(info["weekly"]) == 120

    cfg = (ROOT / "config" / "synthetic.ini").read_text()
    cfg = cfg.replace("../data/synthetic_transactions.csv", str(csv)).replace("train_len = 158", "train_len = 116")
    cfg = cfg.replace("max_epochs = 500", "max_epochs = 80")
    ini = tmp_path / "run.ini"
    ini.write_text(cfg)
    rep1 = shipcast.run_pipeline(ini, seed=9, out=tmp_path / "a")
    rep2 = shipcast.run_pipeline(ini, seed=9, out=tmp_path / "b")
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    assert rep1 == rep2
    assert rep1["selected_model"] in ("mstl", "nbeats", "nhits")
    chosen = next(f for f in rep1["forecasts"] if f["model"] == rep1["selected_model"])
    assert rep1["D_total"] == max(0, math.floor(sum(chosen["values"]) + 0.5))


def test_missing_config_raises(tmp_path):
    with pytest.raises(shipcast.ConfigError):
        shipcast.run_pipeline(tmp_path / "nope.ini")
