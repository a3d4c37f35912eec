import csv
import json

import pytest

from afcstark.cli import run

SMALL = {
    "variant": "memory_time",
    "seed": 3,
    "n_ions": 200,
    "comb": {"delta_mhz": 40.0, "finesse": 10.0, "bandwidth_mhz": 100.0},
    "cavity": {"g_total_ghz": 0.3},
    "protocol": {"m": 2, "pulse_kv_per_cm": 2.0},
}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL))
    return p


def test_simulate_writes_outputs(cfg_path, tmp_path):
    trace, metrics = tmp_path / "t.csv", tmp_path / "m.json"
    assert run(["simulate", "--config", str(cfg_path), "--out-trace", str(trace),
                "--out-metrics", str(metrics)]) == 0
    m = json.loads(metrics.read_text())
    assert m["variant"] == "memory_time" and m["seed"] == 3
    assert len(m["e_pulses"]) == 2
    assert {"fwhm_ns", "fwhm_mhz", "center_mhz", "energy"} <= set(m)
    assert trace.read_text().startswith("t_ns,re_out,im_out,power_out\n")


def test_simulate_seed_override_is_reproducible(cfg_path, tmp_path, capsys):
    outs = []
    for _ in range(2):
        assert run(["simulate", "--config", str(cfg_path), "--seed", "9"]) == 0
        outs.append(json.loads(capsys.readouterr().out))
    assert outs[0]["seed"] == 9 and outs[0]["energy"] == outs[1]["energy"]


def test_analytic_table(capsys):
    assert run(["analytic", "--gamma-ratio", "0.2", "--m-max", "4"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert list(out["emissions"]) == ["1", "2", "3", "4"]
    e = [v["energy"] for v in out["emissions"].values()]
    assert all(a > b for a, b in zip(e, e[1:]))


def test_analytic_suppression(capsys):
    assert run(["analytic", "--gamma-ratio", "0.2", "--m-max", "3", "--suppress", "lower"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["emissions"]["3"]["energy"] == pytest.approx(out["emissions"]["3"]["eta_suppressed"])


def test_sweep_rows_in_order(cfg_path, tmp_path):
    out = tmp_path / "s.csv"
    assert run(["sweep", "--config", str(cfg_path), "--param", "protocol.m",
                "--values", "3,2", "--threads", "2", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["protocol.m"] for r in rows] == ["3", "2"]
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert meta["values"] == [3, 2] and len(meta["rows"]) == 2


def test_validate_passes(capsys):
    assert run(["validate", "--n-ions", "100"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"] and len(out["checks"]) == 5


def test_config_error_exit_code(tmp_path, capsys):
    bad = dict(SMALL, comb={**SMALL["comb"], "finese": 1})
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    assert run(["simulate", "--config", str(p)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and err["key"] == "comb.finese"


def test_io_and_value_exit_codes(cfg_path, tmp_path, capsys):
    assert run(["simulate", "--config", str(tmp_path / "missing.json")]) == 5
    assert run(["sweep", "--config", str(cfg_path), "--param", "nope", "--values", "1",
                "--out", str(tmp_path / "x.csv")]) == 2
    assert run(["simulate", "--config", str(cfg_path), "--t-end-ns", "10"]) == 3


def test_coarse_step_rejected(cfg_path, capsys):
    assert run(["simulate", "--config", str(cfg_path), "--dt-ns", "1.0"]) == 3
    assert "does not resolve" in json.loads(capsys.readouterr().err)["message"]
