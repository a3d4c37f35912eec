import json
from pathlib import Path

import pytest

from afcstark.config import (ConfigError, build_run, dump_config, load_config, parse_config,
                             set_path)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("name", ["memory_m3", "frequency_shift", "bandwidth", "echo"])
def test_shipped_configs_build(name):
    cfg = load_config(CONFIGS / f"{name}.json")
    run = build_run(cfg.with_overrides(n_ions=100), CONFIGS)
    assert run.spec.variant == cfg.variant
    assert run.ensemble.n == 100


def test_round_trip(tmp_path):
    cfg = load_config(CONFIGS / "bandwidth.json")
    path = tmp_path / "c.json"
    dump_config(cfg, path)
    assert load_config(path) == cfg


def test_unknown_key_is_named():
    d = json.loads((CONFIGS / "memory_m3.json").read_text())
    d["comb"]["finese"] = 3
    with pytest.raises(ConfigError) as exc:
        parse_config(d)
    assert exc.value.key == "comb.finese"


def test_missing_required_key_is_named():
    d = json.loads((CONFIGS / "memory_m3.json").read_text())
    del d["protocol"]["m"]
    with pytest.raises(ConfigError) as exc:
        parse_config(d)
    assert exc.value.key == "protocol.m"


def test_type_errors():
    d = json.loads((CONFIGS / "memory_m3.json").read_text())
    d["seed"] = "one"
    with pytest.raises(ConfigError, match="integer"):
        parse_config(d)


def test_set_path_bare_and_ambiguous():
    d = load_config(CONFIGS / "memory_m3.json").to_dict()
    set_path(d, "finesse", 20.0)
    assert d["comb"]["finesse"] == 20.0
    with pytest.raises(ConfigError, match="unknown"):
        set_path(d, "nope", 1)
    with pytest.raises(ConfigError):
        set_path(d, "comb.nope", 1)


def test_bad_variant():
    d = json.loads((CONFIGS / "memory_m3.json").read_text())
    d["variant"] = "teleport"
    with pytest.raises(ConfigError) as exc:
        parse_config(d)
    assert exc.value.key == "variant"


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(ConfigError):
        load_config(p)
