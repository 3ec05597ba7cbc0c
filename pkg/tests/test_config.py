import json
import math

import pytest

from cavityrotor.config import (DEFAULT_CONFIG, RunConfig, default_config, dump_config,
                                load_config, parse_config)
from cavityrotor.errors import ConfigError
from scipy import constants as sc

from conftest import CONFIGS


def test_round_trip_through_json(tmp_path):
    cfg = parse_config(default_config())
    path = tmp_path / "c.json"
    dump_config(cfg, path)
    again = load_config(path)
    assert again == cfg
    assert again.digest() == cfg.digest()
    assert parse_config(json.loads(cfg.to_json())).to_dict() == cfg.to_dict()


@pytest.mark.parametrize("name", ["default.json", "reference.json", "reference_noise.json"])
def test_shipped_configs_parse(name):
    cfg = load_config(CONFIGS / name)
    assert isinstance(cfg, RunConfig)
    assert cfg.calibration.omega_tight_hz == 43000.0


def test_shipped_default_matches_builtin():
    assert load_config(CONFIGS / "default.json").digest() == parse_config(DEFAULT_CONFIG).digest()


@pytest.mark.parametrize("path, key", [((), "colour"), (("system",), "atoms"),
                                       (("grid",), "points"), (("observers",), "g3")])
def test_unknown_keys_rejected(path, key):
    data = default_config()
    target = data
    for p in path:
        target = target[p]
    target[key] = 1
    with pytest.raises(ConfigError, match="invalid configuration"):
        parse_config(data)


@pytest.mark.parametrize("section, key, value", [
    ("grid", "n_points", 1000),
    ("system", "spin_coupling_hz", -1.0),
    ("protocol", "n_cycles", -2),
    ("noise", "atom_number_distribution", "cauchy"),
    ("calibration", "omega_wide_hz", 50000.0),
])
def test_invalid_values_rejected(section, key, value):
    data = default_config()
    data[section][key] = value
    with pytest.raises(ConfigError):
        parse_config(data)


def test_needs_drives_or_targets():
    data = default_config()
    del data["calibration"]
    with pytest.raises(ConfigError):
        parse_config(data)


def test_error_names_the_offending_path():
    data = default_config()
    data["protocol"]["dt_us"] = "small"
    with pytest.raises(ConfigError, match="protocol/dt_us"):
        parse_config(data)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_replace_is_deep():
    cfg = parse_config(default_config())
    other = cfg.replace(seed=3)
    other.grid.n_points = 64
    assert cfg.grid.n_points == 1024 and cfg.seed == 20240611 and other.seed == 3
    assert other.digest() != cfg.digest()


def test_unit_conversions():
    cfg = parse_config(default_config())
    p = cfg.system.params()
    assert p.c2 == pytest.approx(sc.h * 53750.0)
    assert p.kappa == pytest.approx(2 * math.pi * 1e6)
    assert p.U0 * p.N / p.kappa == pytest.approx(20.0)
    # the single-atom coupling stays put when the atom number fluctuates
    assert cfg.system.params(atom_number=9000).U0 == p.U0
    nc = cfg.noise_config()
    assert nc.seed == cfg.seed and nc.is_silent
