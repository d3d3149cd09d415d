"""
Tests for configuration module
"""

import logging

import pytest

from dackrr.band import Scheme
from dackrr.config import (
    DEFAULT_CONFIG,
    RunConfig,
    apply_overrides,
    create_sample_config,
    load_config,
    merge_configs,
    set_dotted,
)
from dackrr.errors import ConfigError
from dackrr.kernel import KernelFamily


def test_default_config_structure():
    """Test that default config has expected structure"""
    for section in ("kernel", "fit", "bootstrap", "grid", "simulate", "diagnose", "io", "runtime"):
        assert section in DEFAULT_CONFIG
    assert DEFAULT_CONFIG["bootstrap"]["beta"] == 0.95
    assert DEFAULT_CONFIG["kernel"]["alpha"] == 2.5


def test_load_config_without_file(tmp_path, monkeypatch):
    """Test loading config when no config file exists"""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("HOME", str(tmp_path))
    config = load_config(environ={})
    assert config == DEFAULT_CONFIG


def test_load_config_missing_explicit_path():
    """Test that an explicit missing path is an error"""
    with pytest.raises(ConfigError):
        load_config("/nonexistent/path/config.yaml", environ={})


def test_load_config_from_file(tmp_path):
    """Test values from a YAML file override the defaults"""
    path = tmp_path / "dackrr.yaml"
    path.write_text("fit:\n  partitions: 64\nbootstrap:\n  scheme: multiplier\n")
    config = load_config(str(path), environ={})
    assert config["fit"]["partitions"] == 64
    assert config["bootstrap"]["scheme"] == "multiplier"
    assert config["bootstrap"]["B"] == DEFAULT_CONFIG["bootstrap"]["B"]


def test_load_config_rejects_unknown_key(tmp_path):
    """Test unknown keys in the file are rejected"""
    path = tmp_path / "dackrr.yaml"
    path.write_text("fit:\n  partitons: 64\n")
    with pytest.raises(ConfigError) as info:
        load_config(str(path), environ={})
    assert "fit.partitons" in str(info.value)


def test_load_config_rejects_bad_yaml(tmp_path):
    """Test a YAML syntax error is a config error"""
    path = tmp_path / "dackrr.yaml"
    path.write_text("fit: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(str(path), environ={})


def test_merge_configs():
    """Test merging configurations"""
    default = {"fit": {"rho": None, "partitions": 16}, "io": {"out": "."}}
    user = {"fit": {"partitions": 4}}

    result = merge_configs(default, user)

    assert result["fit"]["partitions"] == 4
    assert result["fit"]["rho"] is None  # Preserved from default
    assert result["io"]["out"] == "."
    assert default["fit"]["partitions"] == 16


def test_merge_configs_section_must_be_mapping():
    """Test replacing a section with a scalar is rejected"""
    with pytest.raises(ConfigError):
        merge_configs({"fit": {"rho": None}}, {"fit": 3})


def test_config_respects_env_vars(tmp_path):
    """Test that environment variables override config"""
    path = tmp_path / "dackrr.yaml"
    path.write_text("runtime:\n  threads: 2\n")
    environ = {"DACKRR_THREADS": "6", "DACKRR_LOG_LEVEL": "DEBUG", "DACKRR_SEED": "42"}

    config = load_config(str(path), environ=environ)
    run = RunConfig.from_dict(config)

    assert run.threads == 6
    assert run.log_level == logging.DEBUG
    assert run.fit_config().seed == 42
    assert run.bootstrap_config().seed == 42
    assert run.sim_config().seed == 42


def test_set_dotted_seed_sets_every_seed():
    """Test the seed shortcut"""
    config = apply_overrides(DEFAULT_CONFIG, {"seed": 7})
    assert config["fit"]["seed"] == 7
    assert config["bootstrap"]["seed"] == 7
    assert config["simulate"]["seed"] == 7


def test_set_dotted_unknown_key():
    """Test an unknown dotted key is rejected"""
    config = apply_overrides(DEFAULT_CONFIG, {})
    with pytest.raises(ConfigError):
        set_dotted(config, "fit.unknown", 1)


def test_apply_overrides_skips_none():
    """Test None overrides leave the value alone"""
    config = apply_overrides(DEFAULT_CONFIG, {"fit.partitions": None, "bootstrap.B": 50})
    assert config["fit"]["partitions"] == DEFAULT_CONFIG["fit"]["partitions"]
    assert config["bootstrap"]["B"] == 50


def test_run_config_typed_views():
    """Test typed accessors"""
    config = apply_overrides(
        DEFAULT_CONFIG,
        {"kernel.family": "se", "fit.rho": "1e-3", "bootstrap.scheme": "multiplier", "grid.M": 64},
    )
    run = RunConfig.from_dict(config)
    assert run.kernel_spec(2).family is KernelFamily.SQUARED_EXPONENTIAL
    assert run.kernel_spec(2).dim == 2
    assert run.fit_config().rho == 1e-3
    assert run.bootstrap_config().scheme is Scheme.MULTIPLIER
    assert run.grid_settings() == ("uniform", 64, (0.0, 1.0))


def test_run_config_large_seed_is_exact():
    """Test 64-bit seeds survive coercion exactly"""
    run = RunConfig.from_dict(apply_overrides(DEFAULT_CONFIG, {"seed": str(2**64 - 1)}))
    assert run.fit_config().seed == 2**64 - 1


@pytest.mark.parametrize(
    "key,value",
    [
        ("kernel.family", "cosine"),
        ("kernel.lengthscale", -1.0),
        ("fit.partitions", 2.5),
        ("fit.contiguous", "maybe"),
        ("bootstrap.beta", 1.5),
        ("bootstrap.scheme", "jackknife"),
        ("grid.kind", "sparse"),
        ("diagnose.window", [3]),
        ("runtime.threads", 0),
        ("runtime.log_level", "LOUD"),
    ],
)
def test_run_config_rejects_bad_values(key, value):
    """Test invalid values fail validation with a config error"""
    with pytest.raises(ConfigError):
        RunConfig.from_dict(apply_overrides(DEFAULT_CONFIG, {key: value}))


def test_sim_config_from_run_config():
    """Test simulation settings combine the simulate, bootstrap and grid sections"""
    config = apply_overrides(
        DEFAULT_CONFIG,
        {"simulate.P_list": [4, 8], "simulate.n": 512, "bootstrap.B": 200, "grid.M": 128},
    )
    sim = RunConfig.from_dict(config).sim_config()
    assert sim.P_list == (4, 8)
    assert sim.n == 512
    assert sim.B == 200
    assert sim.M == 128


def test_create_sample_config(tmp_path):
    """Test creating a sample config file"""
    config_path = tmp_path / "test-config.yaml"
    create_sample_config(str(config_path))

    assert config_path.exists()

    # The sample must load cleanly and match the defaults
    config = load_config(str(config_path), environ={})
    assert config == DEFAULT_CONFIG
