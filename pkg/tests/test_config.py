"""Run-configuration layering: TOML file, environment, CLI overrides."""

import pytest

from mmfnd.config import ENV_PREFIX, RunConfig, load_run_config, save_config


def test_defaults_without_sources():
    cfg = load_run_config(env={})
    assert cfg == RunConfig()
    assert cfg.epochs == 10 and cfg.seed == 42 and cfg.fusion_mode == "penultimate"


def test_file_overrides_defaults(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('epochs = 3\nlr = 0.01\ntarget = "text"\n', encoding="utf-8")
    cfg = load_run_config(path, env={})
    assert cfg.epochs == 3 and cfg.lr == 0.01 and cfg.target == "text"
    assert cfg.batch_size == 32  # untouched default


def test_env_overrides_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("epochs = 3\n", encoding="utf-8")
    cfg = load_run_config(path, env={"MMFND_EPOCHS": "7", "MMFND_LR": "0.5"})
    assert cfg.epochs == 7 and cfg.lr == 0.5


def test_overrides_beat_everything(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("epochs = 3\n", encoding="utf-8")
    cfg = load_run_config(path, env={"MMFND_EPOCHS": "7"},
                          overrides={"epochs": 9, "seed": None})
    assert cfg.epochs == 9
    assert cfg.seed == 42  # None override means "flag not given"


def test_unknown_file_key_rejected(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("epochz = 3\n", encoding="utf-8")
    with pytest.raises(ValueError, match="epochz"):
        load_run_config(path, env={})


def test_nested_tables_rejected(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("[epochs]\nvalue = 3\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_run_config(path, env={})


def test_unknown_override_rejected():
    with pytest.raises(ValueError, match="epochz"):
        load_run_config(env={}, overrides={"epochz": 3})


def test_env_bool_coercion():
    for raw, expected in (("1", True), ("true", True), ("YES", True), ("on", True),
                          ("0", False), ("False", False), ("no", False)):
        cfg = load_run_config(env={"MMFND_FREEZE_EMBEDDING": raw})
        assert cfg.freeze_embedding is expected, raw
    with pytest.raises(ValueError):
        load_run_config(env={"MMFND_FREEZE_EMBEDDING": "maybe"})


def test_env_ignores_unrelated_and_reserved_keys():
    cfg = load_run_config(env={
        "PATH": "/usr/bin",
        "MMFND_KERNELS": "python",     # backend switch, not a config field
        "MMFND_NO_SUCH_FIELD": "1",    # unknown names are skipped, not errors
        "MMFND_PORT": "9001",
    })
    assert cfg.port == 9001


def test_validation_errors():
    with pytest.raises(ValueError):
        load_run_config(env={"MMFND_TEST_FRACTION": "1.5"})
    with pytest.raises(ValueError):
        load_run_config(env={"MMFND_PORT": "0"})


def test_save_load_round_trip(tmp_path):
    cfg = load_run_config(env={}, overrides={
        "epochs": 2, "lr": 0.25, "freeze_embedding": True,
        "manifest": 'dir with "quotes"/manifest.csv',
    })
    save_config(cfg, tmp_path / "config.toml")
    reloaded = load_run_config(tmp_path / "config.toml", env={})
    assert reloaded == cfg


def test_saved_config_is_flat_toml(tmp_path):
    save_config(RunConfig(), tmp_path / "config.toml")
    text = (tmp_path / "config.toml").read_text()
    assert "epochs = 10" in text
    assert 'target = "fusion"' in text
    assert "standardize_features = true" in text
    assert "[" not in text  # no tables


def test_env_prefix_constant():
    assert ENV_PREFIX == "MMFND_"
