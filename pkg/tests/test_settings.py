import pytest

from crslab.config.settings import AppConfig


def test_defaults(default_config, monkeypatch):
    monkeypatch.delenv("CRSLAB_SEED", raising=False)
    assert default_config.seed == 20240601
    assert default_config.threads == 1
    assert default_config.paths == 100_000
    assert default_config.output_format == "csv"
    assert default_config.output_dir == "."
    assert default_config.grid_points == 4000


def test_file_values(tmp_path, monkeypatch):
    monkeypatch.delenv("CRSLAB_SEED", raising=False)
    path = tmp_path / "config.toml"
    path.write_text('[simulation]\nseed = 7\nthreads = 4\n\n[output]\nformat = "json"\n', encoding="utf-8")
    config = AppConfig(str(path))
    assert config.seed == 7
    assert config.threads == 4
    assert config.output_format == "json"
    assert config.paths == 100_000


def test_invalid_file_falls_back(tmp_path, monkeypatch):
    monkeypatch.delenv("CRSLAB_SEED", raising=False)
    path = tmp_path / "config.toml"
    path.write_text("[simulation\nseed = ", encoding="utf-8")
    assert AppConfig(str(path)).seed == AppConfig.DEFAULT_SEED


def test_environment_seed(default_config, monkeypatch):
    monkeypatch.setenv("CRSLAB_SEED", "99")
    assert default_config.seed == 99
    assert default_config.resolve_seed(None) == 99
    assert default_config.resolve_seed(3) == 3


def test_bad_environment_seed(default_config, monkeypatch):
    monkeypatch.setenv("CRSLAB_SEED", "abc")
    with pytest.raises(ValueError, match="CRSLAB_SEED"):
        default_config.seed
