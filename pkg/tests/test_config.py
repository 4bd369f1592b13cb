import pytest

from mvpb.cache import CACHE_ENV
from mvpb.config import ConfigError, RunConfig, dump_config, load_config


def write(tmp_path, text):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    return p


def test_defaults_roundtrip(tmp_path):
    cfg = load_config()
    assert cfg == RunConfig()
    assert load_config(write(tmp_path, dump_config(cfg))) == cfg


def test_unknown_key_reports_line(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config(write(tmp_path, "basis:\n  l_max: 6\n  nradial: 20\n"))
    assert e.value.key == "basis.nradial" and e.value.line == 3


def test_depth_range(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config(write(tmp_path, "kinetic:\n  depth: 5\n"))
    assert e.value.line == 2
    assert load_config(overrides={"kinetic.depth": 4}).kinetic.depth == 4


def test_grid_forms(tmp_path):
    cfg = load_config(write(tmp_path, "spectrum:\n  eta: {linspace: [0, 1, 5]}\n"))
    assert cfg.spectrum.eta == (0.0, 0.25, 0.5, 0.75, 1.0)
    with pytest.raises(ConfigError, match="ascending"):
        load_config(write(tmp_path, "green:\n  t: [5, 3]\n"))


def test_type_errors(tmp_path):
    with pytest.raises(ConfigError, match="integer"):
        load_config(write(tmp_path, "basis:\n  l_max: six\n"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "lemmas: ['5.9']\n"))


def test_yaml_syntax_line(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config(write(tmp_path, "basis:\n  l_max: 6\n n_radial: [\n"))
    assert e.value.line is not None


def test_cache_dir_resolution(tmp_path, monkeypatch):
    monkeypatch.delenv(CACHE_ENV, raising=False)
    cfg = RunConfig(output_dir=str(tmp_path))
    assert cfg.resolved_cache_dir() == (tmp_path / "cache").resolve()
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "env"))
    assert cfg.resolved_cache_dir() == (tmp_path / "env").resolve()
    cfg = RunConfig(cache_dir=str(tmp_path / "explicit"))
    assert cfg.resolved_cache_dir() == (tmp_path / "explicit").resolve()


def test_output_dir_must_not_be_file(tmp_path):
    f = tmp_path / "file"
    f.write_text("")
    with pytest.raises(ConfigError):
        load_config(overrides={"output_dir": str(f)})
