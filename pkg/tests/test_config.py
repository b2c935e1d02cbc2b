import pytest

from kdlab import config as cfgmod


def test_packaged_defaults_match_dataclass():
    assert cfgmod.load() == cfgmod.ExperimentConfig()


def test_parse_overrides_and_comments():
    cfg = cfgmod.parse("driver.theta = 2.0  # damping\nrun.eps = 0.3, 0.1\nseed=7\n")
    assert cfg.theta == 2.0 and cfg.eps == (0.3, 0.1) and cfg.seed == 7
    assert cfg.driver().theta == 2.0


def test_unknown_key_rejected():
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.parse("driver.thetta = 1\n")


def test_validation():
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.ExperimentConfig(eps=(0.1, 0.2)).validate()
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.ExperimentConfig(ensemble=10).validate()
    with pytest.raises(ValueError):
        cfgmod.ExperimentConfig(alpha=0.5).validate()


def test_digest_ignores_output_location():
    a = cfgmod.ExperimentConfig()
    assert a.digest() == a.replace(out="elsewhere", experiment="tightness").digest()
    assert a.digest() != a.replace(seed=1).digest()


def test_energy_window():
    assert cfgmod.ExperimentConfig().eps_outside_energy_window() == [0.2]


def test_load_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("grid.nx = 32\n")
    assert cfgmod.load(path).nx == 32
