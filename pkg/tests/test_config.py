import pytest

from config import Defaults, ExitCodes, Paths, RunConfig, Settings, parse_config_lines
from errors import ConfigurationError
from levy import ModelParams
from sampler import StepConfig


def test_defaults():
    config = RunConfig()
    assert config.n == Defaults.N_PATHS
    assert config.streams == Defaults.STREAMS
    assert config.model() == ModelParams(1, 1.0, 0.0)
    assert config.step_config() == StepConfig(Defaults.H, Defaults.T_MAX)


def test_exit_codes_distinct():
    codes = [ExitCodes.OK, ExitCodes.USAGE, ExitCodes.NUMERICAL, ExitCodes.VERIFICATION]
    assert len(set(codes)) == len(codes)


@pytest.mark.parametrize("kwargs", [
    dict(streams=0),
    dict(n=0),
    dict(format="xml"),
    dict(potential="box"),
    dict(seed=-1),
])
def test_rejects(kwargs):
    with pytest.raises(ConfigurationError):
        RunConfig(**kwargs)


def test_parse_lines():
    values = parse_config_lines([
        "# model",
        "alpha = 1.5",
        "d=2",
        "x=0.5, 0.25   # start",
        "lambda=0.3",
        "tmax=10",
        "",
        "format=json",
    ])
    assert values == {"alpha": 1.5, "d": 2, "x": (0.5, 0.25), "lam": 0.3, "t_max": 10.0, "format": "json"}


@pytest.mark.parametrize("line", ["alpha", "colour=red", "d=two"])
def test_parse_errors(line):
    with pytest.raises(ConfigurationError, match="line 1"):
        parse_config_lines([line])


def test_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("alpha=0.8\nm=2\nn=500\n", encoding="utf-8")
    config = RunConfig.from_file(path)
    assert config.model() == ModelParams(1, 0.8, 2.0)
    assert config.n == 500


def test_merged_skips_none():
    config = RunConfig(alpha=0.8).merged(alpha=None, m=1.5)
    assert config.alpha == 0.8
    assert config.m == 1.5


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv(Settings.SEED_ENV_VAR, "42")
    assert RunConfig().merged(seed=7).seed == 42
    monkeypatch.setenv(Settings.SEED_ENV_VAR, "abc")
    with pytest.raises(ConfigurationError):
        RunConfig().merged()


def test_cache_dir_override(tmp_path, monkeypatch):
    monkeypatch.setenv(Settings.CACHE_ENV_VAR, str(tmp_path / "c"))
    assert Paths.calibration_file() == tmp_path / "c" / Paths.CALIBRATION_FILE_NAME
    assert Paths.ensure_cache_dir().is_dir()


def test_radial_potential_kinds():
    well = RunConfig(a=2.0, v=3.0).radial_potential()
    assert well.kind == "well"
    exp = RunConfig(potential="exp", v=3.0, scale=0.5).radial_potential()
    assert exp.kind == "exp"


def test_as_meta():
    meta = RunConfig(x=(1.0, 2.0)).as_meta()
    assert meta["x"] == [1.0, 2.0]
    assert meta["alpha"] == 1.0
