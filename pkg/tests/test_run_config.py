import pytest

from app.estimation.errors import ConfigError
from app.services.methods import METHOD_NAMES, coerce, get_method
from app.services.run_config import MethodSpec, RunConfig

RUN_INI = """
[run]
scenarios = linear, simple
sample_sizes = 1000, 10000
replicates = 500, 250
methods = rsr, plm_rbf, dml_crossfit
delta = 1
master_seed = 2024
bootstrap = 0

[crossfit]
r = 0.1
folds = 5

[method.plm_rbf]
k = 150

[scenario.simple]
field_radius = 0.1
field_sd = 1
"""


def write(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return str(path)


def test_from_ini(tmp_path):
    config = RunConfig.from_ini(write(tmp_path, RUN_INI))
    assert config.scenarios == ("linear", "simple")
    assert config.sample_sizes == (1000, 10000)
    assert config.replicates == (500, 250)
    assert [m.name for m in config.methods] == ["rsr", "plm_rbf", "dml_crossfit"]
    assert config.master_seed == 2024
    assert config.cells() == [("linear", 1000, 500), ("linear", 10000, 250),
                              ("simple", 1000, 500), ("simple", 10000, 250)]


def test_crossfit_and_method_options_merge(tmp_path):
    config = RunConfig.from_ini(write(tmp_path, RUN_INI))
    crossfit = next(m for m in config.methods if m.name == "dml_crossfit")
    options = config.options_for(crossfit)
    assert options["r"] == 0.1 and options["folds"] == 5
    plm = next(m for m in config.methods if m.name == "plm_rbf")
    parsed = get_method("plm_rbf").parse_options(config.options_for(plm))
    assert parsed["k"] == 150
    assert parsed["gp_cap"] == config.gp_cap


def test_scenario_overrides(tmp_path):
    config = RunConfig.from_ini(write(tmp_path, RUN_INI))
    spec = config.scenario_spec("simple")
    assert spec.field_radius == 0.1
    assert spec.field_sd == 1.0


def test_single_replicate_count_is_broadcast():
    config = RunConfig(sample_sizes=(100, 200), replicates=(5,))
    assert config.replicates == (5, 5)


def test_defaults():
    config = RunConfig.from_mapping({})
    assert config.delta == 1.0
    assert config.bootstrap == 120
    assert [m.name for m in config.methods] == ["rsr", "plm_rbf", "dml_rbf"]


def test_methods_as_list():
    config = RunConfig.from_mapping({"methods": ["ols", "svc"]})
    assert [m.name for m in config.methods] == ["ols", "svc"]


@pytest.mark.parametrize("mapping", [
    {"run": {"methods": "rsr, kriging"}},
    {"run": {"scenarios": "linear, desert"}},
    {"run": {"replicates": "0"}},
    {"run": {"bootstrap": "1"}},
    {"run": {"delta": "inf"}},
    {"run": {"colour": "blue"}},
    {"run": {"methods": "rsr"}, "methods": {"plm_rbf": {"k": "10"}}},
    {"methods": {"plm_rbf": {"bandwidth": "2"}}},
    {"crossfit": {"radius": "0.1"}},
    {"scenario_params": {"linear": {"exposure_sd": "-1"}}},
    {"run": {"sample_sizes": "1000, 2000", "replicates": "1, 2, 3"}},
])
def test_invalid_configurations(mapping):
    with pytest.raises(ConfigError):
        RunConfig.from_mapping(mapping)


def test_unknown_section(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_ini(write(tmp_path, "[run]\nscenarios = linear\n[plot]\ncolour = red\n"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_ini(str(tmp_path / "absent.ini"))


def test_to_dict_echo():
    config = RunConfig(methods=(MethodSpec("plm_rbf", {"k": 50}),))
    data = config.to_dict()
    assert data["methods"] == {"plm_rbf": {"k": 50}}
    assert data["scenarios"] == ["linear"]


@pytest.mark.parametrize("value, default, expected", [
    ("3", 1, 3),
    ("0.5", 1.0, 0.5),
    ("yes", False, True),
    ("none", 5, None),
    ("gcv", "gcv", "gcv"),
    ("0.01", "gcv", 0.01),
    ("7", None, 7),
    (4, 1, 4),
])
def test_coerce(value, default, expected):
    assert coerce(value, default) == expected


def test_coerce_rejects_bad_numbers():
    with pytest.raises(ConfigError):
        coerce("many", 1)


def test_every_method_is_registered():
    assert len(METHOD_NAMES) == 13
    for name in METHOD_NAMES:
        assert get_method(name).name == name


def test_gp_methods_have_substitutes():
    assert get_method("plm_gp").substitute == "plm_rbf"
    assert get_method("flex_gp").substitute == "flex_rbf"
    assert not get_method("plm_gp").bootstrap


def test_unknown_method():
    with pytest.raises(ConfigError):
        get_method("kriging")


def test_method_rejects_foreign_options():
    with pytest.raises(ConfigError):
        get_method("ols").parse_options({"k": 10})
    with pytest.raises(ConfigError):
        get_method("plm_rbf").parse_options({"r": 0.1})
