import json

import pytest

from app.errors import ConfigError
from app.models.scenario import ConstantSpec, StepSpec
from app.services.scenarios import apply_overrides, config_from_dict, parse_config, serialize_config


def test_empty_object_gives_defaults():
    config = parse_config("{}")
    assert config.n_tiers == 3
    assert (config.h, config.T_ct, config.T_mape) == (0.05, 0.5, 60.0)
    assert config.load == ConstantSpec(value=50.0)
    assert config.mape_enabled and not config.ml_enabled
    assert (config.steps, config.ct_every, config.mape_every) == (12000, 10, 1200)


def test_shipped_scenarios_validate(scenario_dir):
    paths = sorted(scenario_dir.glob("*.json"))
    assert paths
    for path in paths:
        parse_config(path.read_text(encoding="utf-8"))


def test_syntax_error_reports_position():
    with pytest.raises(ConfigError) as info:
        parse_config('{\n  "duration": 10,\n  "h" 0.05\n}')
    assert info.value.line == 3
    assert info.value.column is not None


def test_unknown_key_is_rejected_with_its_path():
    with pytest.raises(ConfigError) as info:
        parse_config('{"goal": {"sla": 1.0}}')
    assert info.value.field == "goal.sla"


@pytest.mark.parametrize("data", [
    {"h": 0.05, "T_ct": 0.12},
    {"T_ct": 0.5, "T_mape": 0.25},
    {"duration": -1},
    {"n_tiers": 2, "efficiency": [{"kind": "constant", "value": 1.0}]},
    {"goal": {"budget_cap": 20}},
    {"efficiency": {"kind": "constant", "value": 1.2}},
    {"load": {"kind": "step", "t0": 10, "before": 5, "after": -1}},
    {"load": {"kind": "wave", "value": 1}},
    {"analyzer": {"theta_up": -0.6}},
    {"analyzer": {"persistence": 400}},
    {"T_mape": 5, "analyzer": {"persistence": 30, "keep_periods": 2}},
])
def test_invariant_violations_are_config_errors(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_dotted_overrides():
    config = parse_config(
        '{"n_tiers": 2, "plant": [{"cu_max": 4}, {"cu_max": 6}]}',
        ["goal.sla_response_time=0.9", "plant.1.cu_max=8", 'load={"kind": "step", "t0": 5, "before": 1, "after": 2}'],
    )
    assert config.goal.sla_response_time == 0.9
    assert config.plant[1].cu_max == 8
    assert config.load == StepSpec(t0=5, before=1, after=2)


def test_override_creates_missing_sections():
    data = apply_overrides({}, ["planner.margin=0.2", "mape_enabled=false"])
    assert data == {"planner": {"margin": 0.2}, "mape_enabled": False}


@pytest.mark.parametrize("override", ["no_equals_sign", "=1", "plant.3.cu_max=2"])
def test_malformed_overrides(override):
    with pytest.raises(ConfigError):
        parse_config('{"plant": [{}, {}, {}]}', [override])


def test_seed_override_wins():
    assert parse_config('{"seed": 3}', seed_override=99).seed == 99
    assert parse_config('{"seed": 3}').seed == 3


def test_serialized_config_parses_back_to_itself():
    config = parse_config(json.dumps({
        "n_tiers": 2,
        "load": {"kind": "sinusoid", "base": 50, "amplitude": 10, "period": 300, "noise_sigma": 1},
        "efficiency": [{"kind": "constant", "value": 0.9}, {"kind": "piecewise_random", "mean": 0.8, "spread": 0.1, "dwell": 5}],
    }))
    assert parse_config(serialize_config(config)) == config


def test_mape_period_must_be_a_multiple_of_h():
    assert parse_config('{"T_mape": 61}').mape_every == 1220
    with pytest.raises(ConfigError):
        parse_config('{"T_mape": 60.03}')


def test_misspelt_key_is_named():
    with pytest.raises(ConfigError) as info:
        parse_config('{"duration": 600, "tpe_mape": 60}')
    assert info.value.field == "tpe_mape"
    assert "tpe_mape" in str(info.value)
