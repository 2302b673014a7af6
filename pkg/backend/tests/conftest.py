"""
Shared fixtures for the simulator tests.
"""
from pathlib import Path

import pytest

from app.services.scenarios import config_from_dict, parse_config

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def load_scenario():
    """Load a shipped scenario by name, with optional key=value overrides."""

    def _load(name: str, *overrides: str):
        text = (SCENARIO_DIR / f"{name}.json").read_text(encoding="utf-8")
        return parse_config(text, overrides)

    return _load


@pytest.fixture
def make_config():
    """Build a validated config from keyword fields on top of the defaults."""

    def _make(**fields):
        return config_from_dict(fields)

    return _make
