from __future__ import annotations

from pathlib import Path

import pytest

from vecsim.config import ScenarioConfig, apply_overrides, load_scenario, validate_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "src" / "vecsim" / "scenarios"


def scenario_path(name: str) -> Path:
    return SCENARIO_DIR / f"{name}.json"


def load_bundled(name: str, **overrides) -> ScenarioConfig:
    """Fresh config per call; overrides are dotted paths with dots as double underscores."""
    cfg = load_scenario(scenario_path(name))
    if overrides:
        apply_overrides(cfg, {k.replace("__", "."): v for k, v in overrides.items()})
        problems = validate_scenario(cfg)
        assert problems == [], problems
    return cfg


@pytest.fixture
def smoke_cfg() -> ScenarioConfig:
    return load_bundled("smoke")
