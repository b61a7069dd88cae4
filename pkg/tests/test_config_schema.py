"""Tests for schemas/*.json: config dataclasses and JSON schemas stay in sync."""

from __future__ import annotations

import json
import sys
from dataclasses import fields
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

SCHEMA_DIR = PROJECT_ROOT / "schemas"


def _pairs():
    from src.config_loader import AnalyzeConfig, SimulateConfig

    return [
        (AnalyzeConfig, SCHEMA_DIR / "analyze_config.schema.json"),
        (SimulateConfig, SCHEMA_DIR / "simulate_config.schema.json"),
    ]


def _properties(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)["properties"]


class TestSchemaFieldSync:
    """Every dataclass field is a schema property and vice versa."""

    @pytest.mark.parametrize("index", [0, 1])
    def test_same_field_names(self, index):
        cls, path = _pairs()[index]
        dc_fields = {f.name for f in fields(cls)}
        schema_fields = set(_properties(path))
        assert dc_fields - schema_fields == set(), f"{cls.__name__} fields missing from schema"
        assert schema_fields - dc_fields == set(), f"schema defines fields absent from {cls.__name__}"


class TestDefaultsMatchSchema:
    """Dataclass defaults equal the schema defaults (lists compare as tuples)."""

    @pytest.mark.parametrize("index", [0, 1])
    def test_defaults(self, index):
        cls, path = _pairs()[index]
        props = _properties(path)
        instance = cls()
        mismatches = []
        for field in fields(cls):
            schema_default = props[field.name].get("default")
            if schema_default is None:
                continue
            actual = getattr(instance, field.name)
            if isinstance(schema_default, list):
                schema_default = tuple(schema_default)
            if actual != schema_default:
                mismatches.append(f"  {field.name}: {cls.__name__}={actual}, schema={schema_default}")
        assert mismatches == [], "defaults differ from schema:\n" + "\n".join(mismatches)
