"""Audit report container, canonical JSON encoding and schema validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import jsonschema

SCHEMA_VERSION = "1.0"


def _clean(obj: Any) -> Any:
    """Make a value JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


@dataclass
class EvalReport:
    seed: int
    inputs: dict[str, str]
    counts: dict[str, int] = field(default_factory=dict)
    f1: dict = field(default_factory=dict)
    agreement: dict = field(default_factory=dict)
    bland_altman: dict = field(default_factory=dict)
    ols: dict = field(default_factory=dict)
    polynomial: dict = field(default_factory=dict)
    correlations: dict = field(default_factory=dict)
    out_of_range: dict = field(default_factory=dict)
    distributions: dict = field(default_factory=dict)
    normality: dict = field(default_factory=dict)
    omitted: list[dict] = field(default_factory=list)

    def omit(self, statistic: str, reason: str) -> None:
        self.omitted.append({"statistic": statistic, "reason": reason})

    def to_dict(self) -> dict:
        d = {"schema_version": SCHEMA_VERSION}
        d.update(self.__dict__)
        return _clean(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("report_schema.json").read_text("utf-8"))


def validate_report(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match the schema."""
    jsonschema.validate(doc, load_schema())
