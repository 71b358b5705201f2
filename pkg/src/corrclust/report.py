"""Run reports: a JSON document per solve run, validated against a shipped schema."""

from __future__ import annotations

import json
import platform
from dataclasses import asdict, dataclass
from importlib import metadata, resources

import numpy as np

SCHEMA_NAME = "run_report.schema.json"


def package_version() -> str:
    try:
        return metadata.version("corrclust")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def provenance(argv) -> dict:
    return {
        "tool": "corrclust",
        "version": package_version(),
        "argv": [str(a) for a in argv],
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def load_schema() -> dict:
    text = resources.files("corrclust").joinpath("schemas", SCHEMA_NAME).read_text(encoding="utf-8")
    return json.loads(text)


@dataclass
class RunReport:
    method: str
    instance: dict
    params: dict
    result: dict
    query_count: int
    provenance: dict
    wall_time_ms: float | None = None
    query_bound: int | None = None
    exact: dict | None = None
    approximation_ratio: float | None = None
    trials: dict | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        # optional fields are omitted rather than written as null
        for key in ("query_bound", "exact", "approximation_ratio", "trials"):
            if d[key] is None:
                del d[key]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def validate_report(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` when ``doc`` does not match the schema."""
    import jsonschema

    jsonschema.validate(doc, load_schema())


__all__ = ["RunReport", "load_schema", "validate_report", "provenance", "package_version"]
