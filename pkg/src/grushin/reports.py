"""Run reports: ``report.json``, ``checks/*.csv`` and the report schema.

``report.json`` layout::

    {
      "schema_version": 1, "tool": "grushin", "version": "...",
      "subcommand": "...", "seed": 0, "threads": 1, "profile": "desk1d",
      "config": {...},                      # echo of the parsed config
      "verdict": "PASS" | "FAIL",
      "checks": [{"name", "verdict", "inputs", "measured", "warnings", "tables"}],
      "timing": {"total_s": ..., "checks": {name: seconds}}
    }

Everything outside ``timing`` and ``threads`` depends only on the config
and the seed.  Non-finite floats are written as the strings ``"inf"``,
``"-inf"`` and ``"nan"``.

CSV files: ``checks/<name>.csv`` has columns ``key,value`` with the
measured values (lists are expanded to ``key[i]``); each table of a check
is written to ``checks/<name>_<table>.csv`` with the table's own columns.
The Cotlar decay fit is the long-format ``checks/cotlar_decay.csv`` with
columns ``series,offset,value``.
"""

from __future__ import annotations

import csv
import json
import math
import os

import jsonschema
import numpy as np

from . import __version__

SCHEMA_VERSION = 1

_SCALAR = {"type": ["number", "string", "boolean", "null", "integer"]}
_VALUE = {"anyOf": [_SCALAR, {"type": "array"}, {"type": "object"}]}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "tool", "version", "subcommand", "seed", "threads", "profile", "config",
                 "verdict", "checks", "timing"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": {"const": "grushin"},
        "version": {"type": "string"},
        "subcommand": {"type": "string"},
        "seed": {"type": "integer"},
        "threads": {"type": "integer", "minimum": 1},
        "profile": {"enum": ["desk1d", "desk2d"]},
        "config": {"type": "object"},
        "verdict": {"enum": ["PASS", "FAIL"]},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "verdict", "inputs", "measured", "warnings", "tables"],
                "properties": {
                    "name": {"type": "string"},
                    "verdict": {"enum": ["PASS", "FAIL"]},
                    "inputs": {"type": "object"},
                    "measured": {"type": "object", "additionalProperties": _VALUE},
                    "warnings": {"type": "array", "items": {"type": "string"}},
                    "tables": {"type": "array", "items": {"type": "string"}},
                },
                "additionalProperties": False,
            },
        },
        "timing": {
            "type": "object",
            "required": ["total_s", "checks"],
            "properties": {"total_s": {"type": "number"}, "checks": {"type": "object"}},
        },
    },
    "additionalProperties": False,
}


def clean(obj):
    """JSON-ready copy: numpy scalars and arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [clean(obj.real), clean(obj.imag)]
    return obj


def build_report(subcommand, results, config_echo, seed, threads, profile, total_s):
    checks = [{"name": r.name, "verdict": r.verdict, "inputs": clean(r.inputs), "measured": clean(r.measured),
               "warnings": list(r.warnings), "tables": sorted(r.tables)} for r in results]
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": "grushin",
        "version": __version__,
        "subcommand": subcommand,
        "seed": int(seed),
        "threads": int(threads),
        "profile": profile,
        "config": clean(config_echo),
        "verdict": "PASS" if results and all(r.passed for r in results) else "FAIL",
        "checks": checks,
        "timing": {"total_s": float(total_s), "checks": {r.name: float(r.runtime_s) for r in results}},
    }
    validate_report(report)
    return report


def validate_report(report):
    jsonschema.validate(report, REPORT_SCHEMA)


def reproducible_part(report):
    """The report without wall-clock times and the thread count."""
    return {k: v for k, v in report.items() if k not in ("timing", "threads")}


def _flatten(key, value):
    if isinstance(value, list):
        for i, v in enumerate(value):
            yield from _flatten(f"{key}[{i}]", v)
    elif isinstance(value, dict):
        for k, v in value.items():
            yield from _flatten(f"{key}.{k}", v)
    else:
        yield key, value


def _csv_cell(v):
    v = clean(v)
    return repr(v) if isinstance(v, float) else v


def write_report(out_dir, report, results, csv_tables=True):
    """Write ``report.json`` and the CSV tables; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(path)
    if not csv_tables:
        return paths
    cdir = os.path.join(out_dir, "checks")
    os.makedirs(cdir, exist_ok=True)
    for r, rec in zip(results, report["checks"]):
        stem = r.name.replace("-", "_")
        p = os.path.join(cdir, f"{stem}.csv")
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["key", "value"])
            for key, value in rec["measured"].items():
                for k, v in _flatten(key, value):
                    w.writerow([k, _csv_cell(v)])
        paths.append(p)
        for tname, table in sorted(r.tables.items()):
            p = os.path.join(cdir, f"{stem}_{tname}.csv")
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(table["columns"])
                for row in table["rows"]:
                    w.writerow([_csv_cell(v) for v in row])
            paths.append(p)
    return paths


def load_report(path):
    with open(path) as fh:
        report = json.load(fh)
    validate_report(report)
    return report
