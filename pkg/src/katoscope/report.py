"""Machine-readable run reports: JSON documents plus delimited tables.

Every pass/fail flag in a report sits next to the numbers that were
compared and the tolerance used, so a report is auditable without
re-running the scenario.  Norm-versus-time curves are written as CSV with
the header (t, value, error); semigroup fields as (t, x, u, stderr).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class Report:
    scenario: dict
    results: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)   # name -> (header tuple, row list)
    runtime_s: float = 0.0
    versions: dict = field(default_factory=dict)
    passes: bool | None = None


def _versions() -> dict:
    import scipy

    from . import __version__

    return {"katoscope": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def new_report(scenario_echo: dict) -> Report:
    return Report(scenario=scenario_echo, versions=_versions())


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: _jsonable(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
            if _is_plain(getattr(obj, f.name))
        }
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return repr(obj)


def _is_plain(v) -> bool:
    return not callable(v)


def report_to_dict(report: Report) -> dict:
    return {
        "scenario": _jsonable(report.scenario),
        "results": _jsonable(report.results),
        "tables": {
            name: {"header": list(header), "rows": _jsonable(rows)}
            for name, (header, rows) in report.tables.items()
        },
        "runtime_s": report.runtime_s,
        "versions": report.versions,
        "passes": report.passes,
    }


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_jsonable(v) for v in row])


def emit_report(report: Report, out_dir, name: str, formats=("json", "csv")) -> list[Path]:
    """Write the report files and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "json" in formats:
        path = out / f"{name}.json"
        with open(path, "w") as fh:
            json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    if "csv" in formats:
        for table, (header, rows) in report.tables.items():
            path = out / f"{name}.{table}.csv"
            write_csv(path, header, rows)
            written.append(path)
    return written


def load_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_index(out_dir, entries) -> Path:
    """Suite index: one row per scenario report with its overall flag."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "index.json"
    with open(path, "w") as fh:
        json.dump(
            {
                "generated_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
                "reports": [
                    {"name": n, "file": str(f), "passes": p} for n, f, p in entries
                ],
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return path
