"""CSV/JSON writers and readers for run summaries, sweep tables and series.

Every file starts with one ``# config: {...}`` comment line holding the
resolved configuration as JSON, so any output can be re-run from itself.
The CSV header is the first non-comment line.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from shared_naming.experiment import STATISTICS, SweepCell
from shared_naming.metrics import SERIES_COLUMNS, RunResult

CONFIG_PREFIX = "# config: "

SWEEP_COLUMNS = (
    ["lambda", "c", "runs"]
    + [f"{kind}_{stat}" for stat in STATISTICS for kind in ("mean", "sd")]
    + ["p_shared", "non_converged"]
)
AVERAGED_SERIES_COLUMNS = ("t", "mean_n_w", "mean_n_d", "mean_s")


def fmt(value) -> str:
    """Lossless text for ints and floats (shortest round-trip repr)."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def _config_line(config: dict) -> str:
    return CONFIG_PREFIX + json.dumps(config, sort_keys=True) + "\n"


def _write_csv(path, config: dict, header, rows) -> None:
    buf = io.StringIO()
    buf.write(_config_line(config))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def write_run_series(path, result: RunResult) -> None:
    _write_csv(path, result.config.as_dict(), SERIES_COLUMNS, result.series.tolist())


def write_run_summary(path, result: RunResult) -> None:
    doc = {"config": result.config.as_dict(), "result": result.summary()}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def sweep_row(cell: SweepCell) -> list:
    row = [cell.lam, cell.c_words, cell.runs]
    for stat in STATISTICS:
        row += [cell.mean[stat], cell.sd[stat]]
    return row + [cell.p_shared, cell.non_converged]


def write_sweep_csv(path, config: dict, cells: list[SweepCell]) -> None:
    _write_csv(path, config, SWEEP_COLUMNS, [sweep_row(c) for c in cells])


def write_sweep_summary(path, config: dict, cells: list[SweepCell]) -> None:
    doc = {
        "config": config,
        "cells": [
            {
                "lambda_index": c.lambda_index,
                "c_index": c.c_index,
                **dict(zip(SWEEP_COLUMNS, sweep_row(c))),
                "n_converged": c.n_converged,
                "n_shared": c.n_shared,
            }
            for c in cells
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


def series_filename(cell: SweepCell) -> str:
    return f"series_l{cell.lambda_index:02d}_c{cell.c_index:02d}_lambda{fmt(cell.lam)}_C{cell.c_words}.csv"


def write_cell_series(directory, config: dict, cell: SweepCell) -> Path:
    path = Path(directory) / series_filename(cell)
    rows = [[int(r[0]), float(r[1]), float(r[2]), float(r[3])] for r in cell.series]
    cell_config = dict(config, lambda_index=cell.lambda_index, c_index=cell.c_index,
                       cell_lambda=cell.lam, cell_c=cell.c_words)
    _write_csv(path, cell_config, AVERAGED_SERIES_COLUMNS, rows)
    return path


def read_config(path) -> dict:
    """Configuration embedded in any file written by this module."""
    text = Path(path).read_text()
    if text.startswith(CONFIG_PREFIX):
        return json.loads(text.splitlines()[0][len(CONFIG_PREFIX):])
    doc = json.loads(text)
    if "config" not in doc:
        raise ValueError(f"{path}: no embedded configuration")
    return doc["config"]


def read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def read_sweep_csv(path) -> tuple[dict, list[dict]]:
    rows = read_csv_rows(path)
    if not rows or set(SWEEP_COLUMNS) - set(rows[0]):
        raise ValueError(f"{path}: not a sweep table")
    parsed = []
    for row in rows:
        rec = {key: float(row[key]) for key in SWEEP_COLUMNS}
        rec["c"] = int(row["c"])
        rec["runs"] = int(row["runs"])
        rec["non_converged"] = int(row["non_converged"])
        parsed.append(rec)
    try:
        config = read_config(path)
    except (ValueError, json.JSONDecodeError):
        config = {}
    return config, parsed
