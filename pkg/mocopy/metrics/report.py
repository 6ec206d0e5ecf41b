# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import json
import math
from pathlib import Path
from typing import Any, Dict, Mapping, Sequence

import numpy as np
from astropy.table import Table

from .roc import RocCurve

__all__ = [
    'metric_report',
    'read_json_report',
    'read_rows_csv',
    'write_json_report',
    'write_roc_csv',
    'write_rows_csv',
]

# JSON has no literal for non-finite numbers; they are written as these strings.
_NON_FINITE = {'inf': math.inf, '-inf': -math.inf, 'nan': math.nan}


def metric_report(rows: Mapping[str, Mapping[str, float]]) -> Dict[str, Any]:
    """
    Per-item metrics plus the mean of every metric over the items.

    Args:
        rows: metric values keyed by item name (frame or image) and then by metric name.

    Returns:
        {'items': rows, 'mean': {metric: mean}}; a metric that is infinite for some item has an infinite mean.
    """
    items = {name: {k: float(v) for k, v in values.items()} for name, values in rows.items()}
    keys = sorted({k for values in items.values() for k in values})
    mean = {k: float(np.mean([values[k] for values in items.values() if k in values])) for k in keys}
    return {'items': items, 'mean': mean}


def _encode(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {k: _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return 'nan' if math.isnan(value) else ('inf' if value > 0 else '-inf')
    return value


def _decode(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v) for v in value]
    if isinstance(value, str) and value in _NON_FINITE:
        return _NON_FINITE[value]
    return value


def write_json_report(report: Mapping[str, Any], path: Path) -> None:
    with open(path, 'w') as f:
        json.dump(_encode(report), f, indent=2, sort_keys=True)
        f.write('\n')


def read_json_report(path: Path) -> Dict[str, Any]:
    with open(path) as f:
        return _decode(json.load(f))


def write_rows_csv(rows: Sequence[Mapping[str, Any]], path: Path, names: Sequence[str]) -> None:
    """
    Write dict rows as a CSV table with the given column order. An empty row list still writes the header.
    """
    table = Table(rows=[[row[n] for n in names] for row in rows] or None, names=list(names))
    table.write(path, format='ascii.csv', overwrite=True)


def read_rows_csv(path: Path) -> Table:
    return Table.read(path, format='ascii.csv')


def write_roc_csv(curve: RocCurve, path: Path) -> None:
    """
    One row per threshold: threshold, Fa, Pd and the raw counts behind them.
    """
    rows = [{'threshold': t, 'fa': c.fa, 'pd': c.pd, 'td': c.td, 'fd': c.fd, 'at': c.at, 'np': c.pixels}
            for t, c in zip(curve.thresholds, curve.counts)]
    write_rows_csv(rows, path, ('threshold', 'fa', 'pd', 'td', 'fd', 'at', 'np'))
