"""Parsers for the lorentzgas CSV formats.

All files share the layout: `# key=value` header lines, one column
header row, then data rows.  Values written with Python repr() are
parsed back with float()/ast-free literal handling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SchemaError(Exception):
    """The input file does not match the declared CSV schema."""


def _parse_file(path: str):
    """Split a CSV artifact into (meta dict, column names, row lists)."""
    meta = {}
    columns = None
    rows = []
    with open(path) as fp:
        for line in fp:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].strip().partition("=")
                if sep:
                    meta[key.strip()] = val
                continue
            if columns is None:
                columns = line.split(",")
                continue
            rows.append(line.split(","))
    if columns is None:
        raise SchemaError(f"{path}: no column header found")
    for i, row in enumerate(rows):
        if len(row) != len(columns):
            raise SchemaError(
                f"{path}: row {i + 1} has {len(row)} fields, "
                f"expected columns {columns}"
            )
    return meta, columns, rows


def _meta_float(meta, key, path):
    try:
        return float(meta[key].strip("'\""))
    except KeyError:
        raise SchemaError(f"{path}: missing required header '# {key}=...'")
    except ValueError:
        raise SchemaError(f"{path}: header {key}={meta[key]!r} is not a number")


def _edges(meta, key, path):
    try:
        return np.array([float(v) for v in meta[key].split(",")])
    except KeyError:
        raise SchemaError(f"{path}: missing required header '# {key}=...'")


@dataclass
class TransitionCSV:
    """A (s, h) transition histogram artifact."""

    h_prime: float
    s_edges: np.ndarray
    h_edges: np.ndarray
    counts: np.ndarray
    overflow: float
    meta: dict = field(default_factory=dict)


def read_transition(path: str) -> TransitionCSV:
    meta, columns, rows = _parse_file(path)
    if columns != ["s_bin", "h_bin", "count"]:
        raise SchemaError(
            f"{path}: expected columns s_bin,h_bin,count, got {columns}"
        )
    s_edges = _edges(meta, "s_edges", path)
    h_edges = _edges(meta, "h_edges", path)
    counts = np.zeros((len(s_edges) - 1, len(h_edges) - 1))
    for i, j, c in rows:
        counts[int(i), int(j)] = float(c)
    return TransitionCSV(
        h_prime=_meta_float(meta, "h_prime", path),
        s_edges=s_edges,
        h_edges=h_edges,
        counts=counts,
        overflow=_meta_float(meta, "overflow", path),
        meta=meta,
    )


@dataclass
class SweepCSV:
    """A transfer-compare radius sweep artifact."""

    r: np.ndarray
    median_s_err: np.ndarray
    slope: float
    meta: dict = field(default_factory=dict)


def read_sweep(path: str) -> SweepCSV:
    meta, columns, rows = _parse_file(path)
    required = ["r", "median_s_err"]
    if columns[: len(required)] != required:
        raise SchemaError(
            f"{path}: expected leading columns {required}, got {columns}"
        )
    data = np.array([[float(v) for v in row] for row in rows])
    if data.shape[0] < 2:
        raise SchemaError(f"{path}: a slope plot needs at least 2 radii")
    return SweepCSV(
        r=data[:, 0],
        median_s_err=data[:, 1],
        slope=_meta_float(meta, "slope", path),
        meta=meta,
    )


@dataclass
class DensityCSV:
    """A (x, y, theta) density grid artifact."""

    x_edges: np.ndarray
    y_edges: np.ndarray
    theta_edges: np.ndarray
    weights: np.ndarray
    t: float
    label: str
    meta: dict = field(default_factory=dict)


def read_density(path: str) -> DensityCSV:
    meta, columns, rows = _parse_file(path)
    if columns != ["x_bin", "y_bin", "theta_bin", "weight"]:
        raise SchemaError(
            f"{path}: expected columns x_bin,y_bin,theta_bin,weight, "
            f"got {columns}"
        )
    x_edges = _edges(meta, "x_edges", path)
    y_edges = _edges(meta, "y_edges", path)
    theta_edges = _edges(meta, "theta_edges", path)
    weights = np.zeros((len(x_edges) - 1, len(y_edges) - 1,
                        len(theta_edges) - 1))
    for i, j, k, w in rows:
        weights[int(i), int(j), int(k)] = float(w)
    if "label" not in meta:
        raise SchemaError(f"{path}: missing required header '# label=...'")
    return DensityCSV(
        x_edges=x_edges,
        y_edges=y_edges,
        theta_edges=theta_edges,
        weights=weights,
        t=_meta_float(meta, "t", path),
        label=meta["label"],
        meta=meta,
    )
