"""Frozen input schema and loud failure on any drift."""

from __future__ import annotations

import json
import os

import numpy as np

SHELL_COLUMNS = ("time", "shell", "energy", "dissipation")
DIAGNOSTIC_COLUMNS = ("time", "shell", "tail_energy", "energy_bound", "weighted_decrement")
SUMMARY_KEYS = ("Q", "cascade", "energy_inequality", "d_recursion", "lambda")


class SchemaError(Exception):
    """An input file does not match the documented schema."""


def load_csv(path: str, expected: tuple) -> np.ndarray:
    if not os.path.exists(path):
        raise SchemaError(f"missing input file {os.path.basename(path)}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        for column in expected:
            if column not in header:
                raise SchemaError(f"{os.path.basename(path)} missing column '{column}'")
        if list(header) != list(expected):
            raise SchemaError(
                f"{os.path.basename(path)} columns {header} != {list(expected)}"
            )
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        raise SchemaError(f"{os.path.basename(path)} has no data rows")
    return data


def load_summary(path: str) -> dict:
    if not os.path.exists(path):
        raise SchemaError("missing input file summary.json")
    with open(path, encoding="utf-8") as fh:
        summary = json.load(fh)
    for key in SUMMARY_KEYS:
        if key not in summary:
            raise SchemaError(f"summary.json missing key '{key}'")
    for key in ("indices", "adjacency_fraction"):
        if key not in summary["cascade"]:
            raise SchemaError(f"summary.json missing key 'cascade.{key}'")
    if "per_sample" not in summary["energy_inequality"]:
        raise SchemaError("summary.json missing key 'energy_inequality.per_sample'")
    if "per_sample_violation" not in summary["d_recursion"]:
        raise SchemaError("summary.json missing key 'd_recursion.per_sample_violation'")
    return summary


def pivot(data: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(time, shell, value...) rows -> sorted times, shells, value matrices."""
    times = np.unique(data[:, 0])
    shells = np.unique(data[:, 1]).astype(int)
    index_t = {t: i for i, t in enumerate(times)}
    index_n = {n: j for j, n in enumerate(shells)}
    matrices = np.zeros((data.shape[1] - 2, len(times), len(shells)))
    for row in data:
        i, j = index_t[row[0]], index_n[int(row[1])]
        matrices[:, i, j] = row[2:]
    return times, shells, matrices
