"""Trace CSV and JSON output: deterministic, shortest round-trip floats.

A trace file is `# key=value` header lines followed by one CSV row per
round.  The same column computation feeds the writer and the audit's
exactness check, so any hand-edited cell shows up as a bitwise mismatch
against the deterministic re-run.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .core import Trajectory

SCHEMA_VERSION = 1

FIXED_COLUMNS = (
    "t",
    "action",
    "candidate",
    "gate_open",
    "reward",
    "cum_reward",
    "lambda_l1",
    "max_general_violation_cum",
)


def trace_columns(trajectory: Trajectory) -> dict[str, np.ndarray]:
    """The per-round columns of the trace, in file order."""
    T = trajectory.horizon
    m = trajectory.num_general
    cols: dict[str, np.ndarray] = {
        "t": np.arange(1, T + 1, dtype=np.int64),
        "action": trajectory.actions,
        "candidate": trajectory.candidates,
        "gate_open": trajectory.gate_open.astype(np.int64),
        "reward": trajectory.rewards,
        "cum_reward": np.cumsum(trajectory.rewards),
        "lambda_l1": np.abs(trajectory.duals[:-1]).sum(axis=1),
    }
    if m:
        running = np.cumsum(trajectory.unified_values[:, :m], axis=0)
        cols["max_general_violation_cum"] = running.max(axis=1)
    else:
        cols["max_general_violation_cum"] = np.zeros(T)
    for j in range(trajectory.num_resources):
        cols[f"cum_consumption_{j + 1}"] = trajectory.cumulative_consumption[:, j]
    return cols


def _format_cell(value) -> str:
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return repr(float(value))


def write_trace_csv(path, trajectory: Trajectory, header: dict) -> None:
    """Write the trace atomically (temp file + rename)."""
    cols = trace_columns(trajectory)
    names = list(cols)
    lines = [f"# {key}={value}" for key, value in header.items()]
    lines.append(",".join(names))
    arrays = [cols[name] for name in names]
    for i in range(trajectory.horizon):
        lines.append(",".join(_format_cell(a[i]) for a in arrays))
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_trace_csv(path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Parse a trace file into its header dict and typed column arrays."""
    header: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        key, _, value = body.partition("=")
        header[key.strip()] = value
        i += 1
    if i >= len(lines):
        raise ValueError(f"{path}: no column header row found")
    names = lines[i].split(",")
    rows = [line.split(",") for line in lines[i + 1 :] if line]
    columns: dict[str, np.ndarray] = {}
    for c, name in enumerate(names):
        raw = [row[c] for row in rows]
        if name in ("t", "action", "candidate", "gate_open"):
            columns[name] = np.array([int(v) for v in raw], dtype=np.int64)
        else:
            columns[name] = np.array([float(v) for v in raw])
    return header, columns


def write_json_atomic(path, payload) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(payload, indent=1, allow_nan=False) + "\n")
    os.replace(tmp, path)
