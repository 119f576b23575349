"""JSON codec for instances, with strict-by-default schema checking.

Instance schema::

    { "T": int, "K": int, "m": int, "n": int, "void_index": int,
      "beta": [n reals],
      "rounds": [ { "f": [K], "g": [m][K], "h": [n][K] } x T ] }

Stochastic-model files replace "rounds" with "support" (same per-round shape)
plus "probs".  Unknown fields are rejected with a JSON-pointer path unless the
environment variable ORA_BOB_SCHEMA_STRICT is set to "0".  Floats are written
with Python's shortest round-trip representation, so save -> load reproduces
bit-identical matrices.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Any

from .core import ActionSet, BudgetSpec, InputTuple, Instance

ENV_STRICT = "ORA_BOB_SCHEMA_STRICT"
SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Schema violation, carrying the JSON pointer of the offending node."""

    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


def strict_mode() -> bool:
    return os.environ.get(ENV_STRICT, "1") != "0"


def _check_keys(d: dict, required: tuple, optional: tuple, pointer: str):
    if not isinstance(d, dict):
        raise SchemaError(f"expected object, got {type(d).__name__}", pointer)
    for key in required:
        if key not in d:
            raise SchemaError(f"missing required field {key!r}", pointer)
    if strict_mode():
        allowed = set(required) | set(optional)
        for key in d:
            if key not in allowed:
                raise SchemaError("unknown field", f"{pointer}/{key}")


def _as_int(value, pointer: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"expected integer, got {value!r}", pointer)
    return value


def _as_real_list(value, length: int, pointer: str) -> list[float]:
    if not isinstance(value, list) or len(value) != length:
        raise SchemaError(f"expected list of {length} reals", pointer)
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"expected real, got {v!r}", f"{pointer}/{i}")
        out.append(float(v))
    return out


def _as_matrix(value, rows: int, cols: int, pointer: str) -> list[list[float]]:
    if not isinstance(value, list) or len(value) != rows:
        raise SchemaError(f"expected {rows} rows", pointer)
    return [_as_real_list(row, cols, f"{pointer}/{i}") for i, row in enumerate(value)]


def round_to_dict(r: InputTuple) -> dict:
    return {
        "f": r.rewards.tolist(),
        "g": r.general_costs.tolist(),
        "h": r.consumptions.tolist(),
    }


def round_from_dict(d: dict, k: int, m: int, n: int, pointer: str) -> InputTuple:
    _check_keys(d, ("f", "g", "h"), (), pointer)
    f = _as_real_list(d["f"], k, f"{pointer}/f")
    g = _as_matrix(d["g"], m, k, f"{pointer}/g")
    h = _as_matrix(d["h"], n, k, f"{pointer}/h")
    return InputTuple(f, g, h)


def _header_to_dict(instance_like) -> dict:
    return {
        "T": instance_like.budget.horizon,
        "K": instance_like.actions.count,
        "m": instance_like.num_general,
        "n": instance_like.num_resources,
        "void_index": instance_like.actions.void_index,
        "beta": instance_like.budget.per_round_budget.tolist(),
    }


def instance_to_dict(instance: Instance) -> dict:
    d = _header_to_dict(instance)
    d["rounds"] = [round_to_dict(r) for r in instance.rounds]
    return d


HEADER_KEYS = ("T", "K", "m", "n", "void_index", "beta")


def _header_from_dict(d: dict, pointer: str = ""):
    t = _as_int(d["T"], f"{pointer}/T")
    k = _as_int(d["K"], f"{pointer}/K")
    m = _as_int(d["m"], f"{pointer}/m")
    n = _as_int(d["n"], f"{pointer}/n")
    void = _as_int(d["void_index"], f"{pointer}/void_index")
    beta = _as_real_list(d["beta"], n, f"{pointer}/beta")
    try:
        actions = ActionSet(count=k, void_index=void)
        budget = BudgetSpec(horizon=t, per_round_budget=beta)
    except ValueError as exc:
        raise SchemaError(str(exc), pointer) from exc
    return actions, budget, k, m, n


def dict_to_instance(d: dict) -> Instance:
    _check_keys(d, HEADER_KEYS + ("rounds",), (), "")
    actions, budget, k, m, n = _header_from_dict(d)
    rounds_raw = d["rounds"]
    if not isinstance(rounds_raw, list) or len(rounds_raw) != budget.horizon:
        raise SchemaError(f"expected {budget.horizon} rounds", "/rounds")
    rounds = tuple(
        round_from_dict(rd, k, m, n, f"/rounds/{i}") for i, rd in enumerate(rounds_raw)
    )
    return Instance(actions=actions, budget=budget, rounds=rounds)


def parse_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(
            f"parse error at byte offset {exc.pos}: {exc.msg}", ""
        ) from exc


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_hash(obj: Any) -> str:
    """Stable content hash of a JSON-serializable object."""
    digest = hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()
    return f"sha256:{digest}"


def instance_hash(instance: Instance) -> str:
    return content_hash(instance_to_dict(instance))


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"
