"""Deterministic JSON/CSV serialization and the MDP file format.

Floats are written with 17 significant digits so that identical inputs give
byte-identical files and every value round-trips exactly. Non-finite floats
are written as ``null`` in JSON and as ``nan``/``inf``/``-inf`` in CSV.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .mdp import MdpValidationError, TabularMdp

SCHEMA_VERSION = 1
FLOAT_FORMAT = ".17g"


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    out = format(x, FLOAT_FORMAT)
    if out == "-0":
        return "0"
    return out


def to_plain(obj: Any) -> Any:
    """Recursively convert numpy containers, enums and tuples to JSON types."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(k) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    return _encode(to_plain(obj), indent, 0) + "\n"


def write_json(path, obj: Any) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def read_json(path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _cell(v) -> str:
    if isinstance(v, enum.Enum):
        return str(v.value)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows), encoding="utf-8")
    return path


def read_csv(path) -> tuple:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def gamma_header(K: int) -> list:
    return [f"gamma_{k + 1}" for k in range(K)]


# -- MDP files ------------------------------------------------------------------


def mdp_to_dict(mdp: TabularMdp) -> dict:
    out = {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "transitions": mdp.transitions,
        "reward": mdp.reward,
        "rho0": mdp.rho0,
        "features": mdp.features,
        "temperature": mdp.temperature,
    }
    if mdp.absorbing.any():
        out["absorbing"] = [int(s) for s in np.flatnonzero(mdp.absorbing)]
    return to_plain(out)


_MDP_KEYS = {"n_states", "n_actions", "transitions", "reward", "rho0", "features", "temperature", "absorbing", "name"}


def mdp_from_dict(d: dict) -> TabularMdp:
    """Parse and validate an MDP document.

    Non-stochastic transition rows are reported with their ``(a, s)`` index.
    """
    if not isinstance(d, dict):
        raise MdpValidationError("MDP document must be a JSON object")
    unknown = sorted(set(d) - _MDP_KEYS)
    if unknown:
        raise MdpValidationError(f"unknown MDP keys: {', '.join(unknown)}")
    for key in ("n_states", "n_actions", "transitions", "reward", "rho0"):
        if key not in d:
            raise MdpValidationError(f"missing required key {key!r}")
    n, m = int(d["n_states"]), int(d["n_actions"])
    T = np.asarray(d["transitions"], dtype=float)
    if T.shape != (m, n, n):
        raise MdpValidationError(f"transitions must have shape ({m}, {n}, {n}), got {T.shape}")
    absorbing = None
    if d.get("absorbing") is not None:
        absorbing = np.zeros(n, dtype=bool)
        absorbing[np.asarray(d["absorbing"], dtype=int)] = True
    return TabularMdp(
        transitions=T,
        reward=d["reward"],
        rho0=d["rho0"],
        features=d.get("features"),
        temperature=float(d.get("temperature", 1.0)),
        absorbing=absorbing,
        name=str(d.get("name", "mdp")),
    )


def save_mdp(path, mdp: TabularMdp) -> Path:
    return write_json(path, mdp_to_dict(mdp))


def load_mdp(path) -> TabularMdp:
    return mdp_from_dict(read_json(path))
