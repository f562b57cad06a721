"""JSON and CSV readers/writers.

Every document written here carries ``"schema": SCHEMA_VERSION``.  Readers
accept documents without the field (hand-written fixtures) but reject an
unknown version.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .field import FourierField
from .killing import KillingConstants
from .lattice import DualLattice, ThreeLineConfig, lattice_from_descriptor, lattice_to_descriptor

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def _check_schema(obj: dict):
    if not isinstance(obj, dict):
        raise SchemaError("expected a JSON object")
    v = obj.get("schema", SCHEMA_VERSION)
    if v != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {v!r}")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    raise TypeError(f"cannot serialize {type(v).__name__}")


def write_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, default=_plain)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def envelope(report: dict, inputs=()) -> dict:
    """Attach tool version and input digests to a report."""
    out = {"schema": SCHEMA_VERSION, "tool": "torus-killing", "version": __version__}
    out["inputs"] = {str(p): file_digest(p) for p in inputs}
    out.update(report)
    return out


# -- fields -------------------------------------------------------------------


def _lex_positive(n1: int, n2: int) -> bool:
    return n1 > 0 or (n1 == 0 and n2 > 0)


def field_to_json(f: FourierField) -> dict:
    lat = lattice_to_descriptor(f.dual)
    entries = []
    for (n1, n2), v in f.items():
        if (n1, n2) == (0, 0) or _lex_positive(n1, n2):
            entries.append({"n": [n1, n2], "re": v.real, "im": v.imag})
    return {"schema": SCHEMA_VERSION, "lattice": lat, "coeffs": entries}


def field_from_json(obj: dict) -> FourierField:
    """Read a field file; the parity partners are filled in."""
    _check_schema(obj)
    lat = lattice_from_descriptor(obj["lattice"])
    dual = lat.dual() if isinstance(lat, ThreeLineConfig) else lat
    mapping = {}
    for e in obj["coeffs"]:
        n1, n2 = (int(v) for v in e["n"])
        if not ((n1, n2) == (0, 0) or _lex_positive(n1, n2)):
            raise SchemaError(f"field files list only lexicographically positive indices, got {(n1, n2)}")
        if (n1, n2) in mapping:
            raise SchemaError(f"duplicate index {(n1, n2)}")
        mapping[(n1, n2)] = complex(e.get("re", 0.0), e.get("im", 0.0))
    return FourierField.from_dict(dual, mapping)


def field_lattice(obj: dict) -> DualLattice | ThreeLineConfig:
    return lattice_from_descriptor(obj["lattice"])


def load_field(path) -> FourierField:
    return field_from_json(read_json(path))


def save_field(f: FourierField, path):
    write_json(field_to_json(f), path)


# -- constants ------------------------------------------------------------------


def constants_from_json(obj: dict) -> KillingConstants:
    _check_schema(obj)
    try:
        a = [float(v) for v in obj["a"]]
        c = [float(v) for v in obj["c"]]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"constants need 'a' and 'c' pairs: {exc}") from None
    if len(a) != 2 or len(c) != 2:
        raise SchemaError("constants 'a' and 'c' must be pairs")
    return KillingConstants(a=tuple(a), c=tuple(c))


def constants_to_json(k: KillingConstants) -> dict:
    return {"schema": SCHEMA_VERSION, **k.to_json()}


# -- potential --------------------------------------------------------------------


def potential_to_json(u) -> dict:
    return {"schema": SCHEMA_VERSION, "linear": list(u.linear), "periodic": field_to_json(u.periodic)}


def potential_from_json(obj: dict):
    from .reconstruct import Potential

    _check_schema(obj)
    return Potential(tuple(float(v) for v in obj["linear"]), field_from_json(obj["periodic"]))


# -- trajectories -----------------------------------------------------------------


def write_trajectory_csv(traj, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "vx", "vy"])
        for row in np.column_stack([traj.t, traj.states]):
            w.writerow([repr(float(v)) for v in row])


def read_trajectory_csv(path) -> np.ndarray:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["t", "x", "y", "vx", "vy"]:
        raise SchemaError("trajectory CSV header must be t,x,y,vx,vy")
    return np.array(rows[1:], dtype=float)


# -- sequences -----------------------------------------------------------------------


def sequence_to_json(s) -> dict:
    return {"schema": SCHEMA_VERSION, **s.to_json()}


def sequence_from_json(obj: dict):
    from .trilinear import TripleSequence

    _check_schema(obj)
    return TripleSequence.from_json(obj)


def load_sequence(path):
    return sequence_from_json(read_json(path))
