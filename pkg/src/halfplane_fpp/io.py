"""Output files: JSON reports, CSV tables and raw binary grids.

Every file starts with the same header block (tool, version, command, seed
and a git-style hash of the resolved configuration).  Nothing time- or
host-dependent is written, and the worker count and output directory are
left out of the configuration, so a rerun with the same seed reproduces every
byte.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

TOOL = "halfplane-fpp"
NOT_CONFIG = ("workers", "out", "config", "emit_config")


def jsonable(obj):
    """Plain JSON data; non-finite floats become the strings "inf", "-inf" and "nan"."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, str):
        return obj
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = list(obj)
        if isinstance(obj, (set, frozenset)):
            items = sorted(items)
        return [jsonable(v) for v in items]
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj):
        return jsonable(dataclasses.asdict(obj))
    if obj is None:
        return None
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_jsonable(x):
    if x == "inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    if x == "nan":
        return math.nan
    return x


def canonical(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"))


def resolved_config(config: dict) -> dict:
    return {k: v for k, v in sorted(config.items()) if k not in NOT_CONFIG}


def config_hash(config: dict) -> str:
    """SHA-1 of the canonical config, framed like a git blob."""
    body = canonical(resolved_config(config)).encode()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


def header(command: str, seed, config: dict) -> dict:
    return {"tool": TOOL, "version": __version__, "command": command, "seed": seed,
            "config_hash": config_hash(config)}


def dumps(header_block: dict, payload: dict) -> str:
    doc = {"header": header_block, **payload}
    return json.dumps(jsonable(doc), sort_keys=True, indent=2) + "\n"


def write_json(path, header_block: dict, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(header_block, payload))
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def _cell(v) -> str:
    v = jsonable(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return " ".join(map(str, v))
    return "" if v is None else str(v)


def write_csv(path, header_block: dict, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = _io.StringIO()
    for k in ("tool", "version", "command", "seed", "config_hash"):
        buf.write(f"# {k}={header_block[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        cells = [row[c] for c in columns] if isinstance(row, dict) else row
        w.writerow([_cell(v) for v in cells])
    path.write_text(buf.getvalue())
    return path


def read_csv(path) -> tuple[dict, list[dict]]:
    """Header key/values and the data rows as dicts of strings."""
    head, body = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition("=")
            head[k] = v
        else:
            body.append(line)
    return head, list(csv.DictReader(body))


def write_grid(stem, header_block: dict, arrays: dict) -> tuple[Path, Path]:
    """``stem.bin`` holds the arrays back to back (little-endian, C order); ``stem.json`` indexes them."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    entries, offset = [], 0
    with open(stem.with_suffix(".bin"), "wb") as fh:
        for name, arr in arrays.items():
            a = np.ascontiguousarray(arr)
            a = a.astype(a.dtype.newbyteorder("<"), copy=False)
            fh.write(a.tobytes())
            entries.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape),
                            "offset": offset, "nbytes": a.nbytes})
            offset += a.nbytes
    write_json(stem.with_suffix(".json"), header_block, {"arrays": entries,
                                                        "file": stem.with_suffix(".bin").name})
    return stem.with_suffix(".bin"), stem.with_suffix(".json")


def read_grid(stem) -> dict:
    stem = Path(stem)
    meta = read_json(stem.with_suffix(".json"))
    raw = stem.with_suffix(".bin").read_bytes()
    out = {}
    for e in meta["arrays"]:
        a = np.frombuffer(raw, dtype=np.dtype(e["dtype"]), count=int(np.prod(e["shape"])),
                          offset=e["offset"])
        out[e["name"]] = a.reshape(e["shape"])
    return out


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def format_config(config: dict) -> str:
    lines = []
    for k, v in resolved_config(config).items():
        if v is None:
            continue
        v = jsonable(v)
        if isinstance(v, list):
            v = ",".join(map(str, v))
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"
