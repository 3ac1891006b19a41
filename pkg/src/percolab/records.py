"""Deterministic JSONL persistence for sweep records.

Records are flat dicts following one schema:

    {record_type, spec, p, lambda, seed, replicates, statistic,
     k?, rank?, value, std_error, flags[]}

Serialization is canonical: keys sorted, floats rendered with 17 significant
digits, no whitespace variation.  Re-running the same plan and seed
therefore produces byte-identical files.  Wall-clock metadata never enters
the records; it goes to a separate ``.meta.json`` sidecar.
"""

from __future__ import annotations

import csv
import json
import math
import os
from datetime import datetime, timezone


def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite float {x} in record; use None instead")
    return format(x, ".17g")


def canonical_json(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, dict):
        inner = ",".join(
            f"{json.dumps(str(k))}:{canonical_json(v)}" for k, v in sorted(obj.items())
        )
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return canonical_json(obj.item())
    if hasattr(obj, "tolist"):  # numpy array
        return canonical_json(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj)!r}")


_SCHEMA_KEYS = {
    "record_type",
    "spec",
    "p",
    "lambda",
    "seed",
    "replicates",
    "statistic",
    "k",
    "rank",
    "value",
    "std_error",
    "flags",
}


def validate_record(record: dict) -> dict:
    unknown = set(record) - _SCHEMA_KEYS
    if unknown:
        raise ValueError(f"record carries unknown keys: {sorted(unknown)}")
    for key in ("record_type", "spec", "statistic", "value", "flags"):
        if key not in record:
            raise ValueError(f"record missing required key {key!r}")
    return record


def write_jsonl(records, path: str) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(canonical_json(validate_record(record)))
            fh.write("\n")


def append_jsonl(records, path: str) -> None:
    with open(path, "a") as fh:
        for record in records:
            fh.write(canonical_json(validate_record(record)))
            fh.write("\n")


def read_jsonl(path: str) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def write_samples(payload: dict, path: str) -> None:
    """Replicate-level values, keyed by size and statistic (for refits)."""
    with open(path, "w") as fh:
        fh.write(canonical_json(payload))


def read_samples(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_meta(path: str, extra: dict | None = None) -> None:
    """Timestamp sidecar; the only place wall-clock data is recorded."""
    meta = {"written_at": datetime.now(timezone.utc).isoformat()}
    if extra:
        meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sidecar_paths(output_path: str) -> tuple[str, str]:
    """(samples, meta) paths derived from a records path."""
    base, _ = os.path.splitext(output_path)
    return base + ".samples.json", base + ".meta.json"


_CSV_COLUMNS = [
    "record_type",
    "family",
    "d",
    "r",
    "L",
    "n",
    "p",
    "lambda",
    "seed",
    "replicates",
    "statistic",
    "k",
    "rank",
    "value",
    "std_error",
    "flags",
]


def export_csv(jsonl_path: str, csv_path: str) -> int:
    """Flatten a records file to CSV; returns the number of rows written."""
    records = read_jsonl(jsonl_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_COLUMNS)
        writer.writeheader()
        for record in records:
            row = {key: record.get(key, "") for key in _CSV_COLUMNS if key in record}
            spec = record.get("spec") or {}
            for key in ("family", "d", "r", "L", "n"):
                if key in spec:
                    row[key] = spec[key]
            row["flags"] = ";".join(record.get("flags", []))
            writer.writerow(row)
    return len(records)
