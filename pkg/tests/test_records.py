import json

import pytest

from percolab.records import (
    canonical_json,
    export_csv,
    format_float,
    read_jsonl,
    read_samples,
    sidecar_paths,
    validate_record,
    write_jsonl,
    write_meta,
    write_samples,
)


def _record(**over):
    rec = {
        "record_type": "estimate",
        "spec": {"family": "torus-nn", "d": 7, "r": 3},
        "p": 0.0737,
        "lambda": 1.0,
        "seed": 42,
        "replicates": 300,
        "statistic": "chi",
        "value": 12.75,
        "std_error": 0.125,
        "flags": [],
    }
    rec.update(over)
    return rec


def test_float_formatting():
    assert format_float(0.75) == "0.75"
    assert len(format_float(1 / 3).replace("0.", "")) == 17
    assert float(format_float(1 / 3)) == 1 / 3  # 17 significant digits round-trip
    with pytest.raises(ValueError):
        format_float(float("nan"))


def test_canonical_json_deterministic_and_parseable():
    rec = _record()
    text = canonical_json(rec)
    assert text == canonical_json(dict(reversed(list(rec.items()))))
    assert json.loads(text) == rec


def test_validate_record():
    validate_record(_record())
    with pytest.raises(ValueError):
        validate_record(_record(surprise=1))
    with pytest.raises(ValueError):
        validate_record({"record_type": "estimate"})


def test_jsonl_roundtrip_and_byte_identity(tmp_path):
    recs = [_record(), _record(statistic="tail", k=4, value=0.5)]
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_jsonl(recs, str(p1))
    write_jsonl(recs, str(p2))
    assert p1.read_bytes() == p2.read_bytes()
    assert read_jsonl(str(p1)) == recs


def test_csv_export(tmp_path):
    recs = [_record(), _record(statistic="tail", k=4, value=0.5, flags=["a", "b"])]
    jsonl = tmp_path / "r.jsonl"
    write_jsonl(recs, str(jsonl))
    csv_path = tmp_path / "r.csv"
    assert export_csv(str(jsonl), str(csv_path)) == 2
    lines = csv_path.read_text().strip().split("\n")
    assert len(lines) == 3
    assert lines[0].startswith("record_type,family,d,r")
    assert "a;b" in lines[2]


def test_samples_and_meta_sidecars(tmp_path):
    out = tmp_path / "run.jsonl"
    samples_path, meta_path = sidecar_paths(str(out))
    assert samples_path.endswith("run.samples.json")
    assert meta_path.endswith("run.meta.json")
    payload = {"seed": 1, "sizes": [{"V": 8, "statistics": {"cmax": [1, 2, 3]}}]}
    write_samples(payload, samples_path)
    assert read_samples(samples_path) == payload
    write_meta(meta_path, {"note": "x"})
    meta = json.loads((tmp_path / "run.meta.json").read_text())
    assert "written_at" in meta and meta["note"] == "x"
