"""JSON/CSV file formats: PTM models, topologies, parameter files, traces, manifests."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from ._validation import ValidationError
from .noise import NoiseParams
from .optim import HPOConfig
from .ptm import SparsePTM, TopologyGraph

PTM_FORMAT = "ptm-delta-coo-v1"
TRACE_HEADER = ("epoch", "stage", "mse", "lr")


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None


def _write_json(path, data):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def ptm_to_dict(ptm, meta=None):
    data = {"format": PTM_FORMAT, "n": ptm.n, "entries": [[i, j, v] for i, j, v in ptm.entries]}
    if meta:
        data["meta"] = meta
    return data


def ptm_from_dict(data, source="model"):
    if not isinstance(data, dict) or data.get("format") != PTM_FORMAT:
        raise ValidationError(f"{source}: field 'format' must be {PTM_FORMAT!r}")
    n = data.get("n")
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValidationError(f"{source}: field 'n' must be an integer")
    entries = data.get("entries")
    if not isinstance(entries, list) or any(
        not isinstance(e, list) or len(e) != 3 or any(isinstance(x, bool) for x in e) for e in entries
    ):
        raise ValidationError(f"{source}: field 'entries' must be a list of [i, j, value] triples")
    if any(not isinstance(e[0], int) or not isinstance(e[1], int) for e in entries):
        raise ValidationError(f"{source}: entry coordinates must be integers")
    try:
        return SparsePTM.from_entries(n, entries)
    except ValidationError as exc:
        raise ValidationError(f"{source}: {exc}") from None


def save_ptm(path, ptm, meta=None):
    _write_json(path, ptm_to_dict(ptm, meta))


def load_ptm(path):
    return ptm_from_dict(_read_json(path), str(path))


def load_topology(path):
    data = _read_json(path)
    if not isinstance(data, dict) or "n" not in data or "edges" not in data:
        raise ValidationError(f"{path}: topology needs fields 'n' and 'edges'")
    try:
        return TopologyGraph(data["n"], tuple(tuple(e) for e in data["edges"]))
    except (ValidationError, TypeError) as exc:
        raise ValidationError(f"{path}: field 'edges'/'n': {exc}") from None


def topology_to_dict(graph):
    return {"n": graph.n, "edges": [list(e) for e in graph.edges]}


def _load_dataclass(path, cls):
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    try:
        return cls.from_dict(data)
    except TypeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def load_noise_params(path):
    return _load_dataclass(path, NoiseParams)


def load_config(path):
    return _load_dataclass(path, HPOConfig)


def trace_csv(traces):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for trace in traces:
        for epoch, stage, mse, lr in trace.rows():
            writer.writerow([epoch, stage, repr(mse), repr(lr)])
    return buf.getvalue()


def save_trace(path, traces):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(trace_csv(traces))


def read_trace(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_HEADER:
            raise ValidationError(f"{path}: trace header must be {','.join(TRACE_HEADER)}")
        return [
            {"epoch": int(r["epoch"]), "stage": r["stage"], "mse": float(r["mse"]), "lr": float(r["lr"])}
            for r in reader
        ]
