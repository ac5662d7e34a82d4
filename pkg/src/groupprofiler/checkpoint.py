"""Single-file binary checkpoint container shared by all four model kinds.

Layout: magic "PRFM", u16 format version, u32 header length, UTF-8 JSON
header (kind, schema, fingerprint, hyperparameters, blob manifest), then the
parameter blobs as raw little-endian float64 in manifest order.
"""
from __future__ import annotations

import hashlib
import json
import struct
from typing import Optional

import numpy as np

from .baselines import MostFrequentValueProfiler, NaiveBayesProfiler
from .errors import (
    CheckpointFormatError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    SchemaMismatchError,
)
from .models import AutoencoderProfiler, EmbeddingProfiler
from .neural import FacetEmbeddings, FacetNetwork
from .store import FacetSchema

MAGIC = b"PRFM"
FORMAT_VERSION = 1

KIND_AE = "ae"
KIND_EMB = "emb"
KIND_NB = "nb"
KIND_MFV = "mfv"


def _collect_blobs(model) -> tuple[str, dict[str, np.ndarray]]:
    if isinstance(model, AutoencoderProfiler):
        return KIND_AE, {**model.net_.params, **model.embeddings_.tables}
    if isinstance(model, EmbeddingProfiler):
        return KIND_EMB, dict(model.net_.params)
    if isinstance(model, NaiveBayesProfiler):
        return KIND_NB, {"train_cells": model.train_cells_.astype(np.float64)}
    if isinstance(model, MostFrequentValueProfiler):
        blobs = {}
        for i, dist in enumerate(model.distributions_):
            blobs[f"dist{i}"] = np.zeros(0) if dist is None else dist
        return KIND_MFV, blobs
    raise TypeError(f"cannot checkpoint {type(model).__name__}")


def save_checkpoint(model, path, best_dev_loss: Optional[float] = None,
                    epoch: Optional[int] = None) -> None:
    model._check_fitted()
    kind, blobs = _collect_blobs(model)
    logbook = getattr(model, "training_log_", None)
    if logbook is not None:
        best_dev_loss = best_dev_loss if best_dev_loss is not None else logbook.best_dev_loss
        epoch = epoch if epoch is not None else logbook.best_epoch
    header = {
        "kind": kind,
        "schema": model.schema_.to_json(),
        "schema_fingerprint": model.schema_.fingerprint(),
        "config": _jsonable(model.get_params()),
        "best_dev_loss": best_dev_loss,
        "epoch": epoch,
        "manifest": [{"name": k, "shape": list(v.shape)} for k, v in blobs.items()],
    }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HL", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        for _, arr in blobs.items():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _jsonable(params: dict) -> dict:
    return {k: (v.item() if isinstance(v, np.generic) else v) for k, v in params.items()}


def load_checkpoint(path, expect_schema: Optional[FacetSchema] = None):
    """Rebuild a fitted profiler from a checkpoint file."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise CheckpointFormatError(f"bad magic bytes {magic!r}")
        head = fh.read(6)
        if len(head) < 6:
            raise CheckpointTruncatedError("file ends inside the fixed header")
        version, header_len = struct.unpack("<HL", head)
        if version != FORMAT_VERSION:
            raise CheckpointVersionError(f"unsupported checkpoint version {version}")
        raw = fh.read(header_len)
        if len(raw) < header_len:
            raise CheckpointTruncatedError("file ends inside the JSON header")
        try:
            header = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointFormatError(f"unreadable header: {exc}") from exc
        schema = FacetSchema.from_json(header["schema"])
        if schema.fingerprint() != header["schema_fingerprint"]:
            raise SchemaMismatchError("embedded schema does not match its fingerprint")
        if expect_schema is not None and expect_schema.fingerprint() != header["schema_fingerprint"]:
            raise SchemaMismatchError(
                "checkpoint was trained against a different schema"
            )
        blobs = {}
        for entry in header["manifest"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(8 * count)
            if len(raw) < 8 * count:
                raise CheckpointTruncatedError(f"blob {entry['name']!r} is incomplete")
            blobs[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return _rebuild(header, schema, blobs)


def _rebuild(header: dict, schema: FacetSchema, blobs: dict[str, np.ndarray]):
    kind = header["kind"]
    config = header["config"]
    vocab_sizes = [f.size for f in schema]
    if kind == KIND_MFV:
        model = MostFrequentValueProfiler()
        model.schema_ = schema
        model.distributions_ = [
            None if blobs[f"dist{i}"].size == 0 else blobs[f"dist{i}"]
            for i in range(len(schema))
        ]
        return model
    if kind == KIND_NB:
        model = NaiveBayesProfiler(**config)
        model.schema_ = schema
        model.train_cells_ = blobs["train_cells"].astype(np.int64)
        model._cond_cache = {}
        return model
    if kind == KIND_AE:
        model = AutoencoderProfiler(**config)
        model.schema_ = schema
        model.embeddings_ = FacetEmbeddings(vocab_sizes, model.embedding_size)
        model.net_ = FacetNetwork(
            model.embeddings_.input_dim, model.hidden_units, vocab_sizes
        )
        for name in model.embeddings_.tables:
            model.embeddings_.tables[name] = blobs[name]
        for name in model.net_.params:
            model.net_.params[name] = blobs[name]
        return model
    if kind == KIND_EMB:
        model = EmbeddingProfiler(**config)
        model.schema_ = schema
        model.net_ = FacetNetwork(model.input_dim, model.hidden_units, vocab_sizes)
        for name in model.net_.params:
            model.net_.params[name] = blobs[name]
        return model
    raise CheckpointFormatError(f"unknown model kind {kind!r}")


def checkpoint_file_hash(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
