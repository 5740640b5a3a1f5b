"""Binary container for trained models.

Layout: magic "LIDM", one version byte, a little-endian uint32 header
length, a JSON header, the raw tensor bytes in manifest order, and a
trailing CRC-32 of everything before it. The header carries the
architecture tag, labels, the feature-space description, and a tensor
manifest (name, dtype, shape). No timestamps or host details: the same
model must serialize to the same bytes everywhere.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .. import MODEL_FORMAT_VERSION
from ..features import HashedSpace, SelectedVocab
from ..quant import QuantizedTensor
from .embed import EmbeddingClassifier
from .linear import LinearModel
from .mlp import MLPModel
from .nb import NaiveBayesModel

MAGIC = b"LIDM"

_DTYPES = {"<f8": np.dtype("<f8"), "<f4": np.dtype("<f4"), "|u1": np.dtype("|u1")}


class ModelFormatError(ValueError):
    """Raised when a model file is malformed, truncated, or corrupted."""


def _space_to_json(space) -> dict:
    if isinstance(space, SelectedVocab):
        return {"kind": "selected", "n": space.n, "k": space.k, "lines": space.to_lines()}
    if isinstance(space, HashedSpace):
        return {
            "kind": "hashed",
            "bins": space.bins,
            "n_range": list(space.n_range),
            "hash_id": space.hash_id,
        }
    raise TypeError(f"unsupported feature space: {type(space).__name__}")


def _space_from_json(obj: dict):
    if obj["kind"] == "selected":
        return SelectedVocab.from_lines(obj["lines"], n=obj["n"], k=obj["k"])
    if obj["kind"] == "hashed":
        return HashedSpace(
            bins=obj["bins"], n_range=tuple(obj["n_range"]), hash_id=obj["hash_id"]
        )
    raise ModelFormatError(f"unknown feature space kind: {obj['kind']!r}")


def _quant_tensors(prefix: str, qt: QuantizedTensor) -> list[tuple[str, np.ndarray]]:
    return [
        (f"{prefix}_scales", qt.scales),
        (f"{prefix}_offsets", qt.offsets),
        (f"{prefix}_codes", qt.codes),
    ]


def _disassemble(model) -> tuple[dict, list[tuple[str, np.ndarray]]]:
    """Split a model into (header dict, ordered named tensors)."""
    meta = {"labels": model.labels, "config_digest": model.config_digest}
    space = None
    if isinstance(model, NaiveBayesModel):
        meta["alpha"] = model.alpha
        space = _space_to_json(model.feature_space)
        tensors = [
            ("log_priors", model.log_priors),
            ("log_likelihoods", model.log_likelihoods),
        ]
    elif isinstance(model, LinearModel):
        space = _space_to_json(model.feature_space)
        tensors = [("weights", model.weights), ("bias", model.bias)]
    elif isinstance(model, MLPModel):
        space = _space_to_json(model.feature_space)
        tensors = []
        for i, (w, b) in enumerate(zip(model.weights, model.biases)):
            tensors.append((f"w{i}", w))
            tensors.append((f"b{i}", b))
    elif isinstance(model, EmbeddingClassifier):
        meta.update(
            dim=model.dim,
            n_range=list(model.n_range),
            buckets=model.buckets,
            min_count=model.min_count,
            neg_samples=model.neg_samples,
            quantized=model.quantized,
        )
        vocab_lines = "".join(
            f"{gram}\t{count}\n" for gram, count in sorted(model.vocab.items())
        )
        space = {"kind": "ngram_vocab", "lines": vocab_lines}
        if model.quantized:
            tensors = _quant_tensors("input", model.input_embeddings)
            tensors += _quant_tensors("label", model.label_embeddings)
        else:
            tensors = [
                ("input_embeddings", model.input_embeddings),
                ("label_embeddings", model.label_embeddings),
            ]
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")

    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "arch": model.arch,
        "meta": meta,
        "feature_space": space,
    }
    return header, tensors


def save_model(model, path: str | Path) -> None:
    header, tensors = _disassemble(model)
    manifest = []
    blobs = []
    for name, arr in tensors:
        tag = arr.dtype.str
        if tag not in _DTYPES:
            raise TypeError(f"tensor {name} has unsupported dtype {arr.dtype}")
        data = np.ascontiguousarray(arr, dtype=_DTYPES[tag]).tobytes()
        manifest.append({"name": name, "dtype": tag, "shape": list(arr.shape)})
        blobs.append(data)
    header["tensors"] = manifest

    header_bytes = json.dumps(
        header, sort_keys=True, ensure_ascii=False, separators=(",", ":")
    ).encode("utf-8")
    body = MAGIC + struct.pack("<BI", MODEL_FORMAT_VERSION, len(header_bytes))
    body += header_bytes + b"".join(blobs)
    body += struct.pack("<I", zlib.crc32(body))
    Path(path).write_bytes(body)


def _read_header(raw: bytes) -> tuple[dict, int]:
    if len(raw) < len(MAGIC) + 5 + 4:
        raise ModelFormatError("file too short to be a model container")
    if raw[: len(MAGIC)] != MAGIC:
        raise ModelFormatError("bad magic: not a model container")
    version, header_len = struct.unpack_from("<BI", raw, len(MAGIC))
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported container version {version}")
    start = len(MAGIC) + 5
    end = start + header_len
    if end > len(raw) - 4:
        raise ModelFormatError("header length exceeds file size")
    try:
        header = json.loads(raw[start:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"header is not valid JSON: {exc}") from exc
    return header, end


def load_model(path: str | Path):
    raw = Path(path).read_bytes()
    header, offset = _read_header(raw)

    (stored_crc,) = struct.unpack_from("<I", raw, len(raw) - 4)
    if zlib.crc32(raw[:-4]) != stored_crc:
        raise ModelFormatError("checksum mismatch: file is corrupted")

    tensors = {}
    for entry in header["tensors"]:
        dtype = _DTYPES.get(entry["dtype"])
        if dtype is None:
            raise ModelFormatError(f"unknown tensor dtype {entry['dtype']!r}")
        shape = tuple(entry["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
        if offset + nbytes > len(raw) - 4:
            raise ModelFormatError(f"tensor {entry['name']!r} is truncated")
        arr = np.frombuffer(raw, dtype=dtype, count=int(np.prod(shape, dtype=np.int64)), offset=offset)
        tensors[entry["name"]] = arr.reshape(shape).copy()
        offset += nbytes
    if offset != len(raw) - 4:
        raise ModelFormatError("trailing bytes after tensor data")

    return _assemble(header, tensors)


def _assemble(header: dict, tensors: dict[str, np.ndarray]):
    arch = header.get("arch")
    meta = header["meta"]
    labels = list(meta["labels"])
    digest = meta.get("config_digest", "")

    def need(name: str) -> np.ndarray:
        try:
            return tensors[name]
        except KeyError:
            raise ModelFormatError(f"missing tensor {name!r}") from None

    if arch == "nb":
        return NaiveBayesModel(
            labels=labels,
            log_priors=need("log_priors"),
            log_likelihoods=need("log_likelihoods"),
            alpha=meta["alpha"],
            feature_space=_space_from_json(header["feature_space"]),
            config_digest=digest,
        )
    if arch == "linear":
        return LinearModel(
            labels=labels,
            weights=need("weights"),
            bias=need("bias"),
            feature_space=_space_from_json(header["feature_space"]),
            config_digest=digest,
        )
    if arch == "mlp":
        weights, biases = [], []
        for i in range(sum(1 for n in tensors if n.startswith("w"))):
            weights.append(need(f"w{i}"))
            biases.append(need(f"b{i}"))
        if not weights:
            raise ModelFormatError("network container holds no layers")
        return MLPModel(
            labels=labels,
            weights=weights,
            biases=biases,
            feature_space=_space_from_json(header["feature_space"]),
            config_digest=digest,
        )
    if arch == "embed":
        vocab: dict[str, int] = {}
        lines = header["feature_space"]["lines"]
        for line in lines.splitlines():
            gram, _, count = line.partition("\t")
            vocab[gram] = int(count)
        if meta["quantized"]:
            input_emb = QuantizedTensor(
                scales=need("input_scales"),
                offsets=need("input_offsets"),
                codes=need("input_codes"),
            )
            label_emb = QuantizedTensor(
                scales=need("label_scales"),
                offsets=need("label_offsets"),
                codes=need("label_codes"),
            )
        else:
            input_emb = need("input_embeddings")
            label_emb = need("label_embeddings")
        return EmbeddingClassifier(
            labels=labels,
            dim=meta["dim"],
            n_range=tuple(meta["n_range"]),
            buckets=meta["buckets"],
            min_count=meta["min_count"],
            neg_samples=meta["neg_samples"],
            vocab=vocab,
            input_embeddings=input_emb,
            label_embeddings=label_emb,
            config_digest=digest,
        )
    raise ModelFormatError(f"unknown architecture tag {arch!r}")
