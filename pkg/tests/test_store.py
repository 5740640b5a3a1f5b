"""Round-trip and corruption tests for the model container format."""

import struct

import numpy as np
import pytest

from lid.features import HashedSpace, select_top_k
from lid.models import (
    ModelFormatError,
    TrainConfig,
    load_model,
    save_model,
    train_embed,
    train_linear,
    train_mlp,
    train_nb,
)
from lid.quant import quantize_tensor


def toy_pairs():
    pairs = []
    for i in range(20):
        pairs.append((f"alpha arena ara{'a' * (i % 2)}", "aaa"))
        pairs.append((f"borb bulb bob{'b' * (i % 2)}", "bbb"))
    return pairs


PROBES = ["alpha ara", "bulb bob", "ara bulb", "xyzzy"]


def roundtrip(tmp_path, model, name="m.bin"):
    path = tmp_path / name
    save_model(model, path)
    return load_model(path), path


def assert_same_predictions(a, b):
    assert a.labels == b.labels
    for text in PROBES:
        assert np.array_equal(a.predict_proba(text), b.predict_proba(text))


def test_nb_round_trip_is_bit_exact(tmp_path):
    model = train_nb(toy_pairs(), HashedSpace(bins=311), alpha=0.5)
    loaded, _ = roundtrip(tmp_path, model)
    assert_same_predictions(model, loaded)
    assert loaded.alpha == 0.5
    assert np.array_equal(model.log_likelihoods, loaded.log_likelihoods)
    assert loaded.log_likelihoods.dtype == np.float64


def test_nb_selected_vocab_round_trip(tmp_path):
    vocab = select_top_k(toy_pairs(), n=2, k=40)
    model = train_nb(toy_pairs(), vocab)
    loaded, _ = roundtrip(tmp_path, model)
    assert loaded.feature_space.entries == vocab.entries
    assert_same_predictions(model, loaded)


def test_linear_round_trip_is_bit_exact(tmp_path):
    model = train_linear(toy_pairs(), HashedSpace(bins=311), TrainConfig(epochs=2, lr=0.5))
    loaded, _ = roundtrip(tmp_path, model)
    assert loaded.weights.dtype == np.float32
    assert_same_predictions(model, loaded)


def test_mlp_round_trip_is_bit_exact(tmp_path):
    model = train_mlp(
        toy_pairs(), HashedSpace(bins=64), TrainConfig(epochs=2, lr=1e-3), hidden=(8, 8)
    )
    loaded, _ = roundtrip(tmp_path, model)
    assert [w.dtype for w in loaded.weights] == [np.float32, np.float32, np.float32]
    assert_same_predictions(model, loaded)


def train_toy_embed(quantize=False):
    model = train_embed(
        toy_pairs(), TrainConfig(epochs=3, lr=0.2, seed=0), dim=8, buckets=1024, neg_samples=1
    )
    if quantize:
        model.input_embeddings = quantize_tensor(model.input_embeddings.astype(np.float64))
        model.label_embeddings = quantize_tensor(model.label_embeddings.astype(np.float64))
    return model


def test_embed_round_trip_is_bit_exact(tmp_path):
    model = train_toy_embed()
    loaded, _ = roundtrip(tmp_path, model)
    assert loaded.vocab == model.vocab
    assert loaded.n_range == model.n_range
    assert_same_predictions(model, loaded)


def test_quantized_embed_round_trip(tmp_path):
    model = train_toy_embed(quantize=True)
    loaded, _ = roundtrip(tmp_path, model)
    assert loaded.quantized
    assert loaded.input_embeddings.codes.dtype == np.uint8
    assert_same_predictions(model, loaded)


def test_save_is_deterministic(tmp_path):
    model = train_nb(toy_pairs(), HashedSpace(bins=311))
    save_model(model, tmp_path / "a.bin")
    save_model(model, tmp_path / "b.bin")
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    loaded = load_model(tmp_path / "a.bin")
    save_model(loaded, tmp_path / "c.bin")
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "c.bin").read_bytes()


def test_flipping_any_region_fails_the_checksum(tmp_path):
    model = train_linear(toy_pairs(), HashedSpace(bins=97), TrainConfig(epochs=1, lr=0.5))
    path = tmp_path / "m.bin"
    save_model(model, path)
    raw = bytearray(path.read_bytes())
    for pos in (len(raw) // 2, len(raw) - 5):  # tensor bytes and near the tail
        broken = bytearray(raw)
        broken[pos] ^= 0xFF
        path.write_bytes(bytes(broken))
        with pytest.raises(ModelFormatError, match="checksum|JSON|truncated|exceeds"):
            load_model(path)


def test_bad_magic_is_rejected(tmp_path):
    path = tmp_path / "m.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(ModelFormatError, match="magic"):
        load_model(path)


def test_unsupported_version_is_rejected(tmp_path):
    model = train_nb(toy_pairs(), HashedSpace(bins=97))
    path = tmp_path / "m.bin"
    save_model(model, path)
    raw = bytearray(path.read_bytes())
    raw[4] = 99
    # keep the checksum honest so the version check is what fires
    raw[-4:] = struct.pack("<I", __import__("zlib").crc32(bytes(raw[:-4])))
    path.write_bytes(bytes(raw))
    with pytest.raises(ModelFormatError, match="version 99"):
        load_model(path)


def test_truncated_file_is_rejected(tmp_path):
    model = train_nb(toy_pairs(), HashedSpace(bins=97))
    path = tmp_path / "m.bin"
    save_model(model, path)
    path.write_bytes(path.read_bytes()[:10])
    with pytest.raises(ModelFormatError):
        load_model(path)
    path.write_bytes(b"LI")
    with pytest.raises(ModelFormatError, match="too short"):
        load_model(path)
