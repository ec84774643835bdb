"""
Tests for the binary checkpoint format.
"""

import struct

import numpy as np
import pytest

from src.core.checkpoint import MAGIC, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from src.core.errors import CheckpointError
from src.core.params import init_params
from src.models.config import ModelConfig, TrainConfig


@pytest.fixture
def blob(small_model_config):
    return encode_checkpoint(init_params(small_model_config, 3), small_model_config, TrainConfig(epochs=7))


def _rewrite_header(blob, edit):
    import json

    (length,) = struct.unpack_from("<I", blob, len(MAGIC))
    start = len(MAGIC) + 4
    header = json.loads(blob[start:start + length])
    edit(header)
    encoded = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<I", len(encoded)) + encoded + blob[start + length:]


def test_save_and_load(tmp_path, small_model_config):
    params = init_params(small_model_config, 3)
    path = save_checkpoint(tmp_path / "run" / "model.ckpt", params, small_model_config, TrainConfig(epochs=7))
    loaded = load_checkpoint(path)
    assert loaded.model_config == small_model_config
    assert loaded.train_config.epochs == 7
    assert loaded.params.names() == params.names()
    for name, tensor in params.items():
        np.testing.assert_array_equal(loaded.params[name].data, tensor.data)
        assert loaded.params[name].requires_grad


def test_encoding_is_byte_stable(small_model_config, blob):
    assert encode_checkpoint(init_params(small_model_config, 3), small_model_config, TrainConfig(epochs=7)) == blob
    assert blob.startswith(MAGIC)


def test_bad_magic(blob):
    with pytest.raises(CheckpointError, match="magic"):
        decode_checkpoint(b"NOTACKPT\n" + blob[len(MAGIC):])


def test_unknown_version(blob):
    with pytest.raises(CheckpointError, match="version"):
        decode_checkpoint(_rewrite_header(blob, lambda h: h.update(version=2)))


@pytest.mark.parametrize("cut", [len(MAGIC) + 2, len(MAGIC) + 10])
def test_truncated_header(blob, cut):
    with pytest.raises(CheckpointError, match="truncated"):
        decode_checkpoint(blob[:cut])


def test_truncated_payload(blob):
    with pytest.raises(CheckpointError):
        decode_checkpoint(blob[:-8])
    with pytest.raises(CheckpointError):
        decode_checkpoint(blob[:-3])


def test_invalid_model_config(blob):
    with pytest.raises(CheckpointError, match="configuration"):
        decode_checkpoint(_rewrite_header(blob, lambda h: h["model_config"].update(tcn_hidden=0)))


def test_params_must_match_model_config(blob):
    def widen(header):
        header["model_config"]["tcn_hidden"] = 5

    with pytest.raises(CheckpointError):
        decode_checkpoint(_rewrite_header(blob, widen))


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.ckpt")


def test_per_sublayer_norm_roundtrip(tmp_path):
    config = ModelConfig(tcn_hidden=3, gcn_hidden=3, gcn_out=2, tcn_out=2, encoder_hidden=2,
                         decoder_hidden=2, embedding_dim=2, head_hidden=2, per_sublayer_norm=True)
    path = save_checkpoint(tmp_path / "norm.ckpt", init_params(config, 0), config)
    assert "block0.ln_tcn1.gain" in load_checkpoint(path).params
