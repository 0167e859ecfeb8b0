"""
Tests for binary network checkpoints.
"""

import struct

import numpy as np
import pytest

from shared.exceptions import CheckpointError
from tensor_core import Mode
from gltr_model import (
    GltrNetwork,
    ModelConfig,
    decode_checkpoint,
    encode_checkpoint,
    forward_batch,
    gltr_embed,
    load_checkpoint,
    randomize_zero_init,
    save_checkpoint,
)
from gltr_model.checkpoint import MAGIC


@pytest.fixture
def trained_like_net():
    """Network with every state array moved away from its initial value."""
    net = GltrNetwork.build(ModelConfig(frame_dim=4, num_branches=2, num_identities=3, init_seed=7))
    randomize_zero_init(net, np.random.default_rng(1))
    forward_batch([np.random.default_rng(2).normal(size=(4, 6))], net, Mode.TRAINING)
    return net


class TestCheckpointRoundTrip:
    """Test cases for encode_checkpoint and decode_checkpoint."""

    def test_bit_exact(self, trained_like_net):
        """Test that every state array survives bit-exactly."""
        restored, epoch = decode_checkpoint(encode_checkpoint(trained_like_net, epoch=12))
        assert epoch == 12
        for (name_a, a), (name_b, b) in zip(trained_like_net.named_state(), restored.named_state()):
            assert name_a == name_b
            assert a.tobytes() == b.tobytes()

    def test_embeddings_identical_after_reload(self, trained_like_net):
        """Test that a reloaded network embeds bitwise identically."""
        restored, _ = decode_checkpoint(encode_checkpoint(trained_like_net))
        f = np.random.default_rng(3).normal(size=(4, 9))
        np.testing.assert_array_equal(gltr_embed(f, trained_like_net)[0], gltr_embed(f, restored)[0])

    def test_reencoding_is_stable(self, trained_like_net):
        """Test that decode then encode reproduces the same bytes."""
        blob = encode_checkpoint(trained_like_net, epoch=3)
        restored, epoch = decode_checkpoint(blob)
        assert encode_checkpoint(restored, epoch) == blob

    def test_batchnorm_settings_round_trip(self):
        """Test that non-default batch-norm epsilon and momentum survive and keep embeddings equal."""
        config = ModelConfig(frame_dim=4, num_branches=2, num_identities=3, bn_eps=0.5, bn_momentum=0.3)
        net = GltrNetwork.build(config)
        randomize_zero_init(net, np.random.default_rng(4))
        forward_batch([np.random.default_rng(5).normal(size=(4, 6))], net, Mode.TRAINING)
        restored, _ = decode_checkpoint(encode_checkpoint(net))
        assert restored.config.bn_eps == 0.5
        assert restored.config.bn_momentum == 0.3
        assert restored.tsa.bn_b.eps == 0.5
        assert restored.tsa.bn_c.momentum == 0.3
        f = np.random.default_rng(6).normal(size=(4, 8))
        assert gltr_embed(f, restored)[0].tobytes() == gltr_embed(f, net)[0].tobytes()

    @pytest.mark.parametrize("overrides", [
        dict(use_dtp=False, use_tsa=False),
        dict(use_tsa=False),
        dict(use_dtp=False),
        dict(pyramid="wide"),
        dict(pyramid="pooling", normalize_mask=False),
        dict(centered_taps=False),
    ])
    def test_variants_round_trip(self, overrides):
        """Test that variant flags come back with the network."""
        config = ModelConfig(frame_dim=4, num_branches=3, num_identities=2, **overrides)
        restored, _ = decode_checkpoint(encode_checkpoint(GltrNetwork.build(config)))
        for key, value in overrides.items():
            assert getattr(restored.config, key) == value

    def test_header_layout(self, trained_like_net):
        """Test the little-endian header fields."""
        blob = encode_checkpoint(trained_like_net, epoch=5)
        magic, version, d, n, w, alpha, num_ids, _flags, epoch, eps, momentum = struct.unpack_from("<4s8I2d", blob)
        assert magic == MAGIC
        assert (version, d, n, w, alpha, num_ids, epoch) == (2, 4, 2, 3, 2, 3, 5)
        assert (eps, momentum) == (1e-5, 0.1)
        (count,) = struct.unpack_from("<Q", blob, struct.calcsize("<4s8I2d"))
        assert count == 4 * 3


class TestCheckpointErrors:
    """Test cases for malformed checkpoints."""

    def test_bad_magic(self, trained_like_net):
        """Test that a wrong magic is rejected."""
        blob = b"XXXX" + encode_checkpoint(trained_like_net)[4:]
        with pytest.raises(CheckpointError, match="magic"):
            decode_checkpoint(blob)

    def test_bad_version(self, trained_like_net):
        """Test that an unknown format version is rejected."""
        blob = bytearray(encode_checkpoint(trained_like_net))
        struct.pack_into("<I", blob, 4, 99)
        with pytest.raises(CheckpointError, match="version"):
            decode_checkpoint(bytes(blob))

    def test_truncated(self, trained_like_net):
        """Test that a truncated payload names the group it broke in."""
        blob = encode_checkpoint(trained_like_net)
        with pytest.raises(CheckpointError) as excinfo:
            decode_checkpoint(blob[:-3])
        assert excinfo.value.context["group"] == "classifier.bias"

    def test_short_header(self):
        """Test that a blob shorter than the header is rejected."""
        with pytest.raises(CheckpointError):
            decode_checkpoint(b"GLTR")

    def test_trailing_bytes(self, trained_like_net):
        """Test that trailing data is rejected."""
        with pytest.raises(CheckpointError, match="trailing"):
            decode_checkpoint(encode_checkpoint(trained_like_net) + b"\x00")

    def test_missing_file(self, tmp_path):
        """Test that a missing checkpoint file is reported."""
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.gltr")


class TestCheckpointFiles:
    """Test cases for save_checkpoint and load_checkpoint."""

    def test_save_and_load(self, trained_like_net, tmp_path):
        """Test a file round trip including the stored epoch."""
        path = save_checkpoint(trained_like_net, tmp_path / "nested" / "net.gltr", epoch=400)
        restored, epoch = load_checkpoint(path)
        assert epoch == 400
        assert path.read_bytes()[:4] == b"GLTR"
        np.testing.assert_array_equal(restored.classifier.weight, trained_like_net.classifier.weight)
