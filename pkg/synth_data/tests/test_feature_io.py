"""
Tests for the binary feature-file reader and writer.
"""

import struct

import numpy as np
import pytest

from shared.exceptions import FeatureFileError, ShapeMismatchError
from synth_data import SequenceRecord, decode_features, encode_features, read_features, write_features


def random_records(count, d=4, seed=0):
    rng = np.random.default_rng(seed)
    return [
        SequenceRecord(person_id=int(rng.integers(0, 2 ** 32)), camera_id=int(rng.integers(0, 8)),
                       features=rng.normal(size=(d, int(rng.integers(1, 20)))))
        for _ in range(count)
    ]


class TestEncodeFeatures:
    """Test cases for encode_features."""

    def test_empty_file_is_header_only(self, tmp_path):
        """Test that an empty record list writes a 12-byte header."""
        path = write_features(tmp_path / "empty.glfv", [], frame_dim=4)
        assert path.stat().st_size == 12
        assert path.read_bytes() == b"GLFV" + struct.pack("<II", 1, 4)
        assert read_features(path) == []

    def test_single_record_layout(self):
        """Test header, record ids and frame-major payload of a d=4, T=2 record."""
        features = np.arange(8, dtype=np.float64).reshape(4, 2)
        blob = encode_features([SequenceRecord(person_id=7, camera_id=2, features=features)])
        assert len(blob) == 12 + 12 + 4 * 2 * 8
        assert struct.unpack_from("<III", blob, 12) == (7, 2, 2)
        payload = np.frombuffer(blob, dtype="<f8", offset=24)
        np.testing.assert_array_equal(payload, [0.0, 2.0, 4.0, 6.0, 1.0, 3.0, 5.0, 7.0])

    def test_empty_list_needs_frame_dim(self):
        """Test that d cannot be inferred from no records."""
        with pytest.raises(ShapeMismatchError):
            encode_features([])

    def test_mixed_dimensions_rejected(self):
        """Test that every record must share the header d."""
        records = random_records(2, d=4) + random_records(1, d=3)
        with pytest.raises(ShapeMismatchError):
            encode_features(records)


class TestDecodeFeatures:
    """Test cases for decode_features and read_features."""

    def test_round_trip_is_bitwise(self, tmp_path):
        """Test that 100 random records survive a write and read unchanged."""
        records = random_records(100)
        restored = read_features(write_features(tmp_path / "f.glfv", records), expected_dim=4)
        assert len(restored) == 100
        for ours, theirs in zip(restored, records):
            assert (ours.person_id, ours.camera_id) == (theirs.person_id, theirs.camera_id)
            assert ours.features.tobytes() == theirs.features.tobytes()

    def test_bad_magic(self):
        """Test that a foreign file is rejected at offset 0."""
        blob = b"XXXX" + encode_features(random_records(1))[4:]
        with pytest.raises(FeatureFileError, match="magic") as info:
            decode_features(blob)
        assert info.value.byte_offset == 0

    def test_bad_version(self):
        """Test that an unknown format version is rejected."""
        blob = bytearray(encode_features(random_records(1)))
        struct.pack_into("<I", blob, 4, 2)
        with pytest.raises(FeatureFileError, match="version"):
            decode_features(bytes(blob))

    def test_dimension_mismatch(self):
        """Test that a file of another d is rejected when d is expected."""
        with pytest.raises(FeatureFileError, match="does not match"):
            decode_features(encode_features(random_records(1, d=4)), expected_dim=5)

    def test_zero_dimension(self):
        """Test that a header with d=0 is rejected."""
        with pytest.raises(FeatureFileError):
            decode_features(struct.pack("<4sII", b"GLFV", 1, 0))

    @pytest.mark.parametrize("cut", [1, 8, 30])
    def test_truncated(self, cut):
        """Test that a file cut short anywhere past the header is rejected."""
        blob = encode_features(random_records(3))
        with pytest.raises(FeatureFileError, match="truncated"):
            decode_features(blob[:-cut], source="cut.glfv")

    def test_short_header(self):
        """Test that fewer than 12 bytes are rejected."""
        with pytest.raises(FeatureFileError):
            decode_features(b"GLFV")

    def test_zero_frame_record(self):
        """Test that a record with T=0 is rejected."""
        blob = struct.pack("<4sII", b"GLFV", 1, 4) + struct.pack("<III", 1, 1, 0)
        with pytest.raises(FeatureFileError, match="zero frames"):
            decode_features(blob)

    def test_missing_file(self, tmp_path):
        """Test that a missing path raises a feature-file error."""
        with pytest.raises(FeatureFileError, match="not found"):
            read_features(tmp_path / "absent.glfv")
