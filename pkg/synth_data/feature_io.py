"""
Binary frame-feature files.

Layout (little-endian): magic ``GLFV``, u32 version, u32 d; then for every
record u32 person_id, u32 camera_id, u32 T followed by T·d f64 values,
frame-major (frame 0's d values first).
"""

import logging
import struct
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from shared.exceptions import FeatureFileError, ShapeMismatchError

from .core.models import SequenceRecord

logger = logging.getLogger(__name__)

MAGIC = b"GLFV"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sII")
_RECORD = struct.Struct("<III")


def encode_features(records: Sequence[SequenceRecord], frame_dim: Optional[int] = None) -> bytes:
    """
    Serialize records into the feature-file layout.

    Args:
        records: Records sharing one frame dimension
        frame_dim: Header d; required when ``records`` is empty

    Returns:
        File contents
    """
    if frame_dim is None:
        if not records:
            raise ShapeMismatchError("frame_dim is required for an empty record list",
                                     operation="encode_features")
        frame_dim = records[0].frame_dim
    chunks = [_HEADER.pack(MAGIC, FORMAT_VERSION, frame_dim)]
    for index, record in enumerate(records):
        if record.frame_dim != frame_dim:
            raise ShapeMismatchError(f"record {index} has d={record.frame_dim}",
                                     expected=frame_dim, actual=record.frame_dim,
                                     operation="encode_features")
        chunks.append(_RECORD.pack(record.person_id, record.camera_id, record.length))
        chunks.append(np.ascontiguousarray(record.features.T, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_features(blob: bytes, source: str = "<memory>",
                    expected_dim: Optional[int] = None) -> List[SequenceRecord]:
    """
    Parse feature-file contents.

    Args:
        blob: File contents
        source: Name used in error messages
        expected_dim: Reject files whose header d differs

    Returns:
        Records in file order

    Raises:
        FeatureFileError: Bad magic/version, truncation or d mismatch
    """
    if len(blob) < _HEADER.size:
        raise FeatureFileError("file is shorter than its header", file_path=source, byte_offset=0)
    magic, version, frame_dim = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FeatureFileError(f"bad magic {magic!r}", file_path=source, byte_offset=0)
    if version != FORMAT_VERSION:
        raise FeatureFileError(f"unsupported version {version}", file_path=source, byte_offset=4)
    if expected_dim is not None and frame_dim != expected_dim:
        raise FeatureFileError(f"frame dimension {frame_dim} does not match expected {expected_dim}",
                               file_path=source, byte_offset=8)
    if frame_dim == 0:
        raise FeatureFileError("frame dimension is zero", file_path=source, byte_offset=8)

    records: List[SequenceRecord] = []
    offset = _HEADER.size
    while offset < len(blob):
        if offset + _RECORD.size > len(blob):
            raise FeatureFileError("truncated record header", file_path=source, byte_offset=offset)
        person_id, camera_id, length = _RECORD.unpack_from(blob, offset)
        offset += _RECORD.size
        payload = length * frame_dim * 8
        if length == 0:
            raise FeatureFileError("record with zero frames", file_path=source, byte_offset=offset)
        if offset + payload > len(blob):
            raise FeatureFileError(f"truncated payload: need {payload} bytes, have {len(blob) - offset}",
                                   file_path=source, byte_offset=offset)
        frames = np.frombuffer(blob, dtype="<f8", count=length * frame_dim, offset=offset)
        offset += payload
        features = frames.reshape(length, frame_dim).T.astype(np.float64)
        records.append(SequenceRecord(person_id=person_id, camera_id=camera_id, features=features))
    return records


def write_features(path: Union[str, Path], records: Sequence[SequenceRecord],
                   frame_dim: Optional[int] = None) -> Path:
    """Write records to ``path`` and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_features(records, frame_dim))
    logger.info(f"Wrote {len(records)} sequences to {path}")
    return path


def read_features(path: Union[str, Path], expected_dim: Optional[int] = None) -> List[SequenceRecord]:
    """Read every record of a feature file."""
    path = Path(path)
    if not path.exists():
        raise FeatureFileError("feature file not found", file_path=str(path))
    records = decode_features(path.read_bytes(), str(path), expected_dim)
    logger.debug(f"Read {len(records)} sequences from {path}")
    return records
