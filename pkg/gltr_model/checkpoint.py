"""
Binary network checkpoints.

Layout (little-endian): magic ``GLTR``; u32 format version; u32 d, N, w,
alpha, num_identities; u32 variant flags; u32 completed epochs; f64 batch-norm
epsilon and momentum; then every state array in declaration order as a u64
element count followed by that many float64 values.
"""

import logging
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from shared.exceptions import CheckpointError

from .config import ModelConfig
from .network import GltrNetwork

logger = logging.getLogger(__name__)

MAGIC = b"GLTR"
FORMAT_VERSION = 2
_HEADER = struct.Struct("<4s8I2d")
_COUNT = struct.Struct("<Q")

_PYRAMID_CODES = {"dilated": 0, "wide": 1, "pooling": 2}
_PYRAMID_NAMES = {code: name for name, code in _PYRAMID_CODES.items()}


def _encode_flags(config: ModelConfig) -> int:
    flags = 0
    flags |= int(config.use_dtp) << 0
    flags |= int(config.use_tsa) << 1
    flags |= int(config.normalize_mask) << 2
    flags |= int(config.centered_taps) << 3
    flags |= _PYRAMID_CODES[config.pyramid] << 4
    return flags


def _decode_flags(flags: int) -> dict:
    pyramid_code = (flags >> 4) & 0b11
    if pyramid_code not in _PYRAMID_NAMES:
        raise CheckpointError(f"unknown pyramid code {pyramid_code}")
    return {
        "use_dtp": bool(flags & 1),
        "use_tsa": bool(flags >> 1 & 1),
        "normalize_mask": bool(flags >> 2 & 1),
        "centered_taps": bool(flags >> 3 & 1),
        "pyramid": _PYRAMID_NAMES[pyramid_code],
    }


def encode_checkpoint(net: GltrNetwork, epoch: int = 0) -> bytes:
    """Serialize a network and its completed-epoch counter."""
    cfg = net.config
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, cfg.frame_dim, cfg.num_branches, cfg.kernel_width,
                          cfg.alpha, cfg.num_identities, _encode_flags(cfg), epoch,
                          cfg.bn_eps, cfg.bn_momentum)]
    for _, array in net.named_state():
        parts.append(_COUNT.pack(array.size))
        parts.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_checkpoint(blob: bytes, source: str = "<bytes>") -> Tuple[GltrNetwork, int]:
    """
    Rebuild a network from ``encode_checkpoint`` output.

    Returns:
        Tuple of (network, completed epochs)

    Raises:
        CheckpointError: On bad magic, unsupported version or truncation
    """
    if len(blob) < _HEADER.size:
        raise CheckpointError("checkpoint is shorter than its header", file_path=source)
    magic, version, d, n, w, alpha, num_ids, flags, epoch, bn_eps, bn_momentum = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}", file_path=source)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}", file_path=source)

    try:
        config = ModelConfig(frame_dim=d, num_branches=n, kernel_width=w, alpha=alpha,
                             num_identities=num_ids, bn_eps=bn_eps, bn_momentum=bn_momentum,
                             **_decode_flags(flags))
    except ValueError as e:
        raise CheckpointError(f"checkpoint header describes an invalid model: {e}", file_path=source)
    net = GltrNetwork.build(config)

    offset = _HEADER.size
    for slot in net.state_slots():
        if offset + _COUNT.size > len(blob):
            raise CheckpointError("checkpoint is truncated", file_path=source, group=slot.name)
        (count,) = _COUNT.unpack_from(blob, offset)
        offset += _COUNT.size
        expected = slot.get()
        if count != expected.size:
            raise CheckpointError(f"expected {expected.size} values, found {count}",
                                  file_path=source, group=slot.name)
        end = offset + 8 * count
        if end > len(blob):
            raise CheckpointError("checkpoint is truncated", file_path=source, group=slot.name)
        values = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        slot.set(values.astype(np.float64).reshape(expected.shape))
        offset = end
    if offset != len(blob):
        raise CheckpointError(f"{len(blob) - offset} trailing bytes after the last group", file_path=source)
    return net, epoch


def save_checkpoint(net: GltrNetwork, path: Union[str, Path], epoch: int = 0) -> Path:
    """Write a checkpoint file and return its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(net, epoch))
    logger.info(f"Checkpoint written to {path} (epoch {epoch})")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[GltrNetwork, int]:
    """Read a checkpoint file."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError("checkpoint file not found", file_path=str(path))
    return decode_checkpoint(path.read_bytes(), source=str(path))
