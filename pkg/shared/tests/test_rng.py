"""
Tests for deterministic random streams and logging setup.
"""

import logging

import numpy as np
import pytest

from shared import rng
from shared.logging_utils import configure_logging


class TestStream:
    """Test cases for rng.stream."""

    def test_same_path_same_values(self):
        """Test that a stream is reproducible."""
        a = rng.stream(7, rng.EPOCH, 3).normal(size=5)
        b = rng.stream(7, rng.EPOCH, 3).normal(size=5)
        np.testing.assert_array_equal(a, b)

    def test_paths_are_independent(self):
        """Test that seed, purpose and index all change the stream."""
        base = rng.stream(7, rng.EPOCH, 3).integers(0, 2 ** 63, size=4)
        for other in (rng.stream(8, rng.EPOCH, 3), rng.stream(7, rng.INIT, 3), rng.stream(7, rng.EPOCH, 4)):
            assert not np.array_equal(base, other.integers(0, 2 ** 63, size=4))

    def test_order_of_consumption_irrelevant(self):
        """Test that drawing from one stream does not shift another."""
        first = rng.stream(1, rng.TRACKLET, 0)
        first.normal(size=100)
        late = rng.stream(1, rng.TRACKLET, 1).normal(size=3)
        np.testing.assert_array_equal(late, rng.stream(1, rng.TRACKLET, 1).normal(size=3))

    def test_uses_philox(self):
        """Test the counter-based bit generator."""
        assert isinstance(rng.stream(0).bit_generator, np.random.Philox)

    def test_large_seed(self):
        """Test that a full 64-bit seed is accepted."""
        rng.stream(2 ** 64 - 1, rng.BENCHMARK).random()

    def test_negative_seed(self):
        """Test that a negative seed is rejected."""
        with pytest.raises(ValueError):
            rng.stream(-1)


class TestConfigureLogging:
    """Test cases for configure_logging."""

    def test_replaces_handlers_and_writes_file(self, tmp_path):
        """Test a single console handler plus the optional file copy."""
        root = logging.getLogger()
        saved = list(root.handlers), root.level
        try:
            configure_logging("DEBUG", log_file=tmp_path / "logs" / "run.log")
            configure_logging("WARNING", log_file=tmp_path / "logs" / "run.log")
            assert len(root.handlers) == 2
            assert root.level == logging.WARNING
            logging.getLogger("gltr.test").warning("written")
            for handler in root.handlers:
                handler.flush()
            assert "WARNING gltr.test: written" in (tmp_path / "logs" / "run.log").read_text()
        finally:
            for handler in list(root.handlers):
                root.removeHandler(handler)
                handler.close()
            for handler in saved[0]:
                root.addHandler(handler)
            root.setLevel(saved[1])
