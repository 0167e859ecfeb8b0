"""
Tests for SGD updates and the epoch loop.
"""

import numpy as np
import pytest

from gltr_model import (
    GltrNetwork,
    GradientTape,
    ModelConfig,
    batch_loss,
    forward_backward_batch,
    load_checkpoint,
    save_checkpoint,
)
from shared.exceptions import DegenerateDatasetError, InvalidParameterError
from synth_data import BenchmarkConfig, generate_benchmark
from synth_data.core.models import SequenceRecord
from tensor_core import Mode
from trainer import LOG_COLUMNS, TrainConfig, TrainingLog, sgd_step, train


class Interrupted(Exception):
    """Raised from an epoch callback to stop training early."""


def toy_dataset(num_ids=3, per_id=4, d=4, length=10, seed=0):
    """Tracklets whose identity sets the frame mean."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=2.0, size=(num_ids, d))
    return [
        SequenceRecord(person_id=10 + p, camera_id=1 + k % 2,
                       features=centers[p][:, None] + rng.normal(scale=0.3, size=(d, length)))
        for p in range(num_ids) for k in range(per_id)
    ]


def toy_net(num_ids=3, **overrides):
    params = dict(frame_dim=4, num_branches=2, num_identities=num_ids, init_seed=1)
    params.update(overrides)
    return GltrNetwork.build(ModelConfig(**params))


def toy_cfg(**overrides):
    params = dict(clip_length=6, batch_size=4, lr_initial=0.05, total_epochs=3, lr_decay_epoch=2, seed=2)
    params.update(overrides)
    return TrainConfig(**params)


class TestSgdStep:
    """Test cases for sgd_step."""

    def test_plain_step(self):
        """Test θ ← θ − lr·g in place."""
        params = {"w": np.array([1.0, 2.0])}
        live = params["w"]
        sgd_step(params, {"w": np.array([0.5, -1.0])}, lr=0.1)
        np.testing.assert_allclose(live, [0.95, 2.1])

    def test_weight_decay(self):
        """Test that weight decay adds λ·θ to the gradient."""
        params = {"w": np.array([2.0])}
        sgd_step(params, {"w": np.array([0.0])}, lr=0.5, weight_decay=0.1)
        np.testing.assert_allclose(params["w"], [1.9])

    def test_momentum(self):
        """Test two momentum steps with a constant gradient."""
        params = {"w": np.array([0.0])}
        velocity = {}
        grads = {"w": np.array([1.0])}
        sgd_step(params, grads, lr=0.1, momentum=0.9, velocity=velocity)
        sgd_step(params, grads, lr=0.1, momentum=0.9, velocity=velocity)
        np.testing.assert_allclose(params["w"], [-0.1 - 0.19])
        np.testing.assert_allclose(velocity["w"], [1.9])

    def test_momentum_needs_buffer(self):
        """Test that momentum without a velocity dictionary is rejected."""
        with pytest.raises(InvalidParameterError):
            sgd_step({"w": np.zeros(1)}, {"w": np.ones(1)}, lr=0.1, momentum=0.5)

    def test_small_step_decreases_loss(self):
        """Test that a 1e-6 step along the analytic gradient lowers the batch loss."""
        net = toy_net()
        rng = np.random.default_rng(3)
        clips = [rng.normal(size=(4, 6)) for _ in range(4)]
        labels = [0, 1, 2, 1]
        tape = GradientTape()
        before = forward_backward_batch(clips, labels, net, tape, Mode.TRAINING)
        sgd_step(net.parameters(), tape.grads, lr=1e-6)
        after = batch_loss(clips, labels, net, Mode.TRAINING)
        assert after < before


class TestTrain:
    """Test cases for the epoch loop."""

    def test_log_entries(self):
        """Test one entry per epoch with the scheduled learning rate."""
        log = train(toy_dataset(), toy_net(), toy_cfg())
        assert [e.epoch for e in log.entries] == [0, 1, 2]
        assert [e.lr for e in log.entries] == pytest.approx([0.05, 0.05, 0.005])
        assert log.label_map == {10: 0, 11: 1, 12: 2}
        for entry in log.entries:
            assert entry.mean_loss >= 0.0
            assert 0.0 <= entry.train_accuracy <= 1.0

    def test_deterministic(self):
        """Test that two runs with the same seeds give bitwise-identical networks and logs."""
        a, b = toy_net(), toy_net()
        log_a = train(toy_dataset(), a, toy_cfg())
        log_b = train(toy_dataset(), b, toy_cfg())
        assert log_a == log_b
        for (_, x), (_, y) in zip(a.named_state(), b.named_state()):
            np.testing.assert_array_equal(x, y)

    def test_seed_changes_run(self):
        """Test that another sampling seed gives another trajectory."""
        a, b = toy_net(), toy_net()
        train(toy_dataset(), a, toy_cfg())
        train(toy_dataset(), b, toy_cfg(seed=3))
        assert not np.array_equal(a.classifier.weight, b.classifier.weight)

    def test_loss_falls_on_separable_identities(self):
        """Test that the baseline classifier learns well-separated identities."""
        net = toy_net(use_dtp=False, use_tsa=False)
        log = train(toy_dataset(), net, toy_cfg(lr_initial=0.1, total_epochs=30, lr_decay_epoch=29))
        assert log.entries[-1].mean_loss < log.entries[0].mean_loss
        assert log.entries[-1].train_accuracy == 1.0

    def test_separable_benchmark_reaches_high_accuracy(self):
        """Test that 20 distinct synthetic identities train to at least 95% accuracy in 200 epochs."""
        bench = generate_benchmark(BenchmarkConfig(lookalike_fraction=0.0), seed=0)
        net = GltrNetwork.build(ModelConfig(frame_dim=16, num_identities=20, init_seed=0))
        log = train(bench.train, net, TrainConfig(total_epochs=200))
        assert len(log.entries) == 200
        assert log.entries[-1].train_accuracy >= 0.95
        assert log.entries[-1].mean_loss < log.entries[0].mean_loss

    def test_single_identity(self):
        """Test that a one-identity task has zero loss and perfect accuracy."""
        dataset = [r for r in toy_dataset() if r.person_id == 10]
        log = train(dataset, toy_net(num_ids=1), toy_cfg())
        assert all(e.mean_loss == 0.0 and e.train_accuracy == 1.0 for e in log.entries)

    def test_short_tracklets(self):
        """Test that tracklets shorter than the clip are padded and trained on."""
        log = train(toy_dataset(length=3), toy_net(), toy_cfg())
        assert len(log.entries) == 3

    def test_empty_dataset(self):
        """Test that an empty training set is rejected."""
        with pytest.raises(DegenerateDatasetError):
            train([], toy_net(), toy_cfg())

    def test_classifier_wider_than_dataset(self):
        """Test that identities without tracklets are rejected."""
        with pytest.raises(DegenerateDatasetError):
            train(toy_dataset(), toy_net(num_ids=5), toy_cfg())

    def test_classifier_narrower_than_dataset(self):
        """Test that more identities than classifier outputs is rejected."""
        with pytest.raises(InvalidParameterError):
            train(toy_dataset(), toy_net(num_ids=2), toy_cfg())

    def test_frame_dim_mismatch(self):
        """Test that tracklets of the wrong width are rejected."""
        with pytest.raises(InvalidParameterError):
            train(toy_dataset(d=6), toy_net(), toy_cfg())

    def test_writes_checkpoint_and_log(self, tmp_path):
        """Test the final checkpoint epoch and the CSV columns."""
        net = toy_net()
        train(toy_dataset(), net, toy_cfg(), checkpoint_path=tmp_path / "net.gltr", log_path=tmp_path / "log.csv")
        restored, epoch = load_checkpoint(tmp_path / "net.gltr")
        assert epoch == 3
        np.testing.assert_array_equal(restored.classifier.weight, net.classifier.weight)
        header = (tmp_path / "log.csv").read_text().splitlines()[0]
        assert header.split(",") == LOG_COLUMNS
        assert len(TrainingLog.read_csv(tmp_path / "log.csv").entries) == 3

    def test_resume_matches_uninterrupted(self, tmp_path):
        """Test that stopping after two epochs and resuming gives the same network and log."""
        full = toy_net()
        full_log = train(toy_dataset(), full, toy_cfg())

        partial = toy_net()
        seen = []
        checkpoint = tmp_path / "net.gltr"
        log_path = tmp_path / "log.csv"

        def stop_after_two(entry):
            seen.append(entry)
            if entry.epoch == 1:
                save_checkpoint(partial, checkpoint, epoch=2)
                TrainingLog(entries=seen).write_csv(log_path)
                raise Interrupted()

        with pytest.raises(Interrupted):
            train(toy_dataset(), partial, toy_cfg(), on_epoch=stop_after_two)

        resumed, start = load_checkpoint(checkpoint)
        resumed_log = train(toy_dataset(), resumed, toy_cfg(), log_path=log_path, start_epoch=start)

        for (name, x), (_, y) in zip(full.named_state(), resumed.named_state()):
            np.testing.assert_array_equal(x, y, err_msg=name)
        assert [e.epoch for e in resumed_log.entries] == [0, 1, 2]
        assert resumed_log.entries[2] == full_log.entries[2]
        for ours, theirs in zip(resumed_log.entries, full_log.entries):
            assert ours.mean_loss == pytest.approx(theirs.mean_loss, rel=1e-15)

    def test_invalid_start_epoch(self):
        """Test that a start epoch past the end is rejected."""
        with pytest.raises(InvalidParameterError):
            train(toy_dataset(), toy_net(), toy_cfg(), start_epoch=4)
