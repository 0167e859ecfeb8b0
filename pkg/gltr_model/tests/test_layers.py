"""
Tests for the temporal pyramid and attention layers.
"""

import numpy as np
import pytest

from shared.exceptions import InvalidParameterError, ShapeMismatchError
from tensor_core import DepthwiseKernel, Mode, depthwise_dilated_conv
from gltr_model import DtpLayer, TsaLayer, bin_average, dtp_backward, dtp_forward, tsa_forward, tsa_forward_batch


def random_tsa(channels, alpha=2, seed=0, scale=0.3):
    """Attention layer with a non-zero output projection."""
    rng = np.random.default_rng(seed)
    layer = TsaLayer.build(channels, alpha, rng)
    layer.out_proj.weight = rng.uniform(-scale, scale, size=layer.out_proj.weight.shape)
    layer.out_proj.bias = rng.uniform(-scale, scale, size=layer.out_proj.bias.shape)
    return layer


class TestDtpLayer:
    """Test cases for DtpLayer construction and forward pass."""

    def test_dilations_and_output_shape(self):
        """Test that N=3 uses dilations 1, 2, 4 and stacks to 3d rows."""
        layer = DtpLayer.build(4, 3, 3, np.random.default_rng(0))
        assert layer.dilations == [1, 2, 4]
        out = dtp_forward(np.random.default_rng(1).normal(size=(4, 10)), layer)
        assert out.shape == (12, 10)
        assert layer.output_channels == 12

    def test_single_branch_is_plain_convolution(self):
        """Test that N=1 equals one width-3 dilation-1 convolution bitwise."""
        layer = DtpLayer.build(5, 1, 3, np.random.default_rng(2))
        f = np.random.default_rng(3).normal(size=(5, 9))
        np.testing.assert_array_equal(dtp_forward(f, layer),
                                      depthwise_dilated_conv(f, layer.branches[0], 1))

    def test_identity_taps_replicate_input(self):
        """Test that center-only taps stack N copies of the input."""
        d, n = 3, 4
        layer = DtpLayer([DepthwiseKernel.identity(d) for _ in range(n)], [1, 2, 4, 8], d)
        f = np.random.default_rng(4).normal(size=(d, 7))
        np.testing.assert_array_equal(dtp_forward(f, layer), np.tile(f, (n, 1)))

    def test_branch_rows_hold_branch_outputs(self):
        """Test that rows [n·d, (n+1)·d) come from branch n."""
        layer = DtpLayer.build(3, 3, 3, np.random.default_rng(5))
        f = np.random.default_rng(6).normal(size=(3, 12))
        out = dtp_forward(f, layer)
        for n, (kernel, rate) in enumerate(zip(layer.branches, layer.dilations)):
            np.testing.assert_array_equal(out[n * 3:(n + 1) * 3], depthwise_dilated_conv(f, kernel, rate))

    @pytest.mark.parametrize("num_branches,width", [(1, 3), (3, 3), (3, 5), (4, 3)])
    def test_receptive_field_bound(self, num_branches, width):
        """Test that a perturbed frame only reaches columns within 2^(N-1)(w-1)/2."""
        layer = DtpLayer.build(2, num_branches, width, np.random.default_rng(7))
        radius = 2 ** (num_branches - 1) * (width - 1) // 2
        assert layer.receptive_radius == radius
        length = 2 * radius + 12
        f = np.random.default_rng(8).normal(size=(2, length))
        base = dtp_forward(f, layer)
        s = length // 2
        g = f.copy()
        g[:, s] += 1.0
        changed = np.any(dtp_forward(g, layer) != base, axis=0)
        columns = np.arange(length)
        assert not changed[np.abs(columns - s) > radius].any()
        assert changed[s]

    def test_wide_variant_matches_dilated_span(self):
        """Test that the wide pyramid uses dilation 1 with the dilated span."""
        layer = DtpLayer.build(2, 3, 3, np.random.default_rng(9), kind="wide")
        assert layer.dilations == [1, 1, 1]
        assert [k.width for k in layer.branches] == [3, 5, 9]
        assert layer.receptive_radius == 4
        assert layer.trainable

    def test_pooling_variant_averages_bins(self):
        """Test that pooling branches average non-overlapping bins and repeat the means."""
        layer = DtpLayer.build(1, 2, 3, np.random.default_rng(10), kind="pooling")
        assert not layer.trainable
        assert [k.width for k in layer.branches] == [3, 5]
        f = np.arange(11, dtype=float).reshape(1, 11)
        out = dtp_forward(f, layer)
        assert out.shape == (2, 11)
        np.testing.assert_allclose(out[0], [1, 1, 1, 4, 4, 4, 7, 7, 7, 9.5, 9.5])
        np.testing.assert_allclose(out[1], [2, 2, 2, 2, 2, 7, 7, 7, 7, 7, 10])
        grads = {}
        dtp_backward(np.ones_like(out), f, layer, grads)
        assert grads == {}

    def test_pooling_variant_discards_fast_motion(self):
        """Test that coarse bins shrink a frame-rate oscillation."""
        layer = DtpLayer.build(1, 2, 3, np.random.default_rng(13), kind="pooling")
        f = np.tile([1.0, -1.0], 10)[np.newaxis, :]
        out = dtp_forward(f, layer)
        assert np.ptp(out[1, :15]) == pytest.approx(0.4)
        assert np.ptp(out[0]) < np.ptp(f)

    def test_pooling_backward_matches_finite_differences(self):
        """Test the input gradient of the pooling pyramid on a ragged length."""
        rng = np.random.default_rng(14)
        layer = DtpLayer.build(2, 3, 3, rng, kind="pooling")
        f = rng.normal(size=(2, 13))
        g = rng.normal(size=(6, 13))
        grad_f = dtp_backward(g, f, layer, {})
        h = 1e-6
        numeric = np.zeros_like(f)
        for idx in np.ndindex(*f.shape):
            plus, minus = f.copy(), f.copy()
            plus[idx] += h
            minus[idx] -= h
            numeric[idx] = (np.sum(g * dtp_forward(plus, layer)) - np.sum(g * dtp_forward(minus, layer))) / (2 * h)
        np.testing.assert_allclose(grad_f, numeric, rtol=1e-6, atol=1e-8)

    def test_bin_average_single_bin(self):
        """Test that a bin longer than the sequence gives the temporal mean everywhere."""
        f = np.array([[1.0, 2.0, 6.0]])
        np.testing.assert_allclose(bin_average(f, 9), [[3.0, 3.0, 3.0]])
        with pytest.raises(InvalidParameterError):
            bin_average(f, 0)

    def test_rejects_irregular_dilations(self):
        """Test that a dilated pyramid must use 1, 2, 4, ..."""
        kernels = [DepthwiseKernel.identity(2), DepthwiseKernel.identity(2)]
        with pytest.raises(InvalidParameterError):
            DtpLayer(kernels, [1, 3], 2)

    def test_rejects_wrong_input_channels(self):
        """Test that a sequence of the wrong width is rejected."""
        layer = DtpLayer.build(4, 2, 3, np.random.default_rng(11))
        with pytest.raises(ShapeMismatchError):
            dtp_forward(np.zeros((3, 5)), layer)

    def test_backward_matches_finite_differences(self):
        """Test the input and tap gradients of a random pyramid."""
        rng = np.random.default_rng(12)
        layer = DtpLayer.build(2, 3, 3, rng)
        f = rng.normal(size=(2, 9))
        g = rng.normal(size=(6, 9))
        grads = {}
        grad_f = dtp_backward(g, f, layer, grads)
        h = 1e-6
        numeric = np.zeros_like(f)
        for idx in np.ndindex(*f.shape):
            plus, minus = f.copy(), f.copy()
            plus[idx] += h
            minus[idx] -= h
            numeric[idx] = (np.sum(g * dtp_forward(plus, layer)) - np.sum(g * dtp_forward(minus, layer))) / (2 * h)
        np.testing.assert_allclose(grad_f, numeric, rtol=1e-6, atol=1e-8)
        taps = layer.branches[2].taps
        numeric_taps = np.zeros_like(taps)
        for idx in np.ndindex(*taps.shape):
            original = taps[idx]
            taps[idx] = original + h
            plus = np.sum(g * dtp_forward(f, layer))
            taps[idx] = original - h
            minus = np.sum(g * dtp_forward(f, layer))
            taps[idx] = original
            numeric_taps[idx] = (plus - minus) / (2 * h)
        np.testing.assert_allclose(grads["dtp.branch2.taps"], numeric_taps, rtol=1e-6, atol=1e-8)


class TestTsaLayer:
    """Test cases for TsaLayer and the attention forward pass."""

    @pytest.mark.parametrize("mode", [Mode.INFERENCE, Mode.TRAINING])
    def test_fresh_layer_is_identity(self, mode):
        """Test that a freshly built layer returns its input bitwise."""
        rng = np.random.default_rng(20)
        for trial in range(20):
            channels = 2 * int(rng.integers(1, 8))
            layer = TsaLayer.build(channels, 2, np.random.default_rng(trial))
            x = rng.normal(scale=3.0, size=(channels, int(rng.integers(1, 15))))
            out, _ = tsa_forward(x, layer, mode)
            np.testing.assert_array_equal(out, x)

    @pytest.mark.parametrize("mode", [Mode.INFERENCE, Mode.TRAINING])
    def test_fresh_layer_keeps_negative_zero(self, mode):
        """Test that a signed zero in the input survives a fresh layer."""
        layer = TsaLayer.build(4, 2, np.random.default_rng(23))
        x = np.random.default_rng(24).normal(size=(4, 6))
        x[0, 0] = -0.0
        x[2, 3] = -0.0
        out, _ = tsa_forward(x, layer, mode)
        assert out.tobytes() == x.tobytes()
        assert np.signbit(out[0, 0])

    def test_reduced_width(self):
        """Test that alpha=2 on a 384-wide input gives 192 reduced channels."""
        layer = TsaLayer.build(384, 2, np.random.default_rng(21))
        assert layer.channels == 384
        assert layer.reduced_channels == 192
        assert layer.proj_f.weight.shape == (192, 384)
        assert layer.out_proj.weight.shape == (384, 192)

    def test_alpha_must_divide_width(self):
        """Test that an alpha not dividing the width is rejected."""
        with pytest.raises(InvalidParameterError):
            TsaLayer.build(9, 2, np.random.default_rng(22))

    def test_mask_shape_and_column_sums(self):
        """Test the T×T mask and that m holds its column sums."""
        layer = random_tsa(12)
        x = np.random.default_rng(23).normal(size=(12, 16))
        out, mask = tsa_forward(x, layer)
        assert out.shape == (12, 16)
        assert mask.m_matrix.shape == (16, 16)
        assert mask.m_vector.shape == (16,)
        np.testing.assert_allclose(mask.m_matrix.sum(axis=0), mask.m_vector, atol=1e-12)

    def test_normalized_mask_rows_sum_to_one(self):
        """Test that softmax-normalized mask rows are distributions."""
        layer = random_tsa(8)
        _, mask = tsa_forward(np.random.default_rng(24).normal(size=(8, 10)), layer)
        np.testing.assert_allclose(mask.m_matrix.sum(axis=1), 1.0, atol=1e-12)
        assert (mask.m_matrix > 0).all()
        np.testing.assert_allclose(mask.m_vector.sum(), 10.0, atol=1e-10)

    def test_unnormalized_mask_is_raw_product(self):
        """Test that disabling normalization keeps the ReLU-feature inner products."""
        layer = random_tsa(8)
        layer.normalize_mask = False
        _, mask = tsa_forward(np.random.default_rng(25).normal(size=(8, 6)), layer)
        assert (mask.m_matrix >= 0).all()
        assert not np.allclose(mask.m_matrix.sum(axis=1), 1.0)

    def test_every_output_column_sees_every_frame(self):
        """Test that perturbing one frame changes all output columns."""
        layer = random_tsa(8, seed=26)
        x = np.random.default_rng(27).normal(size=(8, 7))
        base, _ = tsa_forward(x, layer)
        x[:, 3] += 0.5
        moved, _ = tsa_forward(x, layer)
        assert np.all(np.any(moved != base, axis=0))

    def test_batch_masks_are_per_sequence(self):
        """Test that batched sequences of different length get their own masks."""
        layer = random_tsa(6)
        rng = np.random.default_rng(28)
        outs, masks = tsa_forward_batch([rng.normal(size=(6, 4)), rng.normal(size=(6, 9))], layer)
        assert [o.shape for o in outs] == [(6, 4), (6, 9)]
        assert [m.m_matrix.shape for m in masks] == [(4, 4), (9, 9)]

    def test_training_mode_updates_running_statistics(self):
        """Test that training mode moves the batch-norm running mean."""
        layer = random_tsa(6)
        tsa_forward(np.random.default_rng(29).normal(loc=2.0, size=(6, 8)), layer, Mode.TRAINING)
        assert np.any(layer.bn_b.running_mean != 0.0)
        assert np.any(layer.bn_c.running_var != 1.0)

    def test_rejects_wrong_width(self):
        """Test that an input of the wrong width is rejected."""
        with pytest.raises(ShapeMismatchError):
            tsa_forward(np.zeros((5, 3)), random_tsa(6))
