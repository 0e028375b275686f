"""Analytic vs central-finite-difference gradients for every parameterized layer.

All checks run in float64 with step 1e-5 and require relative error < 1e-4
on at least 5 random small instances per layer.
"""

import numpy as np
import pytest

from eegattn import layers
from eegattn.autodiff import Tensor
from eegattn.layers import (
    AttentionParams, Conv1dParams, DenseParams, HighwayParams, LstmParams,
)

from fdcheck import central_diff, max_rel_err

N_INSTANCES = 5
TOL = 1e-4


def _check(build_loss, arrays, tracked):
    """build_loss(arrays) -> (scalar Tensor, [tracked Tensor objects])."""
    loss, tensors = build_loss(arrays)
    loss.backward()
    for slot, tensor in enumerate(tensors):
        idx = tracked[slot]

        def plain(*work):
            loss2, _ = build_loss(list(work))
            return loss2.item()

        numeric = central_diff(plain, arrays, idx)
        err = max_rel_err(tensor.grad, numeric)
        assert err < TOL, f"operand {idx}: rel err {err:.2e}"


class TestLstm:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_all_params_and_input(self, seed):
        rng = np.random.default_rng(seed)
        T, d, h = 5, 3, 2
        arrays = [
            rng.normal(size=(T, d)),
            rng.normal(size=(d, 4 * h)) * 0.5,
            rng.normal(size=(h, 4 * h)) * 0.5,
            rng.normal(size=4 * h) * 0.1,
        ]

        def build(work):
            x = Tensor(work[0], requires_grad=True, dtype=np.float64)
            params = LstmParams(*[Tensor(w, requires_grad=True, dtype=np.float64)
                                  for w in work[1:]])
            out = layers.lstm_forward(x, params)
            return (out * out).sum(), [x, params.wx, params.wh, params.b]

        _check(build, arrays, [0, 1, 2, 3])


class TestContextAttention:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_weights_and_input(self, seed):
        rng = np.random.default_rng(100 + seed)
        arrays = [rng.normal(size=(4, 3)), rng.normal(size=3)]

        def build(work):
            h = Tensor(work[0], requires_grad=True, dtype=np.float64)
            params = AttentionParams(Tensor(work[1], requires_grad=True,
                                            dtype=np.float64))
            out = layers.attention_context(h, params)
            return (out * out).sum(), [h, params.w]

        _check(build, arrays, [0, 1])


class TestChannelAttention:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_weights_and_input(self, seed):
        rng = np.random.default_rng(200 + seed)
        arrays = [rng.normal(size=(4, 3)), rng.normal(size=3)]

        def build(work):
            h = Tensor(work[0], requires_grad=True, dtype=np.float64)
            params = AttentionParams(Tensor(work[1], requires_grad=True,
                                            dtype=np.float64))
            out = layers.channel_attention(h, params)
            return (out * out).sum(), [h, params.w]

        _check(build, arrays, [0, 1])


class TestConv1d:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_weights_bias_input(self, seed):
        rng = np.random.default_rng(300 + seed)
        T, cin, cout, k = 7, 2, 3, 3
        arrays = [
            rng.normal(size=(T, cin)),
            rng.normal(size=(k, cin, cout)) * 0.5,
            rng.normal(size=cout) * 0.1,
        ]

        def build(work):
            x = Tensor(work[0], requires_grad=True, dtype=np.float64)
            params = Conv1dParams(
                Tensor(work[1], requires_grad=True, dtype=np.float64),
                Tensor(work[2], requires_grad=True, dtype=np.float64))
            out = layers.conv1d(x, params)
            return (out * out).sum(), [x, params.w, params.b]

        _check(build, arrays, [0, 1, 2])


class TestInstanceNorm:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_input(self, seed):
        rng = np.random.default_rng(400 + seed)
        arrays = [rng.normal(size=(6, 3)) * 2.0]

        def build(work):
            x = Tensor(work[0], requires_grad=True, dtype=np.float64)
            out = layers.instance_norm(x)
            return (out * out * out).sum(), [x]

        _check(build, arrays, [0])


class TestPrelu:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_input_and_slope(self, seed):
        rng = np.random.default_rng(500 + seed)
        # keep inputs away from the kink at 0
        x_val = rng.normal(size=(5, 4))
        x_val[np.abs(x_val) < 0.05] += 0.1
        arrays = [x_val, np.array([0.25])]

        def build(work):
            x = Tensor(work[0], requires_grad=True, dtype=np.float64)
            eta = Tensor(work[1], requires_grad=True, dtype=np.float64)
            out = layers.prelu(x, eta)
            return (out * out).sum(), [x, eta]

        _check(build, arrays, [0, 1])

    def test_slope_grad_on_negative_inputs_equals_input(self):
        # with loss = sum(prelu(x)), d loss / d eta = sum of negative inputs
        x_val = np.array([[-1.0, -2.0], [-0.5, -3.0]])
        x = Tensor(x_val, requires_grad=True, dtype=np.float64)
        eta = Tensor(np.array([0.25]), requires_grad=True, dtype=np.float64)
        layers.prelu(x, eta).sum().backward()
        np.testing.assert_allclose(eta.grad, [x_val.sum()], rtol=1e-9)


class TestHighway:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_all_params(self, seed):
        rng = np.random.default_rng(600 + seed)
        T, f = 3, 4
        arrays = [
            rng.normal(size=(T, f)),
            rng.normal(size=(f, f)) * 0.5, rng.normal(size=f) * 0.1,
            rng.normal(size=(f, f)) * 0.5, rng.normal(size=f) * 0.1,
            np.array([0.25]),
        ]

        def build(work):
            x = Tensor(work[0], requires_grad=True, dtype=np.float64)
            t64 = [Tensor(w, requires_grad=True, dtype=np.float64)
                   for w in work[1:]]
            params = HighwayParams(
                transform=DenseParams(t64[0], t64[1]),
                gate=DenseParams(t64[2], t64[3]),
                eta=t64[4])
            out = layers.highway_block(x, params)
            return (out * out).sum(), [x] + t64

        _check(build, arrays, [0, 1, 2, 3, 4, 5])


class TestDense:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_weights_and_bias(self, seed):
        rng = np.random.default_rng(700 + seed)
        arrays = [rng.normal(size=(4, 3)), rng.normal(size=(3, 2)),
                  rng.normal(size=2)]

        def build(work):
            x = Tensor(work[0], requires_grad=True, dtype=np.float64)
            params = DenseParams(
                Tensor(work[1], requires_grad=True, dtype=np.float64),
                Tensor(work[2], requires_grad=True, dtype=np.float64))
            out = layers.dense(x, params)
            return (out * out).sum(), [x, params.w, params.b]

        _check(build, arrays, [0, 1, 2])


class TestSplitTimeAttention:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_input(self, seed):
        rng = np.random.default_rng(800 + seed)
        arrays = [rng.normal(size=(4, 6))]

        def build(work):
            x = Tensor(work[0], requires_grad=True, dtype=np.float64)
            out = layers.split_time_attention(x)
            return (out * out).sum(), [x]

        _check(build, arrays, [0])


class TestMaxpool:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_input(self, seed):
        rng = np.random.default_rng(900 + seed)
        arrays = [rng.normal(size=(6, 3))]

        def build(work):
            x = Tensor(work[0], requires_grad=True, dtype=np.float64)
            out = layers.maxpool1d(x, pool=2)
            return (out * out).sum(), [x]

        _check(build, arrays, [0])


class TestSoftmaxCrossEntropy:
    @pytest.mark.parametrize("seed", range(N_INSTANCES))
    def test_logits(self, seed):
        rng = np.random.default_rng(1000 + seed)
        arrays = [rng.normal(size=4)]
        label = int(rng.integers(0, 4))

        def build(work):
            logits = Tensor(work[0], requires_grad=True, dtype=np.float64)
            return layers.softmax_cross_entropy(logits, label), [logits]

        _check(build, arrays, [0])


class TestKernelEquivalence:
    """The numba kernels must agree with the numpy reference."""

    def test_lstm(self):
        from eegattn.backend import load_kernels
        try:
            knb = load_kernels("numba")
        except ImportError:
            pytest.skip("numba unavailable")
        knp = load_kernels("numpy")
        rng = np.random.default_rng(7)
        T, d, h = 11, 4, 3
        x = rng.normal(size=(T, d))
        wx = rng.normal(size=(d, 4 * h)) * 0.4
        wh = rng.normal(size=(h, 4 * h)) * 0.4
        b = rng.normal(size=4 * h) * 0.1
        h0 = np.zeros(h)
        c0 = np.zeros(h)
        hs_a, gates_a, cs_a = knp.lstm_forward(x, wx, wh, b, h0, c0)
        hs_b, gates_b, cs_b = knb.lstm_forward(x, wx, wh, b, h0, c0)
        np.testing.assert_allclose(hs_a, hs_b, atol=1e-12)
        dhs = rng.normal(size=hs_a.shape)
        grads_a = knp.lstm_backward(dhs, x, wx, wh, hs_a, gates_a, cs_a, h0, c0)
        grads_b = knb.lstm_backward(dhs, x, wx, wh, hs_b, gates_b, cs_b, h0, c0)
        for ga, gb in zip(grads_a, grads_b):
            np.testing.assert_allclose(ga, gb, atol=1e-10)

    def test_conv1d(self):
        from eegattn.backend import load_kernels
        try:
            knb = load_kernels("numba")
        except ImportError:
            pytest.skip("numba unavailable")
        knp = load_kernels("numpy")
        rng = np.random.default_rng(8)
        x = rng.normal(size=(13, 3))
        w = rng.normal(size=(5, 3, 4))
        b = rng.normal(size=4)
        out_a = knp.conv1d_forward(x, w, b)
        out_b = knb.conv1d_forward(x, w, b)
        np.testing.assert_allclose(out_a, out_b, atol=1e-12)
        dout = rng.normal(size=out_a.shape)
        for ga, gb in zip(knp.conv1d_backward(dout, x, w),
                          knb.conv1d_backward(dout, x, w)):
            np.testing.assert_allclose(ga, gb, atol=1e-10)
