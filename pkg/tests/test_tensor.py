"""Tensor core: forward ops, reverse-mode gradients, Adam."""

import numpy as np
import pytest

from eegattn.autodiff import Tensor, concatenate, matmul, softmax
from eegattn.errors import ContractError, ShapeError
from eegattn.optim import Adam

from fdcheck import central_diff, max_rel_err


class TestMatmul:
    def test_identity(self):
        a = np.array([[2.0, -1.0], [0.5, 3.0]])
        out = matmul(Tensor(np.eye(2)), Tensor(a))
        np.testing.assert_allclose(out.data, a, rtol=1e-6)

    def test_hand_case(self):
        # [[1,2],[3,4]] x [[1],[1]] = [[3],[7]]
        a = Tensor([[1.0, 2.0], [3.0, 4.0]])
        b = Tensor([[1.0], [1.0]])
        np.testing.assert_allclose(matmul(a, b).data, [[3.0], [7.0]])

    def test_inner_dim_mismatch(self):
        with pytest.raises(ShapeError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 2))))

    def test_gradient_vs_finite_differences(self):
        rng = np.random.default_rng(0)
        a_val = rng.normal(size=(3, 4))
        b_val = rng.normal(size=(4, 2))

        def f(a, b):
            return float((a @ b).sum())

        a = Tensor(a_val, requires_grad=True, dtype=np.float64)
        b = Tensor(b_val, requires_grad=True, dtype=np.float64)
        matmul(a, b).sum().backward()

        assert max_rel_err(a.grad, central_diff(f, [a_val, b_val], 0)) < 1e-4
        assert max_rel_err(b.grad, central_diff(f, [a_val, b_val], 1)) < 1e-4


class TestSoftmax:
    def test_uniform(self):
        out = softmax(Tensor([0.0, 0.0, 0.0, 0.0]), axis=0)
        np.testing.assert_allclose(out.data, [0.25] * 4, atol=1e-7)

    def test_direct_evaluation(self):
        out = softmax(Tensor([0.0, np.log(2.0)]), axis=0)
        np.testing.assert_allclose(out.data, [1 / 3, 2 / 3], atol=1e-6)

    def test_slices_sum_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = Tensor(rng.normal(scale=5.0, size=(4, 6)))
            for axis in (0, 1):
                s = softmax(x, axis=axis).data.sum(axis=axis)
                np.testing.assert_allclose(s, 1.0, atol=1e-6)

    def test_shift_invariance(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(5, 3))
        base = softmax(Tensor(x), axis=1).data
        shifted = softmax(Tensor(x + 7.5), axis=1).data
        np.testing.assert_allclose(base, shifted, atol=1e-6)

    def test_empty_axis_rejected(self):
        with pytest.raises(ShapeError):
            softmax(Tensor(np.ones((3, 0))), axis=1)

    def test_finite_on_large_inputs(self):
        out = softmax(Tensor([1e4, -1e4, 0.0]), axis=0)
        assert np.all(np.isfinite(out.data))


class TestBackward:
    def test_square(self):
        x = Tensor(3.0, requires_grad=True)
        (x * x).backward()
        np.testing.assert_allclose(x.grad, 6.0)

    def test_constant_root_gives_zero_grads(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        (x * 0.0).sum().backward()
        np.testing.assert_allclose(x.grad, [0.0, 0.0])

    def test_non_scalar_root_rejected(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ContractError):
            (x * x).backward()

    def test_untracked_root_rejected(self):
        with pytest.raises(ContractError):
            Tensor(5.0).backward()

    def test_shared_subexpression_accumulates(self):
        # y = x*x + x: dy/dx = 2x + 1
        x = Tensor([2.0], requires_grad=True)
        y = (x * x + x).sum()
        y.backward()
        np.testing.assert_allclose(x.grad, [5.0])

    def test_add_aliasing_is_safe(self):
        # two consumers of b, one of them a pure pass-through add
        a = Tensor([1.0, 1.0], requires_grad=True)
        b = Tensor([2.0, 2.0], requires_grad=True)
        loss = ((a + b) + (b * 3.0)).sum()
        loss.backward()
        np.testing.assert_allclose(a.grad, [1.0, 1.0])
        np.testing.assert_allclose(b.grad, [4.0, 4.0])

    def test_composite_chain_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        a_val = rng.normal(size=(3, 3))
        b_val = rng.normal(size=(3, 2))

        def f(a, b):
            prod = a @ b
            shifted = prod - prod.max(axis=0, keepdims=True)
            e = np.exp(shifted)
            sm = e / e.sum(axis=0, keepdims=True)
            return float(sm.sum() + (sm * prod).sum())

        a = Tensor(a_val, requires_grad=True, dtype=np.float64)
        b = Tensor(b_val, requires_grad=True, dtype=np.float64)
        prod = matmul(a, b)
        sm = softmax(prod, axis=0)
        (sm.sum() + (sm * prod).sum()).backward()

        assert max_rel_err(a.grad, central_diff(f, [a_val, b_val], 0)) < 1e-4
        assert max_rel_err(b.grad, central_diff(f, [a_val, b_val], 1)) < 1e-4


class TestElementwiseGradients:
    CASES = {
        "add": (lambda t: (t + t * 2.0).sum(), lambda a: float((a + a * 2.0).sum())),
        "sub": (lambda t: (t - t * 0.5).sum(), lambda a: float((a - a * 0.5).sum())),
        "mul": (lambda t: (t * t).sum(), lambda a: float((a * a).sum())),
        "div": (lambda t: (1.0 / (t * t + 2.0)).sum(),
                lambda a: float((1.0 / (a * a + 2.0)).sum())),
        "exp": (lambda t: t.exp().sum(), lambda a: float(np.exp(a).sum())),
        "tanh": (lambda t: t.tanh().sum(), lambda a: float(np.tanh(a).sum())),
        "sigmoid": (lambda t: t.sigmoid().sum(),
                    lambda a: float((1 / (1 + np.exp(-a))).sum())),
        "sqrt": (lambda t: (t * t + 1.0).sqrt().sum(),
                 lambda a: float(np.sqrt(a * a + 1.0).sum())),
        "log": (lambda t: (t * t + 1.5).log().sum(),
                lambda a: float(np.log(a * a + 1.5).sum())),
        "mean": (lambda t: (t.mean(axis=0) * 3.0).sum(),
                 lambda a: float((a.mean(axis=0) * 3.0).sum())),
        "variance": (lambda t: t.variance(axis=0).sum(),
                     lambda a: float(a.var(axis=0).sum())),
        "transpose": (lambda t: (t.T * t.T).sum(), lambda a: float((a.T * a.T).sum())),
        "slice": (lambda t: (t[1:, :2] * 2.0).sum(),
                  lambda a: float((a[1:, :2] * 2.0).sum())),
        "reshape": (lambda t: (t.reshape(-1) * t.reshape(-1)).sum(),
                    lambda a: float((a.reshape(-1) ** 2).sum())),
        "broadcast_row": (lambda t: (t + t.mean(axis=0, keepdims=True)).sum(),
                          lambda a: float((a + a.mean(axis=0, keepdims=True)).sum())),
    }

    @pytest.mark.parametrize("name", sorted(CASES))
    def test_matches_finite_differences(self, name):
        graph_fn, plain_fn = self.CASES[name]
        rng = np.random.default_rng(hash(name) % 2 ** 31)
        for trial in range(3):
            x_val = rng.normal(size=(4, 3)) * 0.8
            x = Tensor(x_val, requires_grad=True, dtype=np.float64)
            graph_fn(x).backward()
            numeric = central_diff(lambda a: plain_fn(a), [x_val], 0)
            assert max_rel_err(x.grad, numeric) < 1e-4, f"{name} trial {trial}"


class TestConcatenate:
    def test_forward_and_gradient(self):
        rng = np.random.default_rng(4)
        a_val = rng.normal(size=(2, 3))
        b_val = rng.normal(size=(2, 2))
        a = Tensor(a_val, requires_grad=True, dtype=np.float64)
        b = Tensor(b_val, requires_grad=True, dtype=np.float64)
        out = concatenate([a, b], axis=1)
        assert out.shape == (2, 5)
        (out * out).sum().backward()
        np.testing.assert_allclose(a.grad, 2 * a_val, rtol=1e-6)
        np.testing.assert_allclose(b.grad, 2 * b_val, rtol=1e-6)


class TestFiniteness:
    def test_forward_ops_stay_finite(self):
        rng = np.random.default_rng(5)
        x = Tensor(rng.normal(scale=3.0, size=(8, 4)).astype(np.float32))
        outs = [
            (x * x).data, (x + 2.0).data, x.tanh().data, x.sigmoid().data,
            softmax(x, axis=1).data, x.variance(axis=0).data,
        ]
        for o in outs:
            assert np.all(np.isfinite(o))


class TestAdam:
    def test_zero_gradient_leaves_params_unchanged(self):
        p = Tensor(np.array([1.0, -2.0], dtype=np.float32), requires_grad=True)
        before = p.data.copy()
        opt = Adam([p], lr=0.001)
        p.grad = np.zeros_like(p.data)
        opt.step()
        np.testing.assert_array_equal(p.data, before)

    def test_first_step_hand_computed(self):
        # g=1: m_hat = 1, v_hat = 1 -> delta = lr / (1 + eps)
        lr, eps = 0.001, 1e-8
        p = Tensor(np.array([0.5], dtype=np.float64), requires_grad=True)
        opt = Adam([p], lr=lr, eps=eps)
        p.grad = np.ones_like(p.data)
        opt.step()
        expected = 0.5 - lr * 1.0 / (np.sqrt(1.0) + eps)
        assert abs(p.data[0] - expected) < 1e-5
        assert opt.t == 1

    def test_missing_gradient_rejected(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        opt = Adam([p])
        with pytest.raises(ContractError):
            opt.step()

    def test_converges_on_quadratic(self):
        # minimize (w - 2)^2 from w = 0
        w = Tensor(np.array([0.0], dtype=np.float64), requires_grad=True)
        opt = Adam([w], lr=0.001)
        for _ in range(5000):
            opt.zero_grad()
            loss = ((w - 2.0) * (w - 2.0)).sum()
            loss.backward()
            opt.step()
            if abs(w.data[0] - 2.0) < 0.05:
                break
        assert abs(w.data[0] - 2.0) < 0.05

    def test_invalid_lr(self):
        from eegattn.errors import ConfigError
        with pytest.raises(ConfigError):
            Adam([Tensor([1.0], requires_grad=True)], lr=0.0)


class TestDeterminism:
    def test_forward_repeatable(self):
        rng = np.random.default_rng(6)
        x_val = rng.normal(size=(5, 5)).astype(np.float32)
        r1 = softmax(matmul(Tensor(x_val), Tensor(x_val)), axis=1).data
        r2 = softmax(matmul(Tensor(x_val), Tensor(x_val)), axis=1).data
        np.testing.assert_array_equal(r1, r2)
