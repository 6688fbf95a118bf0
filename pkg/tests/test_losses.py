"""Loss functions: spectral MSE, cross-entropy, L1, combined objective."""
import numpy as np
import pytest

from specnav.nn import (
    Tensor,
    combined_loss,
    cross_entropy,
    l1_loss,
    mse_loss,
    softmax,
)

from oracles import numerical_gradient


class TestMseLoss:
    def test_zero_at_target(self):
        x = np.arange(5.0)
        assert mse_loss(Tensor(x), x).item() == 0.0

    def test_all_ones_difference(self):
        # (1/n) * n * 1^2 = 1 regardless of band count
        assert mse_loss(Tensor(np.ones(64)), np.zeros(64)).item() == 1.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            mse_loss(Tensor(np.zeros(3)), np.zeros(4))

    def test_gradient_formula(self):
        pred = Tensor([1.0, 3.0, 5.0])
        target = np.array([0.0, 0.0, 0.0])
        mse_loss(pred, target).backward()
        np.testing.assert_allclose(pred.grad, (2.0 / 3.0) * pred.data)

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_vs_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        p0, t0 = rng.normal(size=16), rng.normal(size=16)
        pred = Tensor(p0)
        mse_loss(pred, t0).backward()
        num = numerical_gradient(
            lambda a: float(mse_loss(Tensor(a), t0).item()), p0.copy()
        )
        np.testing.assert_allclose(pred.grad, num, rtol=1e-5, atol=1e-7)


class TestCrossEntropy:
    def test_one_hot_is_zero(self):
        probs = Tensor([0.0, 1.0, 0.0])
        assert cross_entropy(probs, 1).item() == 0.0

    def test_uniform_six_classes(self):
        probs = Tensor(np.full(6, 1.0 / 6.0))
        assert cross_entropy(probs, 2).item() == pytest.approx(np.log(6.0))

    @pytest.mark.parametrize("label", [-1, 6])
    def test_label_out_of_range_rejected(self, label):
        with pytest.raises(ValueError, match="label"):
            cross_entropy(Tensor(np.full(6, 1.0 / 6.0)), label)

    @pytest.mark.parametrize("seed", range(5))
    def test_softmax_ce_gradient_is_probs_minus_onehot(self, seed):
        rng = np.random.default_rng(seed)
        z0 = rng.normal(size=7)
        label = int(rng.integers(7))

        logits = Tensor(z0)
        probs = softmax(logits)
        cross_entropy(probs, label).backward()

        expected = probs.data.copy()
        expected[label] -= 1.0
        np.testing.assert_allclose(logits.grad, expected, rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_vs_finite_differences(self, seed):
        rng = np.random.default_rng(50 + seed)
        z0 = rng.normal(size=5)
        label = int(rng.integers(5))

        logits = Tensor(z0)
        cross_entropy(softmax(logits), label).backward()
        num = numerical_gradient(
            lambda a: float(cross_entropy(softmax(Tensor(a)), label).item()),
            z0.copy(),
        )
        np.testing.assert_allclose(logits.grad, num, rtol=1e-5, atol=1e-7)


class TestL1Loss:
    def test_zero_at_target(self):
        x = np.array([2.0, -3.0])
        assert l1_loss(Tensor(x), x).item() == 0.0

    def test_known_value(self):
        assert l1_loss(Tensor([1.0, 3.0]), np.array([0.0, 1.0])).item() == 1.5

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            l1_loss(Tensor(np.zeros(0)), np.zeros(0))

    def test_subgradient_zero_at_tie(self):
        pred = Tensor([1.0, 2.0])
        l1_loss(pred, np.array([1.0, 0.0])).backward()
        np.testing.assert_array_equal(pred.grad, [0.0, 0.5])

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_away_from_ties(self, seed):
        rng = np.random.default_rng(seed)
        t0 = rng.normal(size=8)
        p0 = t0 + rng.uniform(0.1, 1.0, size=8) * rng.choice([-1.0, 1.0], size=8)

        pred = Tensor(p0)
        l1_loss(pred, t0).backward()
        num = numerical_gradient(
            lambda a: float(l1_loss(Tensor(a), t0).item()), p0.copy()
        )
        np.testing.assert_allclose(pred.grad, num, rtol=1e-5, atol=1e-7)


class TestCombinedLoss:
    def test_alpha_one_is_task_loss(self):
        out = combined_loss(Tensor(3.0), Tensor(5.0), alpha=1.0)
        assert out.item() == 3.0

    def test_alpha_zero_is_spectral_loss(self):
        out = combined_loss(Tensor(3.0), Tensor(5.0), alpha=0.0)
        assert out.item() == 5.0

    def test_default_blend(self):
        out = combined_loss(Tensor(1.0), Tensor(2.0), alpha=0.7)
        assert out.item() == pytest.approx(1.3)

    @pytest.mark.parametrize("alpha", [-0.1, 1.1])
    def test_alpha_out_of_range_rejected(self, alpha):
        with pytest.raises(ValueError, match="alpha"):
            combined_loss(Tensor(1.0), Tensor(2.0), alpha)

    def test_affine_in_both_arguments(self):
        a, b = Tensor(2.0), Tensor(4.0)
        lhs = combined_loss(a, b, 0.3).item()
        assert lhs == pytest.approx(0.3 * 2.0 + 0.7 * 4.0)

    def test_gradient_flows_to_both_terms(self):
        task, spec = Tensor(1.0), Tensor(2.0)
        combined_loss(task, spec, alpha=0.7).backward()
        assert task.grad == pytest.approx(0.7)
        assert spec.grad == pytest.approx(0.3)
