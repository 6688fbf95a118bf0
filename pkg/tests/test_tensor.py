"""Autodiff core: arithmetic, broadcasting, matmul, graph traversal."""
import numpy as np
import pytest

from specnav.nn import Tensor

from oracles import numerical_gradient


class TestArithmetic:
    def test_add_values(self):
        out = Tensor([1.0, 2.0]) + Tensor([3.0, 4.0])
        np.testing.assert_array_equal(out.data, [4.0, 6.0])

    def test_mul_values(self):
        out = Tensor([2.0, 3.0]) * Tensor([4.0, 5.0])
        np.testing.assert_array_equal(out.data, [8.0, 15.0])

    def test_sub_and_neg(self):
        out = Tensor([5.0]) - Tensor([2.0])
        assert out.item() == 3.0
        assert (-Tensor([2.0])).data[0] == -2.0

    def test_python_scalars_lift(self):
        x = Tensor([1.0, 2.0])
        np.testing.assert_array_equal((x + 1.0).data, [2.0, 3.0])
        np.testing.assert_array_equal((2.0 * x).data, [2.0, 4.0])
        np.testing.assert_array_equal((3.0 - x).data, [2.0, 1.0])

    def test_add_gradient(self):
        x, y = Tensor([1.0, 2.0]), Tensor([3.0, 4.0])
        (x + y).sum().backward()
        np.testing.assert_array_equal(x.grad, [1.0, 1.0])
        np.testing.assert_array_equal(y.grad, [1.0, 1.0])

    def test_mul_gradient(self):
        x, y = Tensor([1.0, 2.0]), Tensor([3.0, 4.0])
        (x * y).sum().backward()
        np.testing.assert_array_equal(x.grad, y.data)
        np.testing.assert_array_equal(y.grad, x.data)


class TestBroadcasting:
    def test_scalar_plus_matrix_grad_sums(self):
        b = Tensor(2.0)
        m = Tensor(np.ones((3, 4)))
        (b + m).sum().backward()
        assert b.grad.shape == ()
        assert b.grad == 12.0

    def test_row_vector_broadcast_grad(self):
        v = Tensor(np.arange(4.0))
        m = Tensor(np.ones((3, 4)))
        (m * v).sum().backward()
        np.testing.assert_array_equal(v.grad, [3.0, 3.0, 3.0, 3.0])

    def test_keepdims_axis_broadcast(self):
        col = Tensor(np.ones((3, 1)))
        m = Tensor(np.arange(6.0).reshape(3, 2))
        (col * m).sum().backward()
        np.testing.assert_array_equal(col.grad, [[1.0], [5.0], [9.0]])


class TestMatmul:
    def test_matvec_value(self):
        w = Tensor([[1.0, 2.0], [3.0, 4.0]])
        x = Tensor([1.0, 1.0])
        np.testing.assert_array_equal((w @ x).data, [3.0, 7.0])

    @pytest.mark.parametrize("seed", range(5))
    def test_matvec_gradients(self, seed):
        rng = np.random.default_rng(seed)
        w0 = rng.normal(size=(3, 4))
        x0 = rng.normal(size=4)

        w, x = Tensor(w0), Tensor(x0)
        ((w @ x) * (w @ x)).sum().backward()

        gw = numerical_gradient(lambda a: float(((a @ x0) ** 2).sum()), w0.copy())
        gx = numerical_gradient(lambda a: float(((w0 @ a) ** 2).sum()), x0.copy())
        np.testing.assert_allclose(w.grad, gw, rtol=1e-5, atol=1e-7)
        np.testing.assert_allclose(x.grad, gx, rtol=1e-5, atol=1e-7)

    @pytest.mark.parametrize("seed", range(5))
    def test_matmat_gradients(self, seed):
        rng = np.random.default_rng(seed)
        a0 = rng.normal(size=(3, 4))
        b0 = rng.normal(size=(4, 2))

        a, b = Tensor(a0), Tensor(b0)
        ((a @ b) * (a @ b)).sum().backward()

        ga = numerical_gradient(lambda m: float(((m @ b0) ** 2).sum()), a0.copy())
        gb = numerical_gradient(lambda m: float(((a0 @ m) ** 2).sum()), b0.copy())
        np.testing.assert_allclose(a.grad, ga, rtol=1e-5, atol=1e-7)
        np.testing.assert_allclose(b.grad, gb, rtol=1e-5, atol=1e-7)


class TestShapesAndReductions:
    def test_reshape_round_trip_grad(self):
        x = Tensor(np.arange(6.0).reshape(2, 3))
        (x.reshape(6) * Tensor(np.arange(6.0))).sum().backward()
        np.testing.assert_array_equal(x.grad, np.arange(6.0).reshape(2, 3))

    def test_sum_and_mean(self):
        x = Tensor([1.0, 2.0, 3.0])
        assert x.sum().item() == 6.0
        assert x.mean().item() == pytest.approx(2.0)

    def test_mean_gradient(self):
        x = Tensor(np.ones((2, 5)))
        x.mean().backward()
        np.testing.assert_allclose(x.grad, np.full((2, 5), 0.1))


class TestGraph:
    def test_backward_rejects_non_scalar(self):
        with pytest.raises(ValueError, match="scalar"):
            Tensor([1.0, 2.0]).backward()

    def test_loss_grad_is_one(self):
        x = Tensor([3.0])
        y = (x * x).sum()
        y.backward()
        assert y.grad == 1.0

    def test_diamond_graph_accumulates(self):
        # z = (x + x) * (x * x); dz/dx = 2*x*x + (x+x)*2x = 6x^2
        x = Tensor([2.0])
        ((x + x) * (x * x)).sum().backward()
        assert x.grad[0] == pytest.approx(24.0)

    def test_node_reused_many_times(self):
        x = Tensor([1.5])
        total = x * 0.0
        for _ in range(10):
            total = total + x
        total.sum().backward()
        assert x.grad[0] == pytest.approx(10.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_deep_chain_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        x0 = rng.normal(size=5)

        def forward(a):
            t = a
            for _ in range(8):
                t = t * a + a
            return t.sum()

        x = Tensor(x0)
        forward(x).backward()
        g = numerical_gradient(lambda a: float(forward(Tensor(a)).item()), x0.copy())
        np.testing.assert_allclose(x.grad, g, rtol=1e-5, atol=1e-7)

    def test_finite_after_forward_backward(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.normal(size=(4, 4)))
        y = ((x * x) + x).mean()
        y.backward()
        assert np.isfinite(y.data).all()
        assert np.isfinite(x.grad).all()

    def test_determinism(self):
        def run():
            x = Tensor(np.arange(12.0).reshape(3, 4))
            ((x * 2.0 + 1.0) * x).sum().backward()
            return x.grad.copy()

        np.testing.assert_array_equal(run(), run())
