"""Forward semantics and backward bookkeeping of the numeric core."""

import numpy as np
import pytest

from sdparse import autodiff as ad
from sdparse.errors import ConfigError, GraphError, NumericError, ShapeError
from sdparse.rng import Rng

from util_grad import fd_gradcheck


class TestMatmul:
    def test_identity(self):
        a = ad.constant(np.eye(2))
        b = ad.constant([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(ad.matmul(a, b).value, [[1.0, 2.0], [3.0, 4.0]])

    def test_zero_matrix(self):
        z = ad.constant(np.zeros((2, 3)))
        b = ad.constant(np.arange(6.0).reshape(3, 2))
        assert np.array_equal(ad.matmul(z, b).value, np.zeros((2, 2)))

    def test_hand_product(self):
        a = ad.constant([[1.0, 2.0], [3.0, 4.0]])
        b = ad.constant([[5.0], [6.0]])
        assert np.array_equal(ad.matmul(a, b).value, [[17.0], [39.0]])

    def test_shape_mismatch_names_both_shapes(self):
        a = ad.constant(np.zeros((2, 3)))
        b = ad.constant(np.zeros((2, 3)))
        with pytest.raises(ShapeError, match=r"\(2, 3\) x \(2, 3\)"):
            ad.matmul(a, b)


class TestKernels:
    def test_relu(self):
        out = ad.relu(ad.constant([-1.0, 0.0, 2.0]))
        assert np.array_equal(out.value, [0.0, 0.0, 2.0])
        assert (out.value >= 0).all()

    def test_leaky_relu_default_slope(self):
        out = ad.leaky_relu(ad.constant([-1.0]), alpha=0.2)
        assert np.allclose(out.value, [-0.2])

    def test_softmax_symmetry(self):
        for c in (-3.0, 0.0, 17.5):
            out = ad.softmax(ad.constant([c, c]), axis=0)
            assert np.allclose(out.value, [0.5, 0.5], atol=1e-15)

    def test_softmax_rows_sum_to_one(self):
        rng = Rng(0)
        x = ad.constant(rng.normal((5, 7)) * 10)
        out = ad.softmax(x, axis=1)
        assert np.abs(out.value.sum(axis=1) - 1.0).max() < 1e-12

    def test_softmax_invalid_axis(self):
        with pytest.raises(ShapeError):
            ad.softmax(ad.constant(np.zeros((2, 2))), axis=5)

    def test_sigmoid_matches_closed_form(self):
        x = np.array([-700.0, -2.0, 0.0, 2.0, 700.0])
        out = ad.sigmoid(ad.constant(x))
        assert np.allclose(out.value[2], 0.5)
        assert (out.value >= 0).all() and (out.value <= 1).all()
        assert np.isfinite(out.value).all()

    def test_concat_and_split_roundtrip(self):
        a = ad.constant(np.arange(6.0).reshape(2, 3))
        b = ad.constant(np.arange(6.0, 12.0).reshape(2, 3))
        joined = ad.concat([a, b], axis=1)
        left, right = ad.split(joined, 2, axis=1)
        assert np.array_equal(left.value, a.value)
        assert np.array_equal(right.value, b.value)

    def test_add_broadcasts_bias(self):
        x = ad.constant(np.zeros((3, 4)))
        b = ad.constant(np.arange(4.0))
        out = ad.add(x, b)
        assert np.array_equal(out.value, np.tile(np.arange(4.0), (3, 1)))

    def test_scale(self):
        out = ad.scale(ad.constant([1.0, -2.0]), 3.0)
        assert np.array_equal(out.value, [3.0, -6.0])

    def test_masked_softmax_empty_row_is_zero(self):
        x = ad.constant(np.ones((2, 3)))
        mask = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
        out = ad.masked_softmax(x, mask, axis=1)
        assert np.allclose(out.value[0], [0.5, 0.5, 0.0])
        assert np.array_equal(out.value[1], [0.0, 0.0, 0.0])


class TestDropout:
    def test_eval_mode_is_identity(self):
        x = ad.constant(np.ones((4, 4)))
        assert ad.dropout(x, 0.5, train=False) is x

    def test_p_zero_is_identity(self):
        x = ad.constant(np.ones((4, 4)))
        assert ad.dropout(x, 0.0, rng=Rng(0), train=True) is x

    def test_train_mode_preserves_mean(self):
        x = ad.constant(np.ones(10_000))
        out = ad.dropout(x, 0.5, rng=Rng(123).child("drop"), train=True)
        assert abs(out.value.mean() - 1.0) < 0.05

    def test_invalid_rate(self):
        with pytest.raises(ConfigError):
            ad.dropout(ad.constant([1.0]), 1.0, rng=Rng(0), train=True)


class TestBackward:
    def test_unreached_leaf_has_zero_grad(self):
        x = ad.param(np.ones((2, 2)))
        out = ad.sum_all(ad.constant(np.ones(3)))
        ad.backward(out)
        assert np.array_equal(x.grad, np.zeros((2, 2)))

    def test_linear_case(self):
        x = ad.param(np.ones((2, 3)))
        ad.backward(ad.sum_all(ad.scale(x, 3.0)))
        assert np.array_equal(x.grad, np.full((2, 3), 3.0))

    def test_accumulates_over_multiple_uses(self):
        x = ad.param(np.array([2.0]))
        out = ad.sum_all(ad.add(x, x))
        ad.backward(out)
        assert np.array_equal(x.grad, [2.0])

    def test_non_scalar_output_rejected(self):
        x = ad.param(np.ones(3))
        with pytest.raises(GraphError):
            ad.backward(ad.relu(x))

    def test_repeated_backward_does_not_mix_records(self):
        x = ad.param(np.array([1.0, 2.0]))
        ad.backward(ad.sum_all(x))
        first = x.grad.copy()
        ad.backward(ad.sum_all(ad.scale(x, 2.0)))
        assert np.array_equal(first, [1.0, 1.0])
        assert np.array_equal(x.grad, [2.0, 2.0])


class TestNanGuard:
    def test_log_of_nonpositive_raises(self):
        with pytest.raises(NumericError, match="log"):
            ad.log(ad.constant([0.5, 0.0]))

    def test_nonfinite_input_rejected(self):
        with pytest.raises(NumericError):
            ad.constant([np.inf])

    def test_error_names_operation(self):
        big = ad.constant(np.array([1e308]))
        with np.errstate(over="ignore"), pytest.raises(NumericError, match="mul"):
            ad.mul(big, big)


class TestDeterminism:
    def test_same_seed_same_forward_and_grads(self):
        def run():
            rng = Rng(77)
            x = ad.param(rng.normal((4, 4)))
            y = ad.dropout(ad.tanh(x), 0.3, rng=rng.child("d"), train=True)
            loss = ad.mean_all(ad.mul(y, y))
            ad.backward(loss)
            return loss.value.copy(), x.grad.copy()

        (l1, g1), (l2, g2) = run(), run()
        assert np.array_equal(l1, l2)
        assert np.array_equal(g1, g2)


class TestStructuralOps:
    def test_select_and_narrow(self):
        x = ad.constant(np.arange(24.0).reshape(2, 3, 4))
        assert np.array_equal(ad.select(x, 1, 2).value, x.value[:, 2, :])
        assert np.array_equal(ad.narrow(x, 2, 1, 2).value, x.value[:, :, 1:3])

    def test_gather_rows_shape_and_bounds(self):
        table = ad.constant(np.arange(12.0).reshape(4, 3))
        idx = np.array([[0, 3], [1, 1]])
        out = ad.gather_rows(table, idx)
        assert out.shape == (2, 2, 3)
        with pytest.raises(ShapeError):
            ad.gather_rows(table, np.array([4]))

    def test_stack(self):
        xs = [ad.constant(np.full((2,), float(k))) for k in range(3)]
        out = ad.stack(xs, axis=1)
        assert out.shape == (2, 3)
        assert np.array_equal(out.value[0], [0.0, 1.0, 2.0])


class TestOpGradients:
    """Central-difference checks on random small tensors for every kernel."""

    def _rand(self, *shape):
        return Rng(5).child(str(shape)).normal(shape)

    def test_elementwise_and_reduction_ops(self):
        x0 = self._rand(3, 4)
        cases = {
            "relu": lambda p: ad.sum_all(ad.relu(p["x"])),
            "leaky_relu": lambda p: ad.sum_all(ad.leaky_relu(p["x"], alpha=0.2)),
            "sigmoid": lambda p: ad.sum_all(ad.mul(ad.sigmoid(p["x"]), p["x"])),
            "tanh": lambda p: ad.sum_all(ad.mul(ad.tanh(p["x"]), p["x"])),
            "softmax": lambda p: ad.sum_all(ad.mul(ad.softmax(p["x"], axis=1), p["x"])),
            "scale": lambda p: ad.sum_all(ad.scale(p["x"], -1.7)),
            "mean": lambda p: ad.mean_all(ad.mul(p["x"], p["x"])),
            "clip": lambda p: ad.sum_all(ad.mul(ad.clip_min(p["x"], 0.25), p["x"])),
            "log": lambda p: ad.sum_all(ad.log(ad.clip_min(p["x"], 0.3))),
            "sum_axis": lambda p: ad.sum_all(
                ad.mul(ad.sum_axis(p["x"], axis=0, keepdims=True), ad.constant(np.ones((1, 4))))
            ),
        }
        for name, build in cases.items():
            fd_gradcheck(build, {"x": x0.copy()})

    def test_binary_ops(self):
        arrays = {"a": self._rand(3, 4), "b": self._rand(3, 4), "c": self._rand(4, 2)}

        def build(p):
            y = ad.matmul(ad.mul(p["a"], p["b"]) + p["a"] - p["b"], p["c"])
            return ad.sum_all(ad.tanh(y))

        fd_gradcheck(build, arrays)

    def test_broadcast_add_mul(self):
        arrays = {"m": self._rand(3, 4), "v": self._rand(4)}

        def build(p):
            return ad.sum_all(ad.tanh(ad.mul(ad.add(p["m"], p["v"]), p["v"])))

        fd_gradcheck(build, arrays)

    def test_structure_ops(self):
        arrays = {"x": self._rand(4, 6)}

        def build(p):
            parts = ad.split(p["x"], 2, axis=1)
            joined = ad.concat([parts[1], parts[0]], axis=1)
            picked = ad.narrow(ad.transpose(joined), 0, 1, 3)
            return ad.sum_all(ad.mul(picked, picked))

        fd_gradcheck(build, arrays)

    def test_gather_accumulates_duplicates(self):
        arrays = {"t": self._rand(5, 3)}
        idx = np.array([0, 2, 2, 4])

        def build(p):
            rows = ad.gather_rows(p["t"], idx)
            return ad.sum_all(ad.mul(rows, rows))

        fd_gradcheck(build, arrays)

    def test_masked_softmax_gradient(self):
        mask = np.array([[1, 1, 0], [1, 0, 1], [0, 0, 0]], dtype=float)
        arrays = {"x": self._rand(3, 3)}

        def build(p):
            att = ad.masked_softmax(p["x"], mask, axis=1)
            return ad.sum_all(ad.mul(att, p["x"]))

        fd_gradcheck(build, arrays)

    def test_dropout_train_path_gradient(self):
        arrays = {"x": self._rand(4, 4)}

        def build(p):
            out = ad.dropout(p["x"], 0.4, rng=Rng(3).child("fixed"), train=True)
            return ad.sum_all(ad.mul(out, out))

        fd_gradcheck(build, arrays)

    def test_bilinear_gradient(self):
        arrays = {
            "x": self._rand(3, 4),
            "u": self._rand(4, 2, 4),
            "y": self._rand(3, 4),
        }

        def build(p):
            return ad.sum_all(ad.tanh(ad.bilinear(p["x"], p["u"], p["y"])))

        fd_gradcheck(build, arrays)

    def test_lstm_cell_gradient(self):
        arrays = {"z": self._rand(2, 12), "c": self._rand(2, 3)}

        def build(p):
            return ad.sum_all(ad.tanh(ad.lstm_cell(p["z"], p["c"])))

        fd_gradcheck(build, arrays)
