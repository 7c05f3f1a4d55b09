import numpy as np
import pytest

from gflowlab import nnet
from gflowlab.errors import ConfigError, TrainingError


def finite_difference_grads(net, x, output_grad, h=1e-5):
    """Central-difference gradient of <output_grad, forward(net, x)>: the
    independent oracle for backward()."""
    def loss():
        y, _ = nnet.forward(net, x)
        return float(np.sum(output_grad * y))

    grads = nnet.Gradients(
        [np.zeros_like(w) for w in net.weights],
        [np.zeros_like(b) for b in net.biases],
    )
    for p, g in zip(net.params(), grads.params()):
        flat_p, flat_g = p.ravel(), g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + h
            up = loss()
            flat_p[i] = orig - h
            down = loss()
            flat_p[i] = orig
            flat_g[i] = (up - down) / (2 * h)
    return grads


def rel_err(a, b):
    return np.abs(a - b) / np.maximum(1e-6, np.maximum(np.abs(a), np.abs(b)))


class TestInit:
    def test_deterministic(self):
        a = nnet.init_network([4, 8, 3], seed=7)
        b = nnet.init_network([4, 8, 3], seed=7)
        for pa, pb in zip(a.params(), b.params()):
            np.testing.assert_array_equal(pa, pb)

    def test_zero_weights_give_zero_output(self):
        net = nnet.init_network([4, 8, 3], seed=0)
        for w in net.weights:
            w[:] = 0.0
        y, _ = nnet.forward(net, np.array([1.0, -2.0, 3.0, 0.5]))
        np.testing.assert_array_equal(y, np.zeros(3))

    def test_single_entry_rejected(self):
        with pytest.raises(ConfigError):
            nnet.init_network([2], seed=0)

    def test_bounds_and_zero_biases(self):
        net = nnet.init_network([10, 20, 5], seed=3)
        for (n_in, n_out), w in zip([(10, 20), (20, 5)], net.weights):
            s = np.sqrt(6.0 / (n_in + n_out))
            assert np.all(np.abs(w) <= s)
        for b in net.biases:
            np.testing.assert_array_equal(b, np.zeros_like(b))


class TestForward:
    def test_identity_single_layer(self):
        net = nnet.init_network([3, 3], seed=0)
        net.weights[0] = np.eye(3)
        net.biases[0][:] = 0.0
        v = np.array([0.3, -1.2, 4.0])
        y, _ = nnet.forward(net, v)
        np.testing.assert_allclose(y, v)

    def test_matches_straight_line_recomputation(self):
        # independent re-implementation of the same matrix arithmetic
        rng = np.random.default_rng(11)
        net = nnet.init_network([5, 7, 6, 2], seed=11)
        x = rng.normal(size=5)
        a = x
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            z = a @ w + b
            a = np.tanh(z) if i < 2 else z
        y, _ = nnet.forward(net, x)
        np.testing.assert_allclose(y, a, atol=1e-12, rtol=0)

    def test_dimension_mismatch(self):
        net = nnet.init_network([5, 3], seed=0)
        with pytest.raises(ValueError):
            nnet.forward(net, np.zeros(4))

    def test_batched_matches_rowwise(self):
        net = nnet.init_network([4, 6, 2], seed=5)
        xs = np.random.default_rng(5).normal(size=(7, 4))
        batch, _ = nnet.forward(net, xs)
        rows = np.stack([nnet.forward(net, x)[0] for x in xs])
        np.testing.assert_allclose(batch, rows, atol=1e-14)
        np.testing.assert_allclose(nnet.apply(net, xs), batch, atol=1e-14)


class TestBackward:
    def test_zero_output_grad(self):
        net = nnet.init_network([3, 5, 2], seed=1)
        _, cache = nnet.forward(net, np.ones(3))
        grads = nnet.backward(net, cache, np.zeros(2))
        for g in grads.params():
            np.testing.assert_array_equal(g, np.zeros_like(g))

    def test_linear_single_layer_gradient(self):
        # loss = output_1 => d loss / d W[j, 0] = input_j
        net = nnet.init_network([4, 2], seed=2)
        x = np.array([0.5, -1.0, 2.0, 3.0])
        _, cache = nnet.forward(net, x)
        grads = nnet.backward(net, cache, np.array([1.0, 0.0]))
        np.testing.assert_allclose(grads.weights[0][:, 0], x)
        np.testing.assert_allclose(grads.weights[0][:, 1], np.zeros(4))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        net = nnet.init_network([4, 10, 8, 3], seed=seed)
        x = rng.uniform(-1, 1, size=4)
        g_out = rng.normal(size=3)
        _, cache = nnet.forward(net, x)
        grads = nnet.backward(net, cache, g_out)
        oracle = finite_difference_grads(net, x, g_out)
        for a, b in zip(grads.params(), oracle.params()):
            assert rel_err(a, b).max() <= 1e-4

    def test_batch_sums_rowwise_grads(self):
        net = nnet.init_network([3, 6, 2], seed=9)
        xs = np.random.default_rng(9).normal(size=(5, 3))
        gs = np.random.default_rng(10).normal(size=(5, 2))
        _, cache = nnet.forward(net, xs)
        batch_grads = nnet.backward(net, cache, gs)
        acc = None
        for x, g in zip(xs, gs):
            _, c = nnet.forward(net, x)
            row = nnet.backward(net, c, g)
            if acc is None:
                acc = row
            else:
                for pa, pb in zip(acc.params(), row.params()):
                    pa += pb
        for a, b in zip(batch_grads.params(), acc.params()):
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_stale_cache_rejected(self):
        net = nnet.init_network([3, 5, 2], seed=1)
        other = nnet.init_network([3, 4, 2], seed=1)
        _, cache = nnet.forward(other, np.ones(3))
        with pytest.raises(ValueError):
            nnet.backward(net, cache, np.ones(2))


class TestAdam:
    def test_zero_grads_leave_parameters(self):
        net = nnet.init_network([3, 4, 2], seed=0)
        before = [p.copy() for p in net.params()]
        grads = nnet.Gradients([np.zeros_like(w) for w in net.weights],
                               [np.zeros_like(b) for b in net.biases])
        state = nnet.AdamState.for_network(net, lr=0.1)
        nnet.adam_step(net, grads, state)
        for p, q in zip(net.params(), before):
            np.testing.assert_array_equal(p, q)

    def test_first_step_magnitude(self):
        # scalar parameter, constant gradient 1, lr 0.1: bias-corrected step ~ lr
        net = nnet.Network([1, 1], [np.array([[1.0]])], [np.array([0.0])])
        grads = nnet.Gradients([np.array([[1.0]])], [np.array([0.0])])
        state = nnet.AdamState.for_network(net, lr=0.1)
        nnet.adam_step(net, grads, state)
        assert net.weights[0][0, 0] == pytest.approx(1.0 - 0.1, abs=1e-6)

    def test_deterministic_updates(self):
        rng = np.random.default_rng(4)
        nets = [nnet.init_network([3, 5, 2], seed=4) for _ in range(2)]
        states = [nnet.AdamState.for_network(n, lr=0.01) for n in nets]
        g = nnet.Gradients(
            [rng.normal(size=w.shape) for w in nets[0].weights],
            [rng.normal(size=b.shape) for b in nets[0].biases])
        for net, st in zip(nets, states):
            for _ in range(5):
                nnet.adam_step(net, g, st)
        for a, b in zip(nets[0].params(), nets[1].params()):
            np.testing.assert_array_equal(a, b)

    def test_nonfinite_grads_rejected(self):
        net = nnet.init_network([2, 2], seed=0)
        grads = nnet.Gradients([np.array([[np.nan, 0.0], [0.0, 0.0]])],
                               [np.zeros(2)])
        state = nnet.AdamState.for_network(net, lr=0.1)
        with pytest.raises(TrainingError):
            nnet.adam_step(net, grads, state)

    def test_parameters_stay_finite(self):
        rng = np.random.default_rng(8)
        net = nnet.init_network([4, 8, 2], seed=8)
        state = nnet.AdamState.for_network(net, lr=0.05)
        for _ in range(50):
            g = nnet.Gradients(
                [rng.normal(size=w.shape) * 100 for w in net.weights],
                [rng.normal(size=b.shape) * 100 for b in net.biases])
            nnet.adam_step(net, g, state)
        assert all(np.all(np.isfinite(p)) for p in net.params())


class TestSoftUpdate:
    def test_tau_one_keeps_target(self):
        t = nnet.init_network([3, 4, 2], seed=1)
        s = nnet.init_network([3, 4, 2], seed=2)
        before = [p.copy() for p in t.params()]
        nnet.soft_update(t, s, 1.0)
        for p, q in zip(t.params(), before):
            np.testing.assert_array_equal(p, q)

    def test_tau_zero_copies_source(self):
        t = nnet.init_network([3, 4, 2], seed=1)
        s = nnet.init_network([3, 4, 2], seed=2)
        nnet.soft_update(t, s, 0.0)
        for p, q in zip(t.params(), s.params()):
            np.testing.assert_array_equal(p, q)

    def test_scalar_value(self):
        t = nnet.Network([1, 1], [np.array([[1.0]])], [np.array([0.0])])
        s = nnet.Network([1, 1], [np.array([[0.0]])], [np.array([0.0])])
        nnet.soft_update(t, s, 0.95)
        assert t.weights[0][0, 0] == pytest.approx(0.95)

    def test_convex_combination(self):
        rng = np.random.default_rng(3)
        t = nnet.init_network([4, 6, 3], seed=3)
        s = nnet.init_network([4, 6, 3], seed=4)
        lo = [np.minimum(a, b) for a, b in zip(t.params(), s.params())]
        hi = [np.maximum(a, b) for a, b in zip(t.params(), s.params())]
        nnet.soft_update(t, s, rng.random())
        for p, a, b in zip(t.params(), lo, hi):
            assert np.all(p >= a - 1e-15) and np.all(p <= b + 1e-15)

    def test_tau_out_of_range(self):
        t = nnet.init_network([2, 2], seed=0)
        with pytest.raises(ValueError):
            nnet.soft_update(t, t.copy(), 1.5)


class TestSerialization:
    def test_network_round_trip(self):
        net = nnet.init_network([5, 7, 3], seed=6)
        blob = nnet.network_to_bytes(net)
        back, offset = nnet.network_from_bytes(blob)
        assert offset == len(blob)
        assert back.layer_sizes == net.layer_sizes
        for a, b in zip(back.params(), net.params()):
            np.testing.assert_array_equal(a, b)

    def test_arrays_round_trip_concatenated(self):
        rng = np.random.default_rng(0)
        first = [rng.normal(size=(3, 2)), rng.normal(size=4)]
        second = [rng.normal(size=(1, 5))]
        blob = nnet.arrays_to_bytes(first) + nnet.arrays_to_bytes(second)
        a, off = nnet.arrays_from_bytes(blob)
        b, end = nnet.arrays_from_bytes(blob, off)
        assert end == len(blob)
        for x, y in zip(a + b, first + second):
            np.testing.assert_array_equal(x, y)
