import numpy as np
import pytest

from splash.errors import TrainingError, UsageError
from splash.nn import Adam, DenseNet, log_softmax, softmax

from conftest import make_identity_net


class TestDenseNet:
    def test_param_count(self):
        net = DenseNet(35, 1, activation="relu", head="scalar", hidden=256)
        want = 35 * 256 + 256 + 256 * 256 + 256 + 256 * 1 + 1
        assert net.n_params == want
        assert net.get_theta().shape == (want,)

    def test_theta_round_trip(self):
        net = DenseNet(4, 3, hidden=16)
        theta = np.random.default_rng(0).normal(size=net.n_params)
        net.set_theta(theta)
        np.testing.assert_array_equal(net.get_theta(), theta)

    def test_set_theta_length_check(self):
        net = DenseNet(4, 3, hidden=16)
        with pytest.raises(UsageError):
            net.set_theta(np.zeros(5))

    def test_invalid_configs(self):
        with pytest.raises(UsageError):
            DenseNet(4, 3, activation="sigmoid")
        with pytest.raises(UsageError):
            DenseNet(4, 3, head="gaussian")
        with pytest.raises(UsageError):
            DenseNet(4, 3, head="scalar")

    def test_input_dim_check(self):
        net = DenseNet(4, 3, hidden=16)
        with pytest.raises(UsageError):
            net.forward(np.zeros(5))

    def test_identity_net_passthrough(self):
        net = make_identity_net()
        xs = np.array([[0.0], [1.0], [2.5], [7.0]])
        np.testing.assert_allclose(net.scalar(xs), xs[:, 0])
        # ReLU clips the negative branch at the first layer
        assert net.scalar(np.array([[-3.0]]))[0] == 0.0

    def test_forward_deterministic(self):
        net = DenseNet(6, 4, hidden=32, rng=np.random.default_rng(5))
        x = np.random.default_rng(1).normal(size=(10, 6))
        np.testing.assert_array_equal(net.forward(x), net.forward(x))

    def test_softmax_head_normalized(self):
        net = DenseNet(6, 7, hidden=32)
        x = np.random.default_rng(2).normal(size=(8, 6))
        p = net.forward(x)
        assert p.shape == (8, 7)
        assert np.all(p > 0.0)
        np.testing.assert_allclose(p.sum(axis=1), np.ones(8), atol=1e-12)

    def test_single_input_shape(self):
        net = DenseNet(6, 7, hidden=32)
        assert net.forward(np.zeros(6)).shape == (7,)

    @pytest.mark.parametrize("activation", ["tanh", "relu"])
    def test_backward_matches_finite_differences(self, activation):
        rng = np.random.default_rng(9)
        net = DenseNet(3, 2, activation=activation, hidden=8, rng=rng)
        X = rng.normal(size=(5, 3))
        dout = rng.normal(size=(5, 2))
        out, cache = net.forward_cache(X)
        grad = net.backward(cache, dout)
        theta = net.get_theta()
        h = 1e-6
        idx = rng.choice(net.n_params, size=40, replace=False)
        for k in idx:
            tp, tm = theta.copy(), theta.copy()
            tp[k] += h
            tm[k] -= h
            net.set_theta(tp)
            fp = float((net.logits(X) * dout).sum())
            net.set_theta(tm)
            fm = float((net.logits(X) * dout).sum())
            num = (fp - fm) / (2 * h)
            assert grad[k] == pytest.approx(num, abs=1e-5, rel=1e-5)
        net.set_theta(theta)

    def test_clone_independent(self):
        net = DenseNet(4, 3, hidden=16)
        twin = net.clone()
        twin.weights[0][0, 0] += 1.0
        assert net.weights[0][0, 0] != twin.weights[0][0, 0]

    def test_save_load_round_trip(self, tmp_path):
        net = DenseNet(5, 1, activation="relu", head="scalar", hidden=16,
                       rng=np.random.default_rng(3))
        path = str(tmp_path / "net.npz")
        net.save(path, meta={"kind": "reward", "label": "x"})
        back = DenseNet.load(path)
        np.testing.assert_array_equal(back.get_theta(), net.get_theta())
        assert back.sizes == net.sizes
        assert back.activation == "relu" and back.head == "scalar"
        assert back.loaded_meta == {"kind": "reward", "label": "x"}
        x = np.random.default_rng(0).normal(size=(6, 5))
        np.testing.assert_array_equal(back.scalar(x), net.scalar(x))


class TestSoftmaxHelpers:
    def test_softmax_known_values(self):
        p = softmax(np.array([0.0, np.log(2.0), np.log(4.0)]))
        np.testing.assert_allclose(p, [1 / 7, 2 / 7, 4 / 7], atol=1e-12)

    def test_softmax_shift_invariant(self):
        z = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(softmax(z), softmax(z + 1000.0), atol=1e-12)

    def test_log_softmax_consistent(self):
        z = np.random.default_rng(4).normal(size=(3, 5))
        np.testing.assert_allclose(np.exp(log_softmax(z)), softmax(z), atol=1e-12)

    def test_softmax_overflow_safe(self):
        p = softmax(np.array([1e4, 0.0]))
        assert np.all(np.isfinite(p))
        assert p[0] == pytest.approx(1.0)


class TestAdam:
    def test_first_step_is_signed_lr(self):
        theta = np.array([1.0, -2.0, 0.5])
        g = np.array([0.3, -4.0, 1e-3])
        opt = Adam(3, lr=1e-2)
        new = opt.step(theta, g)
        # bias correction makes step 1 equal -lr * sign(g) up to eps
        np.testing.assert_allclose(new - theta, -1e-2 * np.sign(g), rtol=1e-4)

    def test_converges_on_quadratic(self):
        theta = np.array([5.0, -3.0])
        opt = Adam(2, lr=0.1)
        for _ in range(500):
            theta = opt.step(theta, 2.0 * theta)
        np.testing.assert_allclose(theta, np.zeros(2), atol=1e-3)

    def test_shape_mismatch(self):
        opt = Adam(3, lr=0.1)
        with pytest.raises(UsageError):
            opt.step(np.zeros(3), np.zeros(4))

    def test_non_finite_gradient_rejected(self):
        opt = Adam(2, lr=0.1)
        with pytest.raises(TrainingError):
            opt.step(np.zeros(2), np.array([1.0, np.nan]))
