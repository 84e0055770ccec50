import numpy as np
import pytest
from libinquire.exceptions import NetworkStateError
from libinquire.network import Dense, BatchNorm, LeakyReLU, Network, build_mlp, forward, \
    backward, polyak_update, Optimizer, exponential_decay, grad_check


def _linear(w):
    layer = Dense(len(w), len(w[0]), init="zeros")
    layer.W[...] = w
    return Network([layer])


def test_identity_forward():
    net = _linear(np.eye(2))
    np.testing.assert_array_equal(forward(net, np.array([[1.0, 2.0]])), [[1.0, 2.0]])


def test_leaky_relu_forward():
    act = LeakyReLU(0.01)
    np.testing.assert_allclose(act.forward(np.array([[-1.0, 2.0]])), [[-0.01, 2.0]])


def test_eval_forward_is_deterministic():
    net = build_mlp((4, 8, 3), rng=np.random.RandomState(1)).eval()
    x = np.random.RandomState(2).normal(size=(5, 4))
    np.testing.assert_array_equal(net.forward(x), net.forward(x))


def test_linear_backward():
    net = _linear([[3.0]])
    net.forward(np.array([[2.0]]))
    grads = backward(net, np.array([[1.0]]))
    assert grads[0][0, 0] == 2.0
    assert grads[1][0] == 1.0


def test_zero_upstream_gives_zero_grads():
    net = build_mlp((3, 5, 2), batch_norm=True, rng=np.random.RandomState(0))
    net.forward(np.random.RandomState(1).normal(size=(4, 3)))
    for g in backward(net, np.zeros((4, 2))):
        assert not np.any(g)


def test_backward_before_forward():
    with pytest.raises(NetworkStateError):
        build_mlp((2, 2)).backward(np.ones((1, 2)))


def test_input_width_checked():
    with pytest.raises(ValueError):
        build_mlp((3, 2)).forward(np.ones((1, 4)))


def test_polyak_examples():
    main, target = _linear([[1.0]]), _linear([[0.0]])
    polyak_update(target, main, 0.005)
    assert target.layers[0].W[0, 0] == pytest.approx(0.005)
    polyak_update(target, main, 0.0)
    assert target.layers[0].W[0, 0] == pytest.approx(0.005)
    polyak_update(target, main, 1.0)
    assert target.layers[0].W[0, 0] == 1.0
    with pytest.raises(NetworkStateError):
        polyak_update(_linear(np.eye(2)), main, 0.5)


def test_batch_norm_train_and_eval_agree_on_converged_stats():
    bn = BatchNorm(3, momentum=1.0)
    x = np.random.RandomState(0).normal(size=(6, 3))
    train_out = bn.forward(x, training=True)
    np.testing.assert_allclose(bn.forward(x, training=False), train_out, atol=1e-12)


def test_grad_check_linear_is_exact():
    net = _linear(np.random.RandomState(0).normal(size=(3, 2)))
    batch = np.arange(1.0, 13.0).reshape(4, 3)
    result = grad_check(net, batch, weights=np.ones((4, 2)))
    assert result.max_error < 1e-10
    assert result.skipped == 0


def test_grad_check_three_layers_with_batch_norm():
    rng = np.random.RandomState(3)
    net = build_mlp((4, 6, 5, 2), batch_norm=True, output_activation=False, rng=rng)
    net.forward(rng.normal(size=(16, 4)), training=True)
    result = grad_check(net, rng.normal(size=(4, 4)))
    assert result.max_error < 1e-4
    assert result.checked > 0


def test_grad_check_skips_kinks():
    dense = Dense(2, 1, init="zeros")
    net = Network([dense, LeakyReLU(0.01)])
    result = grad_check(net, np.array([[1.0, 2.0]]))
    assert result.skipped >= 1


def test_grad_check_detects_broken_backward():
    net = _linear([[1.0, 2.0], [3.0, 4.0]])
    layer = net.layers[0]
    layer.backward = lambda dout: (setattr(layer, "dW", 2.0 * layer._x.T.dot(dout)),
                                   setattr(layer, "db", dout.sum(axis=0)))
    result = grad_check(net, np.array([[1.0, 1.0]]))
    assert result.max_error > 0.1


def test_lr_schedule_endpoints():
    assert exponential_decay(0, 1e-6, 3e-9, 100) == pytest.approx(1e-6)
    assert exponential_decay(100, 1e-6, 3e-9, 100) == pytest.approx(3e-9)
    assert exponential_decay(500, 1e-6, 3e-9, 100) == pytest.approx(3e-9)
    lrs = [exponential_decay(t, 1e-3, 1e-5, 50) for t in range(51)]
    assert all(a > b for a, b in zip(lrs[:-1], lrs[1:]))
    assert exponential_decay(7, 1e-3) == 1e-3


@pytest.mark.parametrize("kind", ["sgd", "adam"])
def test_optimizer_descends_quadratic(kind):
    w = np.array([3.0, -2.0])
    opt = Optimizer([w], kind=kind, lr_start=0.1)
    for _ in range(300):
        opt.step([2.0 * w])
    assert np.abs(w).max() < 0.05


def test_optimizer_state_roundtrip():
    w = np.ones(3)
    opt = Optimizer([w], kind="adam", lr_start=0.01)
    opt.step([w.copy()])
    state = opt.state_dict()
    twin = Optimizer([w.copy()], kind="adam", lr_start=0.01).load_state_dict(state)
    assert twin.t == 1
    np.testing.assert_array_equal(twin.m[0], opt.m[0])
    with pytest.raises(ValueError):
        Optimizer([w], kind="sgd").load_state_dict(state)


def test_network_state_dict_checks_architecture():
    a = build_mlp((3, 4, 2), rng=np.random.RandomState(0))
    b = build_mlp((3, 4, 2), rng=np.random.RandomState(1)).load_state_dict(a.state_dict())
    x = np.ones((2, 3))
    np.testing.assert_array_equal(a.eval().forward(x), b.eval().forward(x))
    with pytest.raises(NetworkStateError):
        build_mlp((3, 5, 2)).load_state_dict(a.state_dict())


def test_weight_decay_shrinks_matrices_only():
    W, b = np.ones((2, 3)), np.ones(3)
    opt = Optimizer([W, b], kind="sgd", lr_start=0.1, weight_decay=0.5)
    opt.step([np.zeros_like(W), np.zeros_like(b)])
    np.testing.assert_allclose(W, 0.95)
    np.testing.assert_array_equal(b, np.ones(3))
    with pytest.raises(ValueError):
        Optimizer([W], weight_decay=-1.0)


def test_n_params_counts_weights_and_batch_norm():
    assert build_mlp((3, 4, 2), batch_norm=False).n_params() == 26
    assert build_mlp((3, 4, 2), batch_norm=True).n_params() == 26 + 2 * (4 + 2)
