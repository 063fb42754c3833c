import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fedgrid.nn import (AdamState, ModelWeights, Mlp, adam_step, backward, extract_weights, forward,
                        load_weights, mse_loss, softmax_logits)


def naive_forward(net, x):
    """Triple-loop reference for the MLP forward pass."""
    h = list(x)
    for li, (w, b) in enumerate(zip(net.weights, net.biases)):
        n_in, n_out = w.shape
        out = []
        for j in range(n_out):
            acc = b[j]
            for i in range(n_in):
                acc += h[i] * w[i, j]
            out.append(acc)
        if li < net.n_layers - 1:
            out = [max(v, 0.0) for v in out]
        h = out
    return np.array(h)


def finite_difference(f, params, h=1e-5):
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            fp = f()
            p[idx] = orig - h
            fm = f()
            p[idx] = orig
            g[idx] = (fp - fm) / (2 * h)
        grads.append(g)
    return grads


def max_rel_error(a, b):
    worst = 0.0
    for x, y in zip(a, b):
        denom = np.maximum(np.maximum(np.abs(x), np.abs(y)), 1e-6)
        worst = max(worst, float(np.max(np.abs(x - y) / denom)))
    return worst


def test_zero_weights_give_zero_output():
    net = Mlp([4, 8, 3], seed=0)
    for p in net.params:
        p[...] = 0.0
    assert np.array_equal(forward(net, np.array([1.0, -2.0, 3.0, 0.5])), np.zeros(3))


def test_affine_single_layer():
    net = Mlp([1, 1], seed=0)
    net.weights[0][...] = 2.0
    net.biases[0][...] = 1.0
    assert forward(net, np.array([3.0])).tolist() == [7.0]


def test_forward_matches_triple_loop_oracle():
    rng = np.random.default_rng(3)
    net = Mlp([4, 16, 16, 3], seed=11)
    for _ in range(20):
        x = rng.normal(size=4)
        np.testing.assert_allclose(forward(net, x), naive_forward(net, x), rtol=0, atol=1e-12)


def test_batch_forward_matches_rowwise():
    rng = np.random.default_rng(0)
    net = Mlp([4, 32, 32, 3], seed=1)
    x = rng.normal(size=(7, 4))
    batched = net.forward(x)
    for i in range(7):
        np.testing.assert_allclose(batched[i], net.forward(x[i]), rtol=1e-13, atol=1e-13)


def test_forward_rejects_wrong_dimension():
    net = Mlp([4, 8, 3], seed=0)
    with pytest.raises(ValueError):
        net.forward(np.zeros(5))
    with pytest.raises(ValueError):
        backward(net, np.zeros(4), np.zeros(2))


def test_zero_output_grad_gives_zero_gradients():
    net = Mlp([3, 8, 2], seed=0)
    grads = backward(net, np.array([0.3, -0.1, 0.7]), np.zeros(2))
    assert all(not g.any() for g in grads)


@pytest.mark.parametrize("seed", range(10))
def test_backward_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    net = Mlp([3, 8, 2], seed=100 + seed)
    x = rng.normal(size=3)
    g_out = rng.normal(size=2)
    analytic = backward(net, x, g_out)
    numeric = finite_difference(lambda: float(net.forward(x) @ g_out), net.params)
    assert max_rel_error(analytic, numeric) < 1e-4


def test_batched_backward_matches_finite_differences():
    rng = np.random.default_rng(5)
    net = Mlp([3, 8, 8, 2], seed=9)
    x = rng.normal(size=(5, 3))
    g_out = rng.normal(size=(5, 2))
    analytic = backward(net, x, g_out)
    numeric = finite_difference(lambda: float(np.sum(net.forward(x) * g_out)), net.params)
    assert max_rel_error(analytic, numeric) < 1e-4


def test_dead_relu_unit_gets_no_gradient():
    net = Mlp([2, 3, 1], seed=0)
    net.weights[0][...] = np.array([[1.0, 1.0, -1.0], [1.0, 1.0, -1.0]])
    net.biases[0][...] = 0.0
    x = np.array([1.0, 1.0])  # unit 2 pre-activation is -2
    grads = backward(net, x, np.array([1.0]))
    assert not grads[0][:, 2].any()
    assert grads[1][2] == 0.0
    assert grads[2][2, 0] == 0.0


def test_forward_is_pure():
    net = Mlp([4, 8, 3], seed=2)
    x = np.array([0.1, 0.2, 0.3, 0.4])
    first = net.forward(x)
    for _ in range(3):
        assert np.array_equal(net.forward(x), first)


def test_init_bounds_follow_fan_in():
    net = Mlp([4, 256, 3], seed=0)
    assert np.abs(net.weights[0]).max() <= 0.5
    assert np.abs(net.weights[1]).max() <= 1 / 16


def test_adam_zero_gradient_leaves_params():
    p = [np.array([1.0, -2.0]), np.array([[3.0]])]
    before = [x.copy() for x in p]
    adam_step(AdamState.for_params(p, 0.1), p, [np.zeros(2), np.zeros((1, 1))])
    assert all(np.array_equal(a, b) for a, b in zip(p, before))


def test_adam_first_step_by_hand():
    p = [np.array(1.0)]
    state = AdamState.for_params(p, 0.1)
    adam_step(state, p, [np.array(1.0)])
    # m_hat = v_hat = 1 so the step is lr / (1 + eps)
    assert float(p[0]) == pytest.approx(1.0 - 0.1 / (1.0 + 1e-8), abs=1e-15)
    assert state.step_count == 1


def test_adam_tensors_are_independent():
    a = [np.array([1.0]), np.array([1.0])]
    b = [np.array([1.0]), np.array([1.0])]
    sa, sb = AdamState.for_params(a, 0.01), AdamState.for_params(b, 0.01)
    for _ in range(5):
        adam_step(sa, a, [np.array([0.5]), np.array([0.0])])
        adam_step(sb, b, [np.array([0.5]), np.array([-3.0])])
    assert np.array_equal(a[0], b[0])
    assert a[1][0] == 1.0 and b[1][0] > 1.0


def test_adam_rejects_shape_mismatch():
    p = [np.zeros(3)]
    with pytest.raises(ValueError):
        adam_step(AdamState.for_params(p, 0.1), p, [np.zeros(2)])


def test_softmax_uniform_and_stable():
    probs, logp = softmax_logits(np.zeros(3))
    np.testing.assert_allclose(probs, [1 / 3] * 3, rtol=0, atol=1e-15)
    np.testing.assert_allclose(logp, [-math.log(3)] * 3, rtol=0, atol=1e-15)
    probs, logp = softmax_logits(np.array([1000.0, 0.0, 0.0]))
    assert np.all(np.isfinite(probs)) and np.all(np.isfinite(logp))
    assert probs[0] == 1.0 and probs[1] < 1e-300


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(2, 6), elements=st.floats(-50, 50)),
       st.floats(-100, 100))
def test_softmax_properties(logits, shift):
    probs, logp = softmax_logits(logits)
    assert abs(probs.sum() - 1.0) < 1e-12
    assert np.all(probs > 0)
    np.testing.assert_allclose(np.exp(logp), probs, rtol=1e-12, atol=0)
    entropy = -np.sum(probs * logp)
    assert -1e-12 <= entropy <= math.log(len(logits)) + 1e-12
    shifted, _ = softmax_logits(logits + shift)
    np.testing.assert_allclose(shifted, probs, rtol=1e-9, atol=1e-15)


def test_mse_loss_gradient():
    loss, grad = mse_loss(np.array([1.0, 3.0]), np.array([0.0, 1.0]))
    assert loss == 2.5
    np.testing.assert_array_equal(grad, [1.0, 2.0])


def test_weight_roundtrip_is_exact():
    net = Mlp([4, 16, 3], seed=4)
    w = extract_weights(net)
    other = Mlp([4, 16, 3], seed=99)
    load_weights(other, w)
    assert extract_weights(other) == w
    assert ModelWeights.from_bytes(w.to_bytes()) == w
    assert ModelWeights.from_json(w.to_json()) == w
    assert ModelWeights.from_base64(w.to_base64()) == w


def test_weights_are_snapshots():
    net = Mlp([2, 3, 1], seed=0)
    w = extract_weights(net)
    net.weights[0][0, 0] += 1.0
    assert w.arrays[0][0, 0] != net.weights[0][0, 0]
    with pytest.raises(ValueError):
        w.arrays[0][0, 0] = 5.0


def test_load_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        load_weights(Mlp([4, 8, 3], seed=0), extract_weights(Mlp([4, 9, 3], seed=0)))


def test_blob_layout():
    w = ModelWeights((np.arange(6.0).reshape(2, 3), np.array([7.0])))
    blob = w.to_bytes()
    assert blob[:4] == b"FGW1"
    assert len(blob) == 4 + 4 + (4 + 16) + (4 + 8) + 8 * 7
    with pytest.raises(ValueError):
        ModelWeights.from_bytes(blob + b"\0")
