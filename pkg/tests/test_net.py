import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tripart.net import (
    Gradients,
    OptimizerSpec,
    backward,
    finite_diff_check,
    forward,
    init_classifier,
    predict_labels,
    sgd_step,
)


def reference_forward(state, x):
    """Straight-line per-sample forward pass using plain Python floats."""
    out = []
    for row in x:
        a = [float(v) for v in row]
        for li, (w, b) in enumerate(zip(state.weights, state.biases)):
            z = [sum(a[i] * w[i, j] for i in range(len(a))) + b[j] for j in range(w.shape[1])]
            if li < len(state.weights) - 1:
                z = [max(v, 0.0) if state.activation == "relu" else math.tanh(v) for v in z]
            a = z
        m = max(a)
        e = [math.exp(v - m) for v in a]
        s = sum(e)
        out.append([v / s for v in e])
    return np.array(out)


def test_init_deterministic_and_distinct():
    a = init_classifier([2, 8, 4], "relu", 7)
    b = init_classifier([2, 8, 4], "relu", 7)
    c = init_classifier([2, 8, 4], "relu", 8)
    assert all(np.array_equal(x, y) for x, y in zip(a.params(), b.params()))
    assert any(not np.array_equal(x, y) for x, y in zip(a.params(), c.params()))
    assert all(np.all(m == 0) for m in a.momentum_w + a.momentum_b)


@pytest.mark.parametrize("sizes", [[2], [], [2, 0, 3]])
def test_init_rejects_bad_sizes(sizes):
    with pytest.raises(ValueError):
        init_classifier(sizes)


def test_init_bound():
    s = init_classifier([5, 7, 3], "tanh", 0)
    assert np.abs(s.weights[0]).max() <= np.sqrt(6 / 12)
    assert s.weights[-1].shape == (7, 3)


def test_zero_weights_give_uniform():
    s = init_classifier([3, 5, 4], "relu", 0)
    for p in s.params():
        p[...] = 0
    probs = forward(s, np.random.default_rng(0).normal(size=(6, 3)))
    np.testing.assert_allclose(probs, 0.25, atol=0, rtol=0)
    assert list(predict_labels(s, np.ones((2, 3)))) == [0, 0]


@pytest.mark.parametrize("activation", ["relu", "tanh"])
def test_forward_matches_reference(activation):
    rng = np.random.default_rng(3)
    s = init_classifier([3, 6, 5, 4], activation, 11)
    x = rng.normal(size=(7, 3))
    np.testing.assert_allclose(forward(s, x), reference_forward(s, x), rtol=1e-12, atol=1e-14)


def test_forward_dimension_mismatch():
    s = init_classifier([3, 4], "relu", 0)
    with pytest.raises(ValueError):
        forward(s, np.zeros((2, 2)))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(1, 20), scale=st.floats(0.1, 50))
def test_softmax_rows_normalized(seed, n, scale):
    rng = np.random.default_rng(seed)
    s = init_classifier([3, 8, 5], "relu", seed)
    p = forward(s, scale * rng.normal(size=(n, 3)))
    assert np.all(p >= 0) and np.all(p <= 1)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_predict_batch_equals_per_sample():
    rng = np.random.default_rng(5)
    s = init_classifier([2, 8, 4], "relu", 2)
    x = rng.normal(size=(30, 2))
    per_sample = [int(np.argmax(forward(s, row[None, :])[0])) for row in x]
    assert list(predict_labels(s, x)) == per_sample


def test_argmax_tie_break_lowest_index():
    s = init_classifier([1, 3], "relu", 0)
    s.weights[0][...] = 0
    s.biases[0][...] = np.array([0.1, 0.7, 0.2])
    assert predict_labels(s, np.zeros((1, 1)))[0] == 1
    s.biases[0][...] = np.array([0.5, 0.5, 0.1])
    assert predict_labels(s, np.zeros((1, 1)))[0] == 0


def test_temperature_scaling_keeps_argmax():
    rng = np.random.default_rng(1)
    s = init_classifier([2, 6, 4], "relu", 4)
    x = rng.normal(size=(20, 2))
    base = predict_labels(s, x)
    s.weights[-1] *= 3.0
    s.biases[-1] *= 3.0
    assert np.array_equal(predict_labels(s, x), base)


def test_backward_linearity():
    rng = np.random.default_rng(0)
    s = init_classifier([2, 5, 3], "tanh", 1)
    x = rng.normal(size=(4, 2))
    zero = backward(s, x, np.zeros((4, 3)))
    assert all(np.all(g == 0) for g in zero.flat())
    g = rng.normal(size=(4, 3))
    one, two = backward(s, x, g), backward(s, x, 2 * g)
    for a, b in zip(one.flat(), two.flat()):
        np.testing.assert_allclose(b, 2 * a, rtol=1e-13, atol=1e-15)
    with pytest.raises(ValueError):
        backward(s, x, np.zeros((4, 2)))


def test_backward_against_finite_differences_of_linear_functional():
    rng = np.random.default_rng(9)
    s = init_classifier([2, 4, 3], "tanh", 5)
    x = rng.normal(size=(5, 2))
    up = rng.normal(size=(5, 3))
    grads = backward(s, x, up)
    h = 1e-6
    for p, g in zip(s.params(), grads.flat()):
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + h
            f_up = float((forward(s, x) * up).sum())
            p[idx] = orig - h
            f_dn = float((forward(s, x) * up).sum())
            p[idx] = orig
            assert abs((f_up - f_dn) / (2 * h) - g[idx]) < 1e-7


@pytest.mark.parametrize("kind", ["ce", "hard", "consistency", "total"])
@pytest.mark.parametrize("activation", ["relu", "tanh"])
def test_finite_diff_check(kind, activation):
    rng = np.random.default_rng(2)
    s = init_classifier([2, 4, 3], activation, 3)
    x = rng.normal(size=(8, 2))
    y = rng.integers(0, 3, size=8)
    assert finite_diff_check(s, x, y, kind) < 1e-4


def test_finite_diff_check_zero_weights_finite():
    s = init_classifier([2, 4, 3], "relu", 0)
    for p in s.params():
        p[...] = 0
    x = np.random.default_rng(0).normal(size=(8, 2))
    err = finite_diff_check(s, x, np.arange(8) % 3, "ce")
    assert np.isfinite(err)


def test_finite_diff_check_size_limit():
    s = init_classifier([20, 30, 3], "relu", 0)
    with pytest.raises(ValueError):
        finite_diff_check(s, np.zeros((2, 20)), [0, 1], "ce")


def _grads_like(state, value):
    return Gradients([np.full_like(w, value) for w in state.weights], [np.full_like(b, value) for b in state.biases])


def test_sgd_plain_step():
    s = init_classifier([2, 3], "relu", 0)
    before = [p.copy() for p in s.params()]
    g = _grads_like(s, 0.25)
    sgd_step(s, g, OptimizerSpec(learning_rate=1.0, momentum=0.0, weight_decay=0.0), 0)
    for b, a in zip(before, s.params()):
        np.testing.assert_array_equal(a, b - 0.25)


def test_sgd_momentum_recurrence():
    s = init_classifier([2, 3], "relu", 0)
    spec = OptimizerSpec(learning_rate=0.1, momentum=0.9, weight_decay=0.0)
    g = _grads_like(s, 1.0)
    p0 = s.weights[0].copy()
    sgd_step(s, g, spec, 0)
    p1 = s.weights[0].copy()
    sgd_step(s, g, spec, 0)
    step1, step2 = p0 - p1, p1 - s.weights[0]
    np.testing.assert_allclose(step2, 1.9 * step1, rtol=1e-12)


def test_sgd_weight_decay_term():
    s = init_classifier([2, 3], "relu", 0)
    p0 = s.weights[0].copy()
    sgd_step(s, _grads_like(s, 0.0), OptimizerSpec(learning_rate=0.5, momentum=0.0, weight_decay=0.1), 0)
    np.testing.assert_allclose(s.weights[0], p0 - 0.5 * 0.1 * p0, rtol=1e-14)


def test_lr_schedule():
    spec = OptimizerSpec(learning_rate=0.02, lr_schedule=[(150, 0.1), (200, 0.1)])
    assert spec.lr_at(149) == 0.02
    assert spec.lr_at(150) == pytest.approx(0.002)
    assert spec.lr_at(201) == pytest.approx(0.02 * 0.01, rel=1e-12)
    with pytest.raises(ValueError):
        OptimizerSpec(lr_schedule=[(5, 0.1), (5, 0.1)])
    with pytest.raises(ValueError):
        OptimizerSpec(lr_schedule=[(5, 0.0)])


def test_sgd_shape_mismatch():
    s = init_classifier([2, 3], "relu", 0)
    bad = Gradients([np.zeros((3, 2))], [np.zeros(3)])
    with pytest.raises(ValueError):
        sgd_step(s, bad, OptimizerSpec(), 0)


def test_copy_is_independent():
    s = init_classifier([2, 3], "relu", 0)
    c = s.copy()
    c.weights[0] += 1
    assert not np.array_equal(c.weights[0], s.weights[0])
    assert s.rng.integers(1 << 30) == c.rng.integers(1 << 30)
