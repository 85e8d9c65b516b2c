import numpy as np
import pytest

from latentmjpf.errors import NumericError
from latentmjpf.nn import MlpGrads, MlpParams, init_mlp, mlp_forward, mlp_grad, sgd_step


def sse_loss(p, x, target):
    r = mlp_forward(p, x) - target
    return 0.5 * float(np.sum(r * r))


def fd_gradient(p, x, target, h=1e-5):
    """Central finite differences of the squared-error loss, entry by entry."""
    gw, gb = [], []
    for li in range(len(p.weights)):
        g = np.zeros_like(p.weights[li])
        for idx in np.ndindex(*p.weights[li].shape):
            w_plus = [w.copy() for w in p.weights]
            w_minus = [w.copy() for w in p.weights]
            w_plus[li][idx] += h
            w_minus[li][idx] -= h
            lp = sse_loss(MlpParams(p.layer_sizes, w_plus, p.biases, p.activation), x, target)
            lm = sse_loss(MlpParams(p.layer_sizes, w_minus, p.biases, p.activation), x, target)
            g[idx] = (lp - lm) / (2 * h)
        gw.append(g)
        g = np.zeros_like(p.biases[li])
        for idx in np.ndindex(*p.biases[li].shape):
            b_plus = [b.copy() for b in p.biases]
            b_minus = [b.copy() for b in p.biases]
            b_plus[li][idx] += h
            b_minus[li][idx] -= h
            lp = sse_loss(MlpParams(p.layer_sizes, p.weights, b_plus, p.activation), x, target)
            lm = sse_loss(MlpParams(p.layer_sizes, p.weights, b_minus, p.activation), x, target)
            g[idx] = (lp - lm) / (2 * h)
        gb.append(g)
    return MlpGrads(gw, gb)


def zero_mlp(sizes, activation="identity"):
    weights = [np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(o) for o in sizes[1:]]
    return MlpParams(tuple(sizes), weights, biases, activation)


def test_forward_zero_network():
    p = zero_mlp((3, 4, 2))
    assert np.array_equal(mlp_forward(p, np.ones(3)), np.zeros(2))


def test_forward_single_identity_layer():
    p = MlpParams((3, 3), [np.eye(3)], [np.zeros(3)], "identity")
    x = np.array([0.5, -1.0, 2.0])
    assert np.array_equal(mlp_forward(p, x), x)


def test_forward_matches_hand_unrolled_tanh():
    p = init_mlp((2, 3, 2), activation="tanh", seed=42)
    x = np.array([0.3, -0.7])
    hidden = np.tanh(p.weights[0] @ x + p.biases[0])
    expected = p.weights[1] @ hidden + p.biases[1]
    assert np.allclose(mlp_forward(p, x), expected, atol=1e-14)


def test_forward_batched_matches_loop():
    p = init_mlp((3, 5, 2), seed=1)
    xb = np.random.default_rng(2).normal(size=(4, 3))
    batched = mlp_forward(p, xb)
    for i in range(4):
        assert np.allclose(batched[i], mlp_forward(p, xb[i]))


def test_forward_rejects_wrong_length():
    p = init_mlp((3, 2), seed=0)
    with pytest.raises(ValueError):
        mlp_forward(p, np.zeros(4))


def test_grad_zero_residual():
    p = MlpParams((2, 2), [np.eye(2)], [np.zeros(2)], "identity")
    x = np.array([1.0, 2.0])
    g = mlp_grad(p, x, x)  # forward(x) == x, so the residual vanishes
    assert all(np.array_equal(w, 0 * w) for w in g.weights)
    assert all(np.array_equal(b, 0 * b) for b in g.biases)


def test_grad_hand_computed_scalar():
    # f(x) = w x with w=2, x=1, target 0: L = (wx)^2/2, dL/dw = w x^2 = 2
    p = MlpParams((1, 1), [np.array([[2.0]])], [np.zeros(1)], "identity")
    g = mlp_grad(p, np.array([1.0]), np.array([0.0]))
    assert g.weights[0][0, 0] == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("sizes,activation", [
    ((3, 5, 2), "tanh"),
    ((4, 16, 16, 3), "tanh"),
    ((2, 8, 2), "relu"),
])
def test_grad_matches_finite_differences(sizes, activation):
    rng = np.random.default_rng(hash(sizes) % (2 ** 31))
    p = init_mlp(sizes, activation=activation, rng=rng)
    x = rng.normal(size=sizes[0])
    target = rng.normal(size=sizes[-1])
    analytic = mlp_grad(p, x, target)
    numeric = fd_gradient(p, x, target)
    for ga, gn in zip(analytic.weights + analytic.biases, numeric.weights + numeric.biases):
        denom = np.abs(gn) + 1e-8
        assert (np.abs(ga - gn) / denom).max() < 1e-4


def test_sgd_zero_gradient_is_identity():
    p = init_mlp((2, 3, 1), seed=3)
    g = MlpGrads([np.zeros_like(w) for w in p.weights], [np.zeros_like(b) for b in p.biases])
    q = sgd_step(p, g, 0.1)
    assert all(np.array_equal(a, b) for a, b in zip(p.weights, q.weights))


def test_sgd_hand_computed():
    p = MlpParams((1, 1), [np.array([[1.0]])], [np.zeros(1)], "identity")
    g = MlpGrads([np.array([[0.5]])], [np.zeros(1)])
    q = sgd_step(p, g, 0.1)
    assert q.weights[0][0, 0] == pytest.approx(0.95, abs=1e-15)


def test_sgd_descends_convex_quadratic():
    # L(w) = (w - 3)^2 / 2 via a 1-1 identity net on x=1, target=3
    p = MlpParams((1, 1), [np.array([[0.0]])], [np.zeros(1)], "identity")
    x, t = np.array([1.0]), np.array([3.0])
    losses = [sse_loss(p, x, t)]
    for _ in range(100):
        p = sgd_step(p, mlp_grad(p, x, t), 0.05)
        losses.append(sse_loss(p, x, t))
    assert all(b < a for a, b in zip(losses[:-1], losses[1:]))


def test_sgd_rejects_bad_learning_rate():
    p = init_mlp((1, 1), seed=0)
    g = mlp_grad(p, np.ones(1), np.zeros(1))
    with pytest.raises(ValueError):
        sgd_step(p, g, 0.0)


def test_sgd_rejects_non_finite_gradient():
    p = init_mlp((1, 1), seed=0)
    g = MlpGrads([np.array([[np.inf]])], [np.zeros(1)])
    with pytest.raises(NumericError):
        sgd_step(p, g, 0.1)


def test_init_is_deterministic():
    a = init_mlp((3, 4, 2), seed=9)
    b = init_mlp((3, 4, 2), seed=9)
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
