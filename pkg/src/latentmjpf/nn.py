"""Small fully connected networks with hand-rolled reverse-mode gradients.

Hidden layers share one activation (tanh by default: smooth and bounded,
which keeps velocity regression on normalized latents stable); the output
layer is always linear. Inputs may be single vectors ``(n,)`` or batches
``(B, n)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

ACTIVATIONS = ("tanh", "relu", "identity")


def _act(name: str, x: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(x)
    if name == "relu":
        return np.maximum(x, 0.0)
    return x


def _dact(name: str, pre: np.ndarray) -> np.ndarray:
    if name == "tanh":
        t = np.tanh(pre)
        return 1.0 - t * t
    if name == "relu":
        return (pre > 0.0).astype(np.float64)
    return np.ones_like(pre)


@dataclass
class MlpParams:
    """Weights of one network. Treated as immutable after construction.

    weights[i] has shape (layer_sizes[i+1], layer_sizes[i]); biases[i] has
    shape (layer_sizes[i+1],).
    """

    layer_sizes: tuple
    weights: list = field(repr=False)
    biases: list = field(repr=False)
    activation: str = "tanh"

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("weights/biases do not chain with layer_sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_sizes[i + 1], self.layer_sizes[i])
            if w.shape != want or b.shape != (want[0],):
                raise ValueError(f"layer {i}: expected W{want}, b({want[0]},)")

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_out(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class MlpGrads:
    """Gradient container, same shapes as MlpParams."""

    weights: list
    biases: list


def init_mlp(layer_sizes, activation: str = "tanh", rng=None, seed: int = 0) -> MlpParams:
    """Glorot-uniform initialization, deterministic from rng/seed."""
    if rng is None:
        rng = np.random.default_rng(seed)
    sizes = tuple(int(s) for s in layer_sizes)
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return MlpParams(sizes, weights, biases, activation)


def _forward_cache(p: MlpParams, x: np.ndarray):
    """Returns (output, layer_inputs, pre_activations)."""
    a = x
    inputs, pres = [], []
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        inputs.append(a)
        pre = a @ w.T + b
        pres.append(pre)
        a = pre if i == last else _act(p.activation, pre)
    return a, inputs, pres


def mlp_forward(p: MlpParams, x) -> np.ndarray:
    """Deterministic forward pass; x is (n_in,) or (B, n_in)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != p.n_in:
        raise ValueError(f"input length {x.shape[-1]} != first layer size {p.n_in}")
    out, _, _ = _forward_cache(p, x)
    return out


def mlp_backward(p: MlpParams, x, grad_out):
    """Reverse-mode pass for an arbitrary upstream adjoint on the output.

    Returns (MlpGrads, grad_x). Batched inputs accumulate (sum) over the
    batch, matching a loss that sums per-sample terms.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(grad_out, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    gb = g[None, :] if single else g
    if xb.shape[-1] != p.n_in or gb.shape[-1] != p.n_out or xb.shape[0] != gb.shape[0]:
        raise ValueError("input/adjoint shapes do not match the network")
    _, inputs, pres = _forward_cache(p, xb)
    gw = [None] * len(p.weights)
    gb_ = [None] * len(p.biases)
    delta = gb
    for i in range(len(p.weights) - 1, -1, -1):
        if i < len(p.weights) - 1:
            delta = delta * _dact(p.activation, pres[i])
        gw[i] = delta.T @ inputs[i]
        gb_[i] = delta.sum(axis=0)
        delta = delta @ p.weights[i]
    grad_x = delta[0] if single else delta
    return MlpGrads(gw, gb_), grad_x


def mlp_grad(p: MlpParams, x, target) -> MlpGrads:
    """Gradient of the squared-error loss sum(||f(x) - target||^2) / 2."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if t.shape[-1] != p.n_out or t.ndim != x.ndim:
        raise ValueError("target shape does not match the network output")
    residual = mlp_forward(p, x) - t
    grads, _ = mlp_backward(p, x, residual)
    return grads


def sgd_step(p: MlpParams, g: MlpGrads, lr: float) -> MlpParams:
    """One gradient-descent step; returns new parameters, inputs untouched."""
    if not lr > 0.0:
        raise ValueError("learning rate must be positive")
    for gw, gb in zip(g.weights, g.biases):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise NumericError("non-finite gradient entries")
    weights = [w - lr * gw for w, gw in zip(p.weights, g.weights)]
    biases = [b - lr * gb for b, gb in zip(p.biases, g.biases)]
    return MlpParams(p.layer_sizes, weights, biases, p.activation)
