"""Per-regime velocity models: small networks mapping mu_k to mu_dot_{k+1}.

Training pairs are augmented with sigma points drawn from each frame's
latent variance (diagonal covariance), pairing the i-th point at frame k
with the i-th point at frame k+1. Regimes with too few pairs fall back to a
constant-velocity rule whose process noise comes from the regime covariance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, TrainingError
from .gstate import UkfParams, sigma_points
from .nn import MlpParams, init_mlp, mlp_forward, mlp_grad, sgd_step

NOISE_FLOOR = 1e-9


@dataclass
class DynamicsNet:
    """One regime's velocity predictor plus its residual noise estimate.

    process_noise_diag holds the diagonal of the residual covariance,
    floored at NOISE_FLOOR. fallback nets have no weights and predict the
    caller-supplied current velocity unchanged.
    """

    cluster: int
    net: MlpParams | None
    process_noise_diag: np.ndarray
    fallback: bool

    def __post_init__(self):
        self.process_noise_diag = np.asarray(self.process_noise_diag, dtype=np.float64)
        if np.any(self.process_noise_diag < NOISE_FLOOR):
            raise ValueError(f"process noise diagonal must be >= {NOISE_FLOOR}")


@dataclass(frozen=True)
class DynTrainConfig:
    hidden: int = 0  # 0 means 4 * latent_dim
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-2
    seed: int = 0


def min_pairs_to_train(latent_dim: int) -> int:
    """Below this pair count a regime uses the constant-velocity fallback."""
    return 10 * (2 * latent_dim)


def build_training_pairs(latents, gs_list, labels, cluster: int, ukf: UkfParams):
    """(inputs, targets) arrays for one regime, sigma-point augmented.

    For every state j of the regime with a successor, the base pair maps
    gs[j].mu to gs[j+1].mu - gs[j].mu, and the 2L augmented pairs map the
    sigma points of (mu_j, sigma2_j) to the index-matched differences of the
    sigma points at j+1. A regime with no successors yields empty arrays.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != len(gs_list):
        raise ValueError("labels must align with the generalized-state sequence")
    xs, ys = [], []
    for j in range(len(gs_list) - 1):
        if labels[j] != cluster:
            continue
        # gs[j] describes frame j+1, so its variance lives in latents[j+1]
        lo, hi = latents[j + 1], latents[j + 2]
        pts_k = sigma_points(lo.mu, np.diag(lo.sigma2), ukf.alpha, ukf.beta, ukf.kappa).points
        pts_k1 = sigma_points(hi.mu, np.diag(hi.sigma2), ukf.alpha, ukf.beta, ukf.kappa).points
        xs.append(pts_k)
        ys.append(pts_k1 - pts_k)
    if not xs:
        dim = gs_list[0].mu.shape[0] if gs_list else 0
        return np.empty((0, dim)), np.empty((0, dim))
    return np.concatenate(xs), np.concatenate(ys)


def train_dynamics(inputs, targets, cfg: DynTrainConfig, cluster: int,
                   fallback_noise_diag) -> DynamicsNet:
    """Squared-error training of one regime net; returns the fallback when
    there are fewer than min_pairs_to_train(L) pairs.

    fallback_noise_diag is the velocity-block diagonal of the regime
    covariance, used as process noise when no net is trained.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if inputs.shape != targets.shape or inputs.ndim != 2:
        raise ValueError("inputs and targets must be matching (n, L) arrays")
    latent_dim = inputs.shape[1]
    if inputs.shape[0] < min_pairs_to_train(latent_dim):
        noise = np.maximum(np.asarray(fallback_noise_diag, dtype=np.float64), NOISE_FLOOR)
        return DynamicsNet(cluster=cluster, net=None, process_noise_diag=noise, fallback=True)

    rng = np.random.default_rng(cfg.seed)
    hidden = cfg.hidden if cfg.hidden > 0 else 4 * latent_dim
    net = init_mlp((latent_dim, hidden, latent_dim), rng=rng)
    n = inputs.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            grads = mlp_grad(net, inputs[idx], targets[idx])
            for g in grads.weights:
                g /= idx.shape[0]
            for g in grads.biases:
                g /= idx.shape[0]
            try:
                net = sgd_step(net, grads, cfg.learning_rate)
            except NumericError as exc:
                raise TrainingError(f"dynamics training diverged at epoch {epoch}") from exc
    residual = mlp_forward(net, inputs) - targets
    noise = np.maximum(residual.var(axis=0), NOISE_FLOOR)
    return DynamicsNet(cluster=cluster, net=net, process_noise_diag=noise, fallback=False)


def predict_velocity(d: DynamicsNet, mu, fallback_velocity=None) -> np.ndarray:
    """Velocity prediction for one latent mean (or a batch of them).

    Fallback nets return fallback_velocity unchanged (constant-velocity
    rule); trained nets run the forward pass.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if d.fallback:
        if fallback_velocity is None:
            raise ValueError("fallback dynamics need the current velocity")
        v = np.asarray(fallback_velocity, dtype=np.float64)
        if v.shape != mu.shape:
            raise ValueError("fallback velocity shape must match mu")
        return v.copy()
    out = mlp_forward(d.net, mu)
    if not np.all(np.isfinite(out)):
        raise ValueError("velocity prediction is not finite")
    return out
