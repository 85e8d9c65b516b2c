"""Markov jump particle filter over latent frames, adapted to neural dynamics.

Each particle carries a discrete regime label and a Gaussian belief over the
generalized state [mu; mu_dot]. Per frame: the label jumps according to the
transition matrix, the continuous belief is propagated through the regime's
velocity net by an unscented transform (new mu = mu + v, new mu_dot = v with
v the predicted velocity), and the update treats the encoder output as a
direct observation of mu with covariance diag(sigma2), using the gain
K = [P_mu; I] (P_mu + Sigma)^-1 on the latent-mean innovation.

The anomaly signal is the per-frame minimum over particles of the mean
absolute difference between updated and predicted latent means; particles
are then resampled with weights exp(-score / tau).
"""

from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterModel, TransitionMatrix
from .dynamics import DynamicsNet, predict_velocity
from .errors import NumericError
from .gstate import UkfParams, sigma_points, unscented_stats
from .vae import LatentFrame, VaeParams

PREDICT_JITTER = 1e-9


@dataclass(frozen=True)
class AmjpfConfig:
    """Runtime knobs of the filter; recorded in the bundle calibration."""

    n_particles: int = 100
    ukf: UkfParams = UkfParams()
    tau: float = 0.1
    window: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("need at least one particle")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not self.tau > 0.0:
            raise ValueError("resampling temperature must be positive")


@dataclass
class Particle:
    """One filter hypothesis. Arrays are owned by the particle."""

    label: int
    mean: np.ndarray            # generalized state, length 2L
    cov: np.ndarray             # (2L, 2L), symmetric PSD
    weight: float
    predicted_mean: np.ndarray  # last pre-update mean
    updated_mean: np.ndarray    # last post-update mean


@dataclass
class ModelBundle:
    """Everything the filter needs, plus the calibrated threshold."""

    vae: VaeParams
    clusters: ClusterModel
    transitions: TransitionMatrix
    dynamics: list
    config: AmjpfConfig
    threshold: float | None = None

    def __post_init__(self):
        if len(self.dynamics) != self.clusters.n_clusters:
            raise ValueError("need one dynamics net per cluster")
        if self.transitions.matrix.shape != (self.clusters.n_clusters,) * 2:
            raise ValueError("transition matrix size does not match the cluster count")


@dataclass
class AnomalyReport:
    """Per-frame scoring output; frame index 0 seeds the filter and has no row."""

    frame_indices: np.ndarray
    y: np.ndarray
    threshold: float
    raw_flags: np.ndarray
    final_flags: np.ndarray
    winning_clusters: np.ndarray
    weight_reset_frames: list = field(default_factory=list)


def _sample_index(cdf: np.ndarray, u: float) -> int:
    return min(int(np.searchsorted(cdf, u, side="right")), cdf.shape[0] - 1)


def init_filter(bundle: ModelBundle, cfg: AmjpfConfig, first: LatentFrame, rng) -> list:
    """Particle set at frame 0: labels from the empirical regime priors,
    mean [mu0; 0], covariance block-diag(diag(sigma2_0), regime velocity
    covariance), uniform weights. Consumes n_particles uniforms."""
    latent_dim = first.mu.shape[0]
    if bundle.clusters.dim != 2 * latent_dim:
        raise ValueError("bundle cluster dimension does not match the latent size")
    prior_cdf = np.cumsum(bundle.clusters.priors())
    particles = []
    for _ in range(cfg.n_particles):
        label = _sample_index(prior_cdf, rng.random())
        mean = np.concatenate([first.mu, np.zeros(latent_dim)])
        cov = np.zeros((2 * latent_dim, 2 * latent_dim))
        cov[:latent_dim, :latent_dim] = np.diag(first.sigma2)
        cov[latent_dim:, latent_dim:] = bundle.clusters.raw_covariance(label)[latent_dim:, latent_dim:]
        particles.append(Particle(label, mean, cov, 1.0 / cfg.n_particles,
                                  mean.copy(), mean.copy()))
    return particles


def _sigma_points_repaired(mean, cov, ukf: UkfParams):
    try:
        return sigma_points(mean, cov, ukf.alpha, ukf.beta, ukf.kappa)
    except NumericError:
        repaired = (cov + cov.T) * 0.5 + PREDICT_JITTER * np.eye(cov.shape[0])
        return sigma_points(mean, repaired, ukf.alpha, ukf.beta, ukf.kappa)


def predict_step(particles, bundle: ModelBundle, cfg: AmjpfConfig, rng) -> list:
    """One prediction per particle. Consumes len(particles) uniforms, drawn
    up front in particle order so the per-particle work is order-free."""
    us = rng.random(len(particles))
    t_matrix = bundle.transitions.matrix
    latent_dim = bundle.clusters.dim // 2
    out = []
    for p, u in zip(particles, us):
        label = _sample_index(np.cumsum(t_matrix[p.label]), float(u))
        sp = _sigma_points_repaired(p.mean, p.cov, cfg.ukf)
        mus = sp.points[:, :latent_dim]
        mu_dots = sp.points[:, latent_dim:]
        v = predict_velocity(bundle.dynamics[label], mus, fallback_velocity=mu_dots)
        mapped = np.concatenate([mus + v, v], axis=1)
        mean, cov = unscented_stats(sp, mapped)
        noise = bundle.dynamics[label].process_noise_diag
        cov = cov + np.diag(np.concatenate([noise, noise]))
        out.append(Particle(label, mean, cov, p.weight, mean.copy(), p.updated_mean))
    return out


def update_step(particles, obs: LatentFrame):
    """Gain-based correction toward the observed latent mean.

    The gain is [P_mu; I] (P_mu + Sigma)^-1; the covariance uses the Joseph
    form (I - K H) P (I - K H)^T + K Sigma K^T with H = [I 0], which stays
    PSD for this (non-optimal) gain. Returns (particles, innovations).
    """
    latent_dim = obs.mu.shape[0]
    sigma = np.diag(obs.sigma2)
    eye_l = np.eye(latent_dim)
    out, innovations = [], []
    for p in particles:
        if p.mean.shape[0] != 2 * latent_dim:
            raise ValueError("observation length does not match the particle state")
        p_mu = p.cov[:latent_dim, :latent_dim]
        s = p_mu + sigma
        b = np.vstack([p_mu, eye_l])
        try:
            gain = np.linalg.solve(s, b.T).T
        except np.linalg.LinAlgError as exc:
            raise NumericError("innovation covariance is singular") from exc
        innovation = obs.mu - p.mean[:latent_dim]
        mean = p.mean + gain @ innovation
        m = np.eye(2 * latent_dim)
        m[:, :latent_dim] -= gain
        cov = m @ p.cov @ m.T + gain @ sigma @ gain.T
        cov = (cov + cov.T) * 0.5
        out.append(Particle(p.label, mean, cov, p.weight, p.predicted_mean, mean.copy()))
        innovations.append(innovation)
    return out, innovations


def anomaly_and_resample(particles, cfg: AmjpfConfig, rng):
    """Per-frame innovation score, winning regime, and systematic resampling.

    Score per particle: mean absolute updated-minus-predicted over the L
    latent-mean dimensions; the frame signal is the minimum, the winning
    label comes from the argmin particle (lowest index on ties). Consumes
    one uniform. Returns (y, winning_label, particles, weights_reset).
    """
    latent_dim = particles[0].mean.shape[0] // 2
    scores = np.array([
        np.abs(p.updated_mean[:latent_dim] - p.predicted_mean[:latent_dim]).mean()
        for p in particles
    ])
    best = int(scores.argmin())
    y = float(scores[best])
    winning = particles[best].label

    weights = np.exp(-scores / cfg.tau)
    total = weights.sum()
    reset = not np.isfinite(total) or total <= 0.0
    if reset:
        weights = np.full(len(particles), 1.0 / len(particles))
    else:
        weights = weights / total

    n = len(particles)
    positions = (rng.random() + np.arange(n)) / n
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0  # guard against rounding
    chosen = np.searchsorted(cdf, positions, side="right")
    resampled = [
        Particle(particles[i].label, particles[i].mean.copy(), particles[i].cov.copy(),
                 1.0 / n, particles[i].predicted_mean.copy(), particles[i].updated_mean.copy())
        for i in np.minimum(chosen, n - 1)
    ]
    return y, winning, resampled, reset


def calibrate_threshold(train_signal) -> float:
    """Mean plus three population standard deviations of the training signal."""
    ys = np.asarray(train_signal, dtype=np.float64)
    if ys.ndim != 1 or ys.shape[0] < 2:
        raise ValueError("need at least 2 training signal values")
    return float(ys.mean() + 3.0 * ys.std())


def window_filter(flags, window: int) -> np.ndarray:
    """Clear maximal runs of raised flags shorter than the window."""
    if window < 1:
        raise ValueError("window must be >= 1")
    flags = np.asarray(flags, dtype=bool)
    out = np.zeros_like(flags)
    i = 0
    n = flags.shape[0]
    while i < n:
        if not flags[i]:
            i += 1
            continue
        j = i
        while j < n and flags[j]:
            j += 1
        if j - i >= window:
            out[i:j] = True
        i = j
    return out


def filter_pass(bundle: ModelBundle, latents, cfg: AmjpfConfig):
    """Run the filter over a latent sequence without thresholding.

    Returns (y, winning_labels, weight_reset_frames); entry k-1 describes
    frame k. Errors from a frame are re-raised with the frame index.
    """
    if len(latents) < 2:
        raise ValueError("need at least 2 frames to score")
    rng = np.random.default_rng(cfg.seed)
    particles = init_filter(bundle, cfg, latents[0], rng)
    ys, labels, resets = [], [], []
    for k in range(1, len(latents)):
        try:
            particles = predict_step(particles, bundle, cfg, rng)
            particles, _ = update_step(particles, latents[k])
            y, winning, particles, reset = anomaly_and_resample(particles, cfg, rng)
        except (NumericError, ValueError) as exc:
            raise type(exc)(f"frame {k}: {exc}") from exc
        ys.append(y)
        labels.append(winning)
        if reset:
            resets.append(k)
    return np.asarray(ys), np.asarray(labels, dtype=np.int64), resets


def score_sequence(bundle: ModelBundle, latents, cfg: AmjpfConfig) -> AnomalyReport:
    """Full scoring pass: filter, threshold from the bundle, window rule."""
    if bundle.threshold is None:
        raise ValueError("bundle has no calibrated threshold")
    ys, labels, resets = filter_pass(bundle, latents, cfg)
    raw = ys > bundle.threshold
    final = window_filter(raw, cfg.window)
    return AnomalyReport(
        frame_indices=np.arange(1, len(latents)),
        y=ys,
        threshold=bundle.threshold,
        raw_flags=raw,
        final_flags=final,
        winning_clusters=labels,
        weight_reset_frames=resets,
    )
