"""Variational autoencoder over fixed-size frames.

The encoder emits a mean head and a log-variance head of equal length; the
decoder maps a latent vector back to pixel space through a sigmoid. Training
minimizes the negated evidence lower bound: a closed-form KL term against the
standard-normal prior plus a Bernoulli cross-entropy reconstruction term,
estimated with a single reparameterized sample per evaluation.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, TrainingError
from .nn import MlpGrads, MlpParams, init_mlp, mlp_backward, mlp_forward, sgd_step

SIGMA2_MIN = 1e-8
SIGMA2_MAX = 1e8
_LOGV_MIN = float(np.log(SIGMA2_MIN))
_LOGV_MAX = float(np.log(SIGMA2_MAX))


@dataclass(frozen=True)
class Frame:
    """One grayscale frame; pixels are a flat row-major vector in [0, 1]."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pixels", np.asarray(self.pixels, dtype=np.float64))
        if self.pixels.shape != (self.width * self.height,):
            raise ValueError(
                f"pixel count {self.pixels.shape} != width*height = {self.width * self.height}"
            )
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("pixels must be finite")
        if self.pixels.min(initial=0.0) < 0.0 or self.pixels.max(initial=0.0) > 1.0:
            raise ValueError("pixels must lie in [0, 1]")


@dataclass(frozen=True)
class LatentFrame:
    """Per-frame latent Gaussian: mean and per-dimension variance."""

    mu: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))
        object.__setattr__(self, "sigma2", np.asarray(self.sigma2, dtype=np.float64))
        if self.mu.shape != self.sigma2.shape or self.mu.ndim != 1:
            raise ValueError("mu and sigma2 must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.sigma2))):
            raise ValueError("latent entries must be finite")
        if np.any(self.sigma2 <= 0.0):
            raise ValueError("sigma2 entries must be strictly positive")


@dataclass
class VaeParams:
    """Encoder/decoder weights plus the frame geometry they were built for."""

    encoder: MlpParams
    decoder: MlpParams
    latent_dim: int
    width: int
    height: int
    seed: int = 0

    def __post_init__(self):
        if self.encoder.n_out != 2 * self.latent_dim:
            raise ValueError("encoder must output 2*latent_dim values (mu and log-variance heads)")
        if self.decoder.n_in != self.latent_dim:
            raise ValueError("decoder input length must equal latent_dim")
        if self.encoder.n_in != self.width * self.height or self.decoder.n_out != self.encoder.n_in:
            raise ValueError("encoder/decoder sizes do not match the frame geometry")


@dataclass(frozen=True)
class VaeTrainConfig:
    latent_dim: int = 8
    hidden: int = 64
    epochs: int = 300
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0


def encode(p: VaeParams, frame: Frame) -> LatentFrame:
    """Deterministic posterior parameters for one frame."""
    if frame.pixels.shape[0] != p.encoder.n_in:
        raise ValueError(f"frame size {frame.pixels.shape[0]} != encoder input {p.encoder.n_in}")
    out = mlp_forward(p.encoder, frame.pixels)
    mu = out[: p.latent_dim]
    sigma2 = np.clip(np.exp(out[p.latent_dim:]), SIGMA2_MIN, SIGMA2_MAX)
    return LatentFrame(mu=mu, sigma2=sigma2)


def encode_frames(p: VaeParams, frames) -> list:
    """Batched encode over a frame sequence."""
    if not frames:
        return []
    x = np.stack([f.pixels for f in frames])
    if x.shape[1] != p.encoder.n_in:
        raise ValueError(f"frame size {x.shape[1]} != encoder input {p.encoder.n_in}")
    out = mlp_forward(p.encoder, x)
    mus = out[:, : p.latent_dim]
    sigma2s = np.clip(np.exp(out[:, p.latent_dim:]), SIGMA2_MIN, SIGMA2_MAX)
    return [LatentFrame(mu=m, sigma2=s) for m, s in zip(mus, sigma2s)]


def reparameterize(lf: LatentFrame, noise) -> np.ndarray:
    """z = mu + sqrt(sigma2) * noise for standard-normal draws."""
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != lf.mu.shape:
        raise ValueError("noise length must equal the latent dimension")
    return lf.mu + np.sqrt(lf.sigma2) * noise


def decode(p: VaeParams, z) -> Frame:
    """Reconstruction of a latent vector; pixels land in [0, 1] via sigmoid."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (p.latent_dim,):
        raise ValueError(f"latent length {z.shape} != ({p.latent_dim},)")
    logits = mlp_forward(p.decoder, z)
    return Frame(p.width, p.height, _sigmoid(logits))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _elbo_pass(p: VaeParams, x: np.ndarray, eps: np.ndarray):
    """Shared forward computation; x and eps are batched (B, D) / (B, L)."""
    enc_out = mlp_forward(p.encoder, x)
    mu = enc_out[:, : p.latent_dim]
    lv_raw = enc_out[:, p.latent_dim:]
    lv = np.clip(lv_raw, _LOGV_MIN, _LOGV_MAX)
    sigma = np.exp(0.5 * lv)
    z = mu + sigma * eps
    logits = mlp_forward(p.decoder, z)
    # Bernoulli cross-entropy, computed from logits for stability:
    # -[x log s(l) + (1-x) log(1-s(l))] = softplus(l) - x l
    softplus = np.maximum(logits, 0.0) + np.log1p(np.exp(-np.abs(logits)))
    recon = (softplus - x * logits).sum(axis=1)
    kl = 0.5 * (np.exp(lv) + mu * mu - 1.0 - lv).sum(axis=1)
    return mu, lv_raw, lv, sigma, z, logits, recon, kl


def elbo_loss(p: VaeParams, frame: Frame, noise):
    """Single-sample negated ELBO for one frame: (loss, kl, recon).

    kl = sum_l (sigma2 + mu^2 - 1 - log sigma2) / 2 against the N(0, I)
    prior; loss = kl + recon is what training minimizes.
    """
    eps = np.asarray(noise, dtype=np.float64)
    if eps.shape != (p.latent_dim,):
        raise ValueError("noise length must equal the latent dimension")
    _, _, _, _, _, _, recon, kl = _elbo_pass(p, frame.pixels[None, :], eps[None, :])
    loss = float(kl[0] + recon[0])
    if not np.isfinite(loss):
        raise NumericError("ELBO loss is not finite")
    return loss, float(kl[0]), float(recon[0])


def _elbo_grad_batch(p: VaeParams, x: np.ndarray, eps: np.ndarray, scale: float):
    """Gradients of scale * sum over the batch of per-frame losses."""
    mu, lv_raw, lv, sigma, z, logits, recon, kl = _elbo_pass(p, x, eps)
    dlogits = (_sigmoid(logits) - x) * scale
    dec_grads, dz = mlp_backward(p.decoder, z, dlogits)
    dmu = dz + scale * mu
    dlv = dz * (0.5 * sigma * eps) + scale * 0.5 * (np.exp(lv) - 1.0)
    # the clamp on the log-variance head is flat outside its bounds
    dlv = np.where((lv_raw > _LOGV_MIN) & (lv_raw < _LOGV_MAX), dlv, 0.0)
    enc_grads, _ = mlp_backward(p.encoder, x, np.concatenate([dmu, dlv], axis=1))
    loss = scale * float((kl + recon).sum())
    return enc_grads, dec_grads, loss


def elbo_grad(p: VaeParams, frame: Frame, noise):
    """Analytic gradients of elbo_loss at fixed noise: (encoder, decoder)."""
    eps = np.asarray(noise, dtype=np.float64)
    if eps.shape != (p.latent_dim,):
        raise ValueError("noise length must equal the latent dimension")
    enc_grads, dec_grads, _ = _elbo_grad_batch(p, frame.pixels[None, :], eps[None, :], 1.0)
    return enc_grads, dec_grads


def train_vae(frames, cfg: VaeTrainConfig) -> VaeParams:
    """Mini-batch gradient descent on the negated ELBO.

    All randomness (init, shuffling, reparameterization noise) flows through
    one generator seeded from cfg.seed, so a rerun is bit-identical.
    """
    if not frames:
        raise ValueError("need at least one training frame")
    width, height = frames[0].width, frames[0].height
    for f in frames:
        if (f.width, f.height) != (width, height):
            raise ValueError("all training frames must share one geometry")
    d = width * height
    rng = np.random.default_rng(cfg.seed)
    params = VaeParams(
        encoder=init_mlp((d, cfg.hidden, 2 * cfg.latent_dim), rng=rng),
        decoder=init_mlp((cfg.latent_dim, cfg.hidden, d), rng=rng),
        latent_dim=cfg.latent_dim,
        width=width,
        height=height,
        seed=cfg.seed,
    )
    x_all = np.stack([f.pixels for f in frames])
    n = x_all.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = x_all[idx]
            eps = rng.standard_normal((idx.shape[0], cfg.latent_dim))
            enc_g, dec_g, loss = _elbo_grad_batch(params, xb, eps, 1.0 / idx.shape[0])
            if not np.isfinite(loss):
                raise TrainingError(f"VAE training diverged at epoch {epoch}")
            params = VaeParams(
                encoder=sgd_step(params.encoder, enc_g, cfg.learning_rate),
                decoder=sgd_step(params.decoder, dec_g, cfg.learning_rate),
                latent_dim=cfg.latent_dim,
                width=width,
                height=height,
                seed=cfg.seed,
            )
    return params


def batch_loss(p: VaeParams, frames, rng) -> float:
    """Mean per-frame loss over a frame list; consumes one noise draw each."""
    x = np.stack([f.pixels for f in frames])
    eps = rng.standard_normal((x.shape[0], p.latent_dim))
    _, _, _, _, _, _, recon, kl = _elbo_pass(p, x, eps)
    return float((recon + kl).mean())
