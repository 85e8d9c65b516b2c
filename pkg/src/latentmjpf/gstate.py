"""Generalized states and the unscented transform.

A generalized state stacks a latent mean with its first time difference,
``[mu; mu_dot]`` with ``mu_dot[k] = mu[k] - mu[k-1]`` at unit frame spacing.
The sigma-point machinery is shared by dynamics-training augmentation
(dimension L, diagonal covariance) and by the filter (dimension 2L).
"""

from dataclasses import dataclass

import numpy as np

from .linalg import matrix_sqrt_psd, symmetrize


@dataclass(frozen=True)
class UkfParams:
    """Unscented-transform scaling. alpha spreads points, beta weights the
    center for covariance (2 is optimal for Gaussians), kappa is the
    secondary scale."""

    alpha: float = 0.1
    beta: float = 2.0
    kappa: float = 0.0

    def lam(self, n: int) -> float:
        return self.alpha ** 2 * (n + self.kappa) - n


@dataclass(frozen=True)
class GeneralizedState:
    mu: np.ndarray
    mu_dot: np.ndarray

    def __post_init__(self):
        if self.mu.shape != self.mu_dot.shape or self.mu.ndim != 1:
            raise ValueError("mu and mu_dot must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.mu_dot))):
            raise ValueError("generalized state entries must be finite")

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.mu, self.mu_dot])


@dataclass
class SigmaPointSet:
    """2n+1 deterministic samples encoding a Gaussian's first two moments.

    points has shape (2n+1, n); point 0 is the mean, points i and i+n are
    symmetric about it. w_mean sums to 1.
    """

    points: np.ndarray
    w_mean: np.ndarray
    w_cov: np.ndarray
    lam: float


def build_gs_sequence(latents) -> list:
    """Backward differences over a latent sequence; the derivative is
    attached to the later frame so entry j is causal at frame j+1.

    Output length is len(latents) - 1.
    """
    if len(latents) < 2:
        raise ValueError("need at least 2 latent frames to difference")
    out = []
    for prev, cur in zip(latents[:-1], latents[1:]):
        out.append(GeneralizedState(mu=cur.mu.copy(), mu_dot=cur.mu - prev.mu))
    return out


def sigma_points(mean, cov, alpha: float, beta: float, kappa: float) -> SigmaPointSet:
    """Scaled sigma points of N(mean, cov) with their mean/cov weights.

    lam = alpha^2 (n + kappa) - n; points 1..n add the columns of
    sqrt((n + lam) cov), points n+1..2n subtract them. Weights:
    w_mean[0] = lam/(n+lam), w_cov[0] = w_mean[0] + 1 - alpha^2 + beta,
    all others 1/(2(n+lam)).
    """
    mean = np.asarray(mean, dtype=np.float64)
    n = mean.shape[0]
    lam = alpha ** 2 * (n + kappa) - n
    scale = n + lam
    if scale <= 0.0:
        raise ValueError("alpha^2 (n + kappa) must be positive")
    root = matrix_sqrt_psd(np.asarray(cov, dtype=np.float64) * scale)
    points = np.empty((2 * n + 1, n))
    points[0] = mean
    points[1:n + 1] = mean + root.T
    points[n + 1:] = mean - root.T
    w_mean = np.full(2 * n + 1, 1.0 / (2.0 * scale))
    w_cov = w_mean.copy()
    w_mean[0] = lam / scale
    w_cov[0] = lam / scale + (1.0 - alpha ** 2 + beta)
    return SigmaPointSet(points, w_mean, w_cov, lam)


def unscented_stats(sp: SigmaPointSet, transformed):
    """Weighted mean and covariance of transformed sigma points.

    The covariance is symmetrized before returning.
    """
    t = np.asarray(transformed, dtype=np.float64)
    if t.shape[0] != sp.points.shape[0]:
        raise ValueError(f"expected {sp.points.shape[0]} transformed points, got {t.shape[0]}")
    mean = sp.w_mean @ t
    diff = t - mean
    cov = (diff.T * sp.w_cov) @ diff
    return mean, symmetrize(cov)
