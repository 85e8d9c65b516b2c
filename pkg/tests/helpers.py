"""Hand-built model fixtures shared across test modules."""

import numpy as np

from latentmjpf.clustering import ClusterModel, TransitionMatrix
from latentmjpf.dynamics import DynamicsNet
from latentmjpf.mjpf import AmjpfConfig, ModelBundle
from latentmjpf.nn import MlpParams
from latentmjpf.vae import LatentFrame, VaeParams


def tiny_vae(latent_dim):
    d = 4
    enc = MlpParams((d, 2 * latent_dim), [np.zeros((2 * latent_dim, d))],
                    [np.zeros(2 * latent_dim)], "tanh")
    dec = MlpParams((latent_dim, d), [np.zeros((d, latent_dim))], [np.zeros(d)], "tanh")
    return VaeParams(enc, dec, latent_dim, 2, 2)


def make_bundle(latent_dim=2, n_clusters=1, t_matrix=None, dynamics=None,
                member_counts=None, cov_scale=1.0, threshold=None, **cfg_kw):
    dim = 2 * latent_dim
    c = n_clusters
    clusters = ClusterModel(
        n_clusters=c,
        centroids=np.zeros((c, dim)),
        covariances=np.stack([cov_scale * np.eye(dim)] * c),
        radii=np.zeros(c),
        member_counts=np.asarray(member_counts if member_counts is not None else [10] * c),
        feature_mean=np.zeros(dim),
        feature_scale=np.ones(dim),
    )
    if t_matrix is None:
        t_matrix = np.full((c, c), 1.0 / c)
    if dynamics is None:
        dynamics = [DynamicsNet(cluster=s, net=None,
                                process_noise_diag=np.full(latent_dim, 1e-9),
                                fallback=True) for s in range(c)]
    config = AmjpfConfig(**cfg_kw)
    return ModelBundle(vae=tiny_vae(latent_dim), clusters=clusters,
                       transitions=TransitionMatrix(np.asarray(t_matrix, dtype=float), 0.0),
                       dynamics=dynamics, config=config, threshold=threshold)


def linear_net(g):
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    p = MlpParams((n, n), [g.copy()], [np.zeros(n)], "identity")
    return DynamicsNet(cluster=0, net=p, process_noise_diag=np.full(n, 1e-9), fallback=False)


def obs(mu, sigma2=1.0):
    mu = np.asarray(mu, dtype=float)
    return LatentFrame(mu=mu, sigma2=np.full(mu.shape, sigma2))


def random_walk_observations(rng, latent_dim, n, sigma2=1.0):
    mus = np.cumsum(rng.normal(scale=0.3, size=(n, latent_dim)), axis=0)
    return [LatentFrame(mu=m, sigma2=np.full(latent_dim, sigma2)) for m in mus]
