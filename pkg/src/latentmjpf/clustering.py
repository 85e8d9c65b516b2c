"""Regime discovery: k-means over generalized states plus regime statistics.

Features are standardized per dimension before any distance is computed
(latent means and their differences live on different scales), so centroids,
covariances and radii are stored in standardized space together with the
standardization parameters. Consumers that need data-scale covariances
(process-noise fallbacks, filter initialization) de-standardize through
:meth:`ClusterModel.raw_covariance`.
"""

from dataclasses import dataclass, field

import numpy as np

MAX_LLOYD_ITERATIONS = 300
COV_REGULARIZATION = 1e-9


@dataclass
class ClusterModel:
    """Fitted regime statistics; immutable after fitting."""

    n_clusters: int
    centroids: np.ndarray        # (C, d), standardized space
    covariances: np.ndarray      # (C, d, d), standardized space
    radii: np.ndarray            # (C,), max member distance to centroid
    member_counts: np.ndarray    # (C,)
    feature_mean: np.ndarray     # (d,)
    feature_scale: np.ndarray    # (d,), strictly positive
    # training-only diagnostics; absent on a model loaded from disk
    labels: np.ndarray | None = field(default=None, repr=False)
    objective_trace: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.feature_mean) / self.feature_scale

    def raw_covariance(self, cluster: int) -> np.ndarray:
        """Cluster covariance mapped back to data scale."""
        s = self.feature_scale
        return self.covariances[cluster] * np.outer(s, s)

    def priors(self) -> np.ndarray:
        """Empirical regime frequencies over the training set."""
        return self.member_counts / self.member_counts.sum()


@dataclass
class TransitionMatrix:
    """Row-stochastic regime transition probabilities."""

    matrix: np.ndarray
    epsilon: float

    def __post_init__(self):
        rows = self.matrix.sum(axis=1)
        if np.any(self.matrix < 0.0) or np.max(np.abs(rows - 1.0)) > 1e-9:
            raise ValueError("transition matrix rows must be nonnegative and sum to 1")


def _stack(gs_list) -> np.ndarray:
    return np.stack([g.stacked() for g in gs_list])


def _assign(x: np.ndarray, centroids: np.ndarray):
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)  # ties resolve to the lowest index
    return labels, d2


def _kmeans_pp_init(x: np.ndarray, c: int, rng) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((c, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, c):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(d2 / total), rng.random()))
            idx = min(idx, n - 1)
        centroids[j] = x[idx]
        d2 = np.minimum(d2, ((x - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(gs_list, n_clusters: int, seed: int) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding, deterministic from the seed.

    Runs to an assignment fixpoint or MAX_LLOYD_ITERATIONS. A cluster left
    empty by an assignment is re-seeded at the point farthest from its own
    centroid (ties toward the lowest index), which never increases the
    objective.
    """
    if n_clusters < 1:
        raise ValueError("need at least one cluster")
    if len(gs_list) < n_clusters:
        raise ValueError(f"need at least {n_clusters} states, got {len(gs_list)}")
    raw = _stack(gs_list)
    mean = raw.mean(axis=0)
    scale = raw.std(axis=0)
    scale[scale < 1e-12] = 1.0  # constant feature: leave it unscaled
    x = (raw - mean) / scale

    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(x, n_clusters, rng)
    labels = np.full(x.shape[0], -1)
    trace = []
    for _ in range(MAX_LLOYD_ITERATIONS):
        new_labels, d2 = _assign(x, centroids)
        member_d2 = d2[np.arange(x.shape[0]), new_labels]
        for c in range(n_clusters):
            if not np.any(new_labels == c):
                far = int(member_d2.argmax())
                centroids[c] = x[far]
                new_labels[far] = c
                member_d2[far] = 0.0
        trace.append(float(member_d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(n_clusters):
            centroids[c] = x[labels == c].mean(axis=0)

    counts = np.bincount(labels, minlength=n_clusters)
    covariances = np.empty((n_clusters, x.shape[1], x.shape[1]))
    radii = np.empty(n_clusters)
    eye = np.eye(x.shape[1])
    for c in range(n_clusters):
        members = x[labels == c]
        diff = members - centroids[c]
        covariances[c] = (diff.T @ diff) / members.shape[0] + COV_REGULARIZATION * eye
        radii[c] = np.sqrt((diff ** 2).sum(axis=1).max())
    return ClusterModel(
        n_clusters=n_clusters,
        centroids=centroids,
        covariances=covariances,
        radii=radii,
        member_counts=counts,
        feature_mean=mean,
        feature_scale=scale,
        labels=labels,
        objective_trace=np.asarray(trace),
    )


def assign_cluster(model: ClusterModel, gs):
    """Nearest centroid in standardized space: (label, euclidean distance)."""
    z = model.standardize(gs.stacked())
    d2 = ((model.centroids - z) ** 2).sum(axis=1)
    label = int(d2.argmin())
    return label, float(np.sqrt(d2[label]))


def estimate_transitions(labels, n_clusters: int, epsilon: float = 1e-3) -> TransitionMatrix:
    """Smoothed bigram counts: T[i, j] = (count(i->j) + eps) / (sum_j + C eps).

    Rows with no outgoing transitions become uniform (exactly, for eps > 0;
    by convention for eps = 0).
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] < 2:
        raise ValueError("need at least 2 labels to count transitions")
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    if labels.min() < 0 or labels.max() >= n_clusters:
        raise ValueError("label out of range")
    counts = np.zeros((n_clusters, n_clusters))
    np.add.at(counts, (labels[:-1], labels[1:]), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    matrix = np.empty_like(counts)
    for i in range(n_clusters):
        denom = totals[i, 0] + n_clusters * epsilon
        if denom <= 0.0:
            matrix[i] = 1.0 / n_clusters
        else:
            matrix[i] = (counts[i] + epsilon) / denom
    return TransitionMatrix(matrix=matrix, epsilon=epsilon)
