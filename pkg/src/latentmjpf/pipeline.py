"""End-to-end orchestration driven by a flat key = value config file.

Config keys (all optional; defaults shown):

    dataset = data/train.lmjf      # training dataset path
    bundle = bundle                # model bundle directory
    report = report.csv            # scoring report path
    plot = report.svg              # scoring plot path
    latent_dim = 8
    clusters = 6
    ukf_alpha = 0.1
    ukf_beta = 2.0
    ukf_kappa = 0.0
    particles = 100
    window = 3
    transition_smoothing = 0.001
    tau = 0.0                      # 0 = derive as 0.1 * calibrated threshold
    vae_hidden = 64
    vae_epochs = 300
    vae_batch = 32
    vae_lr = 0.001
    dyn_hidden = 0                 # 0 = 4 * latent_dim
    dyn_epochs = 200
    dyn_batch = 32
    dyn_lr = 0.01
    seed = 0

Lines starting with '#' are comments. Every stage derives its generator
from `seed`, so rerunning any command reproduces its outputs byte for byte.
"""

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .clustering import estimate_transitions, kmeans_fit
from .dynamics import DynTrainConfig, build_training_pairs, train_dynamics
from .gstate import UkfParams, build_gs_sequence
from .mjpf import (AmjpfConfig, ModelBundle, calibrate_threshold, filter_pass,
                   score_sequence)
from .storage import (load_bundle, load_frames, load_labels, load_report,
                      save_bundle, save_latents_csv, save_report)
from .vae import VaeTrainConfig, encode_frames, train_vae

TAU_FRACTION = 0.1  # auto tau = this fraction of the calibrated threshold
TAU_FLOOR = 1e-9


@dataclass(frozen=True)
class PipelineConfig:
    dataset: str = "data/train.lmjf"
    bundle: str = "bundle"
    report: str = "report.csv"
    plot: str = "report.svg"
    latent_dim: int = 8
    clusters: int = 6
    ukf_alpha: float = 0.1
    ukf_beta: float = 2.0
    ukf_kappa: float = 0.0
    particles: int = 100
    window: int = 3
    transition_smoothing: float = 1e-3
    tau: float = 0.0
    vae_hidden: int = 64
    vae_epochs: int = 300
    vae_batch: int = 32
    vae_lr: float = 1e-3
    dyn_hidden: int = 0
    dyn_epochs: int = 200
    dyn_batch: int = 32
    dyn_lr: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        for name in ("latent_dim", "clusters", "particles", "window",
                     "vae_hidden", "vae_epochs", "vae_batch", "dyn_epochs", "dyn_batch"):
            if getattr(self, name) < 1:
                raise ValueError(f"config key {name} must be >= 1")

    def ukf(self) -> UkfParams:
        return UkfParams(alpha=self.ukf_alpha, beta=self.ukf_beta, kappa=self.ukf_kappa)


def load_config(path) -> PipelineConfig:
    """Parse a flat key = value file; unknown keys are rejected."""
    defaults = {f.name: f for f in fields(PipelineConfig)}
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in defaults:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        kind = defaults[key].type
        try:
            if kind in (int, "int"):
                values[key] = int(value)
            elif kind in (float, "float"):
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return PipelineConfig(**values)


def train_pipeline(cfg: PipelineConfig, log=print) -> ModelBundle:
    """Full training phase; writes the bundle and the training latents CSV."""
    frames = load_frames(cfg.dataset)
    log(f"[train] dataset: {len(frames)} frames of {frames[0].width}x{frames[0].height}")

    vae = train_vae(frames, VaeTrainConfig(
        latent_dim=cfg.latent_dim, hidden=cfg.vae_hidden, epochs=cfg.vae_epochs,
        batch_size=cfg.vae_batch, learning_rate=cfg.vae_lr, seed=cfg.seed,
    ))
    latents = encode_frames(vae, frames)
    log(f"[train] vae: latent_dim={cfg.latent_dim}, hidden={cfg.vae_hidden}, "
        f"epochs={cfg.vae_epochs}")

    gs = build_gs_sequence(latents)
    clusters = kmeans_fit(gs, cfg.clusters, seed=cfg.seed + 1)
    transitions = estimate_transitions(clusters.labels, cfg.clusters,
                                       cfg.transition_smoothing)
    log(f"[train] clusters: sizes={clusters.member_counts.tolist()}, "
        f"iterations={len(clusters.objective_trace)}")

    ukf = cfg.ukf()
    latent_dim = cfg.latent_dim
    dynamics = []
    for s in range(cfg.clusters):
        x, y = build_training_pairs(latents, gs, clusters.labels, s, ukf)
        fallback_diag = np.diag(clusters.raw_covariance(s))[latent_dim:]
        net = train_dynamics(x, y, DynTrainConfig(
            hidden=cfg.dyn_hidden, epochs=cfg.dyn_epochs, batch_size=cfg.dyn_batch,
            learning_rate=cfg.dyn_lr, seed=cfg.seed + 100 + s,
        ), cluster=s, fallback_noise_diag=fallback_diag)
        dynamics.append(net)
        kind = "fallback" if net.fallback else "net"
        log(f"[train] dynamics {s}: {x.shape[0]} pairs -> {kind}, "
            f"noise~{float(net.process_noise_diag.mean()):.2e}")

    def make_config(tau: float) -> AmjpfConfig:
        return AmjpfConfig(n_particles=cfg.particles, ukf=ukf, tau=tau,
                           window=cfg.window, seed=cfg.seed + 2)

    bundle = ModelBundle(vae=vae, clusters=clusters, transitions=transitions,
                         dynamics=dynamics, config=make_config(tau=1.0))
    if cfg.tau > 0.0:
        bundle.config = make_config(cfg.tau)
        ys, _, _ = filter_pass(bundle, latents, bundle.config)
        bundle.threshold = calibrate_threshold(ys)
    else:
        # provisional pass fixes the signal scale, second pass calibrates at
        # the tau that scoring will actually use
        ys, _, _ = filter_pass(bundle, latents, bundle.config)
        tau = max(TAU_FRACTION * calibrate_threshold(ys), TAU_FLOOR)
        bundle.config = make_config(tau)
        ys, _, _ = filter_pass(bundle, latents, bundle.config)
        bundle.threshold = calibrate_threshold(ys)
    log(f"[train] calibration: threshold={bundle.threshold:.6g}, "
        f"tau={bundle.config.tau:.6g}")

    save_bundle(cfg.bundle, bundle)
    save_latents_csv(Path(cfg.bundle) / "latents_train.csv", latents)
    log(f"[train] bundle written to {cfg.bundle}")
    return bundle


def score_pipeline(cfg: PipelineConfig, dataset=None, log=print):
    """Scoring phase: encode, filter, write report CSV and SVG plot."""
    from .plotting import write_signal_svg

    bundle = load_bundle(cfg.bundle)
    path = dataset or cfg.dataset
    frames = load_frames(path)
    latents = encode_frames(bundle.vae, frames)
    report = score_sequence(bundle, latents, bundle.config)
    save_report(cfg.report, report)
    write_signal_svg(cfg.plot, report)
    flagged = int(report.final_flags.sum())
    log(f"[score] {path}: {report.y.shape[0]} scored frames, "
        f"{flagged} flagged, threshold={report.threshold:.6g}")
    log(f"[score] report -> {cfg.report}, plot -> {cfg.plot}")
    return report


def frame_auc(scores, truth) -> float:
    """Area under the ROC curve of `scores` against boolean `truth`,
    computed by the average-rank formulation (ties share ranks)."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    n_pos = int(truth.sum())
    n_neg = truth.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.shape[0])
    sorted_scores = scores[order]
    i = 0
    while i < scores.shape[0]:
        j = i
        while j < scores.shape[0] and sorted_scores[j] == sorted_scores[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j - 1) + 1.0  # average 1-based rank
        i = j
    rank_sum = ranks[truth].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate(report, labels):
    """Frame-level metrics of a report against ground-truth labels.

    Labels cover every dataset frame; the report starts at frame 1, so the
    label vector must be exactly one entry longer than the report.
    Returns (precision, recall, auc).
    """
    if labels.shape[0] != report.frame_indices.shape[0] + 1:
        raise ValueError(
            f"label count {labels.shape[0]} does not align with "
            f"{report.frame_indices.shape[0]} report rows (want one more)"
        )
    truth = labels[report.frame_indices]
    pred = report.final_flags
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall, frame_auc(report.y, truth)


def eval_files(report_path, labels_path, log=print):
    report = load_report(report_path)
    labels = load_labels(labels_path)
    precision, recall, auc = evaluate(report, labels)
    log(f"[eval] precision={precision:.4f} recall={recall:.4f} auc={auc:.4f}")
    return precision, recall, auc
