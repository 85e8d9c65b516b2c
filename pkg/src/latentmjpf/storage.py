"""On-disk formats: frame datasets, label/latent/report CSVs, model bundles.

Binary layouts are little-endian. A frame dataset is
``"LMJF" | u32 version | u32 count | u32 width | u32 height`` followed by
count*width*height float32 pixels, frame-major, row-major within a frame.
Model bundles are directories of JSON manifests plus float64 weight blocks;
floats in text files are written with repr so they round-trip exactly.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .clustering import ClusterModel, TransitionMatrix
from .dynamics import DynamicsNet
from .gstate import UkfParams
from .mjpf import AmjpfConfig, AnomalyReport, ModelBundle
from .nn import MlpParams
from .vae import Frame, LatentFrame, VaeParams

DATASET_MAGIC = b"LMJF"
DATASET_VERSION = 1
_HEADER = struct.Struct("<4sIIII")


# ---------------------------------------------------------------- datasets

def save_frames(path, frames) -> None:
    if not frames:
        raise ValueError("refusing to write an empty dataset")
    width, height = frames[0].width, frames[0].height
    for f in frames:
        if (f.width, f.height) != (width, height):
            raise ValueError("all frames in a dataset must share one geometry")
    data = np.stack([f.pixels for f in frames]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DATASET_MAGIC, DATASET_VERSION, len(frames), width, height))
        fh.write(data.tobytes())


def load_frames(path) -> list:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated dataset header")
    magic, version, count, width, height = _HEADER.unpack_from(raw)
    if magic != DATASET_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != DATASET_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 4 * count * width * height
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    pixels = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    pixels = pixels.reshape(count, width * height).astype(np.float64)
    return [Frame(width, height, row) for row in pixels]


def save_labels(path, labels) -> None:
    lines = ["frame,abnormal"]
    lines += [f"{i},{int(bool(v))}" for i, v in enumerate(labels)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_labels(path) -> np.ndarray:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != "frame,abnormal":
        raise ValueError(f"{path}: expected a 'frame,abnormal' header")
    out = []
    for ln in lines[1:]:
        idx, flag = ln.split(",")
        if int(idx) != len(out):
            raise ValueError(f"{path}: non-contiguous frame index {idx}")
        out.append(bool(int(flag)))
    return np.asarray(out, dtype=bool)


# ----------------------------------------------------------------- latents

def save_latents_csv(path, latents) -> None:
    if not latents:
        raise ValueError("refusing to write an empty latent sequence")
    dim = latents[0].mu.shape[0]
    header = ",".join([f"mu_{i}" for i in range(dim)] + [f"s2_{i}" for i in range(dim)])
    lines = [header]
    for lf in latents:
        vals = [repr(float(v)) for v in lf.mu] + [repr(float(v)) for v in lf.sigma2]
        lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n")


def load_latents_csv(path) -> list:
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty latent file")
    cols = lines[0].split(",")
    if len(cols) % 2 != 0 or not cols[0].startswith("mu_"):
        raise ValueError(f"{path}: unexpected latent header")
    dim = len(cols) // 2
    out = []
    for ln in lines[1:]:
        vals = np.array([float(v) for v in ln.split(",")])
        if vals.shape[0] != 2 * dim:
            raise ValueError(f"{path}: row with {vals.shape[0]} columns, expected {2 * dim}")
        out.append(LatentFrame(mu=vals[:dim], sigma2=vals[dim:]))
    return out


# ------------------------------------------------------------------ blocks

def _write_block(path: Path, arrays) -> None:
    with open(path, "wb") as fh:
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def _read_block(path: Path, shapes) -> list:
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    out, offset = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        out.append(raw[offset:offset + size].reshape(shape).astype(np.float64))
        offset += size
    if offset != raw.shape[0]:
        raise ValueError(f"{path}: trailing bytes")
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _read_json(path: Path):
    return json.loads(path.read_text())


def _save_mlp(directory: Path, prefix: str, p: MlpParams) -> None:
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        _write_block(directory / f"{prefix}_{i}.bin", [w, b])


def _load_mlp(directory: Path, prefix: str, sizes, activation: str) -> MlpParams:
    weights, biases = [], []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        w, b = _read_block(directory / f"{prefix}_{i}.bin", [(n_out, n_in), (n_out,)])
        weights.append(w)
        biases.append(b)
    return MlpParams(tuple(sizes), weights, biases, activation)


# ------------------------------------------------------------------ bundle

def save_bundle(directory, bundle: ModelBundle) -> None:
    root = Path(directory)
    vae_dir = root / "vae"
    cl_dir = root / "clusters"
    dyn_dir = root / "dynamics"
    for d in (vae_dir, cl_dir, dyn_dir):
        d.mkdir(parents=True, exist_ok=True)

    vae = bundle.vae
    _write_json(vae_dir / "manifest.json", {
        "activation": vae.encoder.activation,
        "decoder_sizes": list(vae.decoder.layer_sizes),
        "encoder_sizes": list(vae.encoder.layer_sizes),
        "height": vae.height,
        "latent_dim": vae.latent_dim,
        "seed": vae.seed,
        "width": vae.width,
    })
    _save_mlp(vae_dir, "enc", vae.encoder)
    _save_mlp(vae_dir, "dec", vae.decoder)

    cl = bundle.clusters
    _write_json(cl_dir / "manifest.json", {
        "dim": cl.dim,
        "epsilon": bundle.transitions.epsilon,
        "feature_mean": [repr(float(v)) for v in cl.feature_mean],
        "feature_scale": [repr(float(v)) for v in cl.feature_scale],
        "member_counts": [int(v) for v in cl.member_counts],
        "n_clusters": cl.n_clusters,
    })
    _write_block(cl_dir / "centroids.bin", [cl.centroids])
    _write_block(cl_dir / "covariances.bin", [cl.covariances])
    _write_block(cl_dir / "radii.bin", [cl.radii])
    _write_block(cl_dir / "transition.bin", [bundle.transitions.matrix])

    for d in bundle.dynamics:
        sub = dyn_dir / f"cluster_{d.cluster}"
        sub.mkdir(parents=True, exist_ok=True)
        _write_json(sub / "manifest.json", {
            "activation": None if d.fallback else d.net.activation,
            "cluster": d.cluster,
            "fallback": d.fallback,
            "layer_sizes": None if d.fallback else list(d.net.layer_sizes),
        })
        _write_block(sub / "noise.bin", [d.process_noise_diag])
        if not d.fallback:
            _save_mlp(sub, "layer", d.net)

    cfg = bundle.config
    _write_json(root / "calibration.json", {
        "n_particles": cfg.n_particles,
        "seed": cfg.seed,
        "tau": cfg.tau,
        "threshold": bundle.threshold,
        "ukf_alpha": cfg.ukf.alpha,
        "ukf_beta": cfg.ukf.beta,
        "ukf_kappa": cfg.ukf.kappa,
        "window": cfg.window,
    })


def load_bundle(directory) -> ModelBundle:
    root = Path(directory)
    if not (root / "calibration.json").exists():
        raise ValueError(f"{directory}: not a model bundle (calibration.json missing)")

    vm = _read_json(root / "vae" / "manifest.json")
    vae = VaeParams(
        encoder=_load_mlp(root / "vae", "enc", vm["encoder_sizes"], vm["activation"]),
        decoder=_load_mlp(root / "vae", "dec", vm["decoder_sizes"], vm["activation"]),
        latent_dim=vm["latent_dim"],
        width=vm["width"],
        height=vm["height"],
        seed=vm["seed"],
    )

    cm = _read_json(root / "clusters" / "manifest.json")
    c, dim = cm["n_clusters"], cm["dim"]
    centroids, = _read_block(root / "clusters" / "centroids.bin", [(c, dim)])
    covariances, = _read_block(root / "clusters" / "covariances.bin", [(c, dim, dim)])
    radii, = _read_block(root / "clusters" / "radii.bin", [(c,)])
    t_matrix, = _read_block(root / "clusters" / "transition.bin", [(c, c)])
    clusters = ClusterModel(
        n_clusters=c,
        centroids=centroids,
        covariances=covariances,
        radii=radii,
        member_counts=np.asarray(cm["member_counts"], dtype=np.int64),
        feature_mean=np.array([float(v) for v in cm["feature_mean"]]),
        feature_scale=np.array([float(v) for v in cm["feature_scale"]]),
    )
    transitions = TransitionMatrix(matrix=t_matrix, epsilon=cm["epsilon"])

    dynamics = []
    for s in range(c):
        sub = root / "dynamics" / f"cluster_{s}"
        dm = _read_json(sub / "manifest.json")
        noise, = _read_block(sub / "noise.bin", [(dim // 2,)])
        net = None
        if not dm["fallback"]:
            net = _load_mlp(sub, "layer", dm["layer_sizes"], dm["activation"])
        dynamics.append(DynamicsNet(cluster=s, net=net, process_noise_diag=noise,
                                    fallback=dm["fallback"]))

    cal = _read_json(root / "calibration.json")
    config = AmjpfConfig(
        n_particles=cal["n_particles"],
        ukf=UkfParams(alpha=cal["ukf_alpha"], beta=cal["ukf_beta"], kappa=cal["ukf_kappa"]),
        tau=cal["tau"],
        window=cal["window"],
        seed=cal["seed"],
    )
    return ModelBundle(vae=vae, clusters=clusters, transitions=transitions,
                       dynamics=dynamics, config=config, threshold=cal["threshold"])


# ------------------------------------------------------------------ report

def save_report(path, report: AnomalyReport) -> None:
    lines = ["frame,y,thresh,raw_flag,final_flag,winning_cluster"]
    for i in range(report.frame_indices.shape[0]):
        lines.append(
            f"{int(report.frame_indices[i])},{float(report.y[i])!r},{float(report.threshold)!r},"
            f"{int(report.raw_flags[i])},{int(report.final_flags[i])},"
            f"{int(report.winning_clusters[i])}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def load_report(path) -> AnomalyReport:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != "frame,y,thresh,raw_flag,final_flag,winning_cluster":
        raise ValueError(f"{path}: unexpected report header")
    frames, ys, threshold, raw, final, winning = [], [], None, [], [], []
    for ln in lines[1:]:
        f, y, t, r, fl, w = ln.split(",")
        frames.append(int(f))
        ys.append(float(y))
        threshold = float(t)
        raw.append(bool(int(r)))
        final.append(bool(int(fl)))
        winning.append(int(w))
    return AnomalyReport(
        frame_indices=np.asarray(frames, dtype=np.int64),
        y=np.asarray(ys),
        threshold=threshold,
        raw_flags=np.asarray(raw, dtype=bool),
        final_flags=np.asarray(final, dtype=bool),
        winning_clusters=np.asarray(winning, dtype=np.int64),
    )
