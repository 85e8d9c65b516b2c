"""Latent-space anomaly detection for frame sequences.

A variational autoencoder compresses frames into per-frame latent Gaussians;
generalized states (latent mean plus first difference) are clustered into
regimes with learned neural dynamics; a Markov jump particle filter predicts
the latent trajectory and flags frames whose innovation exceeds a threshold
calibrated on training data.
"""

from .clustering import ClusterModel, TransitionMatrix, assign_cluster, estimate_transitions, kmeans_fit
from .dynamics import DynamicsNet, DynTrainConfig, build_training_pairs, predict_velocity, train_dynamics
from .errors import NumericError, TrainingError
from .gstate import GeneralizedState, SigmaPointSet, UkfParams, build_gs_sequence, sigma_points, unscented_stats
from .linalg import matmul, matrix_sqrt_psd
from .mjpf import (AmjpfConfig, AnomalyReport, ModelBundle, Particle, anomaly_and_resample,
                   calibrate_threshold, filter_pass, init_filter, predict_step, score_sequence,
                   update_step, window_filter)
from .nn import MlpGrads, MlpParams, init_mlp, mlp_backward, mlp_forward, mlp_grad, sgd_step
from .pipeline import PipelineConfig, evaluate, frame_auc, load_config, score_pipeline, train_pipeline
from .synthetic import ScenarioSpec, generate, preset
from .vae import (Frame, LatentFrame, VaeParams, VaeTrainConfig, decode, elbo_grad, elbo_loss,
                  encode, encode_frames, reparameterize, train_vae)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
