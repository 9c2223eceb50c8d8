"""Offline trainer for per-stage snapshot-imaging denoisers.

Generates synthetic coded-exposure training pairs, fits small
conv/relu/skip denoisers stage by stage, and exports .scw weight files
that the reconstruction toolkit loads. Talks to that toolkit only
through files and its command line.
"""

from .data import Dataset, generate_training_pairs, gaussian_pairs
from .nets import forward, forward_single
from .train import TrainSettings, TrainingDiverged, learning_rate_at, residual_denoiser, train_stage
from .weights import Affine, Conv, Network, Relu, SkipAdd, load_network, save_network

__version__ = "0.1.0"
