"""Session-scoped trained artifacts shared across the trainer tests."""

import numpy as np
import pytest

from scitrainer.data import bernoulli_masks, gaussian_pairs, generate_training_pairs
from scitrainer.train import TrainSettings, residual_denoiser, train_stage
from scitrainer.weights import save_network

SCENE_SHAPE = (32, 32, 8)
MASK_SEED = 77


@pytest.fixture(scope="session")
def sigma_net_and_report():
    """Single-channel denoiser trained on sigma=0.1 Gaussian pairs."""
    dataset = gaussian_pairs(count=80, sigma=0.1, seed=0, shape=(32, 32, 1))
    net = residual_denoiser(channels=1, features=16, seed=5)
    report = train_stage(net=net, dataset=dataset,
                         settings=TrainSettings(epochs=40, batch_size=8, seed=1))
    return net, report


@pytest.fixture(scope="session")
def stage_artifacts(tmp_path_factory):
    """Greedy three-stage denoiser stack plus exported weight files."""
    masks = bernoulli_masks(*SCENE_SHAPE, seed=MASK_SEED)
    nets = []
    for k in range(3):
        dataset = generate_training_pairs(80, masks, nets, seed=100, shape=SCENE_SHAPE)
        net = residual_denoiser(channels=SCENE_SHAPE[2], features=16,
                                seed=10 + k, stage_index=k + 1)
        train_stage(net=net, dataset=dataset,
                    settings=TrainSettings(epochs=40, batch_size=8, seed=2 + k))
        nets.append(net)
    out_dir = tmp_path_factory.mktemp("stage_weights")
    paths = []
    for k, net in enumerate(nets):
        path = out_dir / f"stage{k + 1}.scw"
        save_network(path, net)
        paths.append(path)
    return {"masks": masks, "nets": nets, "paths": paths}
