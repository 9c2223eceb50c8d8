"""Stage training: Adam on the mean squared error, decaying learning rate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .nets import backward, forward
from .weights import Affine, Conv, Network, Relu, SkipAdd


class TrainingDiverged(RuntimeError):
    """Loss went non-finite; carries the abort report."""


@dataclass
class TrainSettings:
    epochs: int = 40
    batch_size: int = 32
    learning_rate: float = 1e-3
    decay: float = 0.9
    decay_every: int = 10
    seed: int = 0
    holdout_fraction: float = 0.2


def learning_rate_at(epoch: int, settings: TrainSettings) -> float:
    """Initial rate scaled by the decay factor every ``decay_every`` epochs."""
    return settings.learning_rate * settings.decay ** (epoch // settings.decay_every)


def residual_denoiser(channels: int, features: int = 12, seed: int = 0,
                      stage_index: int = 1) -> Network:
    """conv-relu-conv-relu-conv plus a skip: predicts a correction to add."""
    rng = np.random.default_rng(seed)

    def conv(name, c_out, c_in, k=3):
        scale = np.sqrt(2.0 / (c_in * k * k))
        return Conv(name, rng.standard_normal((c_out, c_in, k, k)) * scale,
                    np.zeros(c_out))

    return Network(
        [
            conv("lift", features, channels),
            Relu("act1"),
            conv("mid", features, features),
            Relu("act2"),
            conv("drop", channels, features),
            SkipAdd("skip"),
        ],
        stage_index=stage_index,
    )


@dataclass
class TrainReport:
    epochs_run: int
    train_losses: list[float] = field(default_factory=list)
    holdout_mse: float = float("nan")
    input_mse: float = float("nan")


class Adam:
    def __init__(self, shapes, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0

    def step(self, params, grads, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            m_hat = self.m[i] / (1 - b1**self.t)
            v_hat = self.v[i] / (1 - b2**self.t)
            p -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _trainable(net: Network):
    out = []
    for i, layer in enumerate(net.layers):
        if isinstance(layer, (Conv, Affine)):
            out.append((i, layer))
    return out


def train_stage(dataset: Dataset, net: Network,
                settings: TrainSettings | None = None) -> TrainReport:
    """Fit the net to map dataset inputs to targets; returns the report.

    Splits off a holdout slice, runs minibatch Adam on the mean squared
    error, and aborts with :class:`TrainingDiverged` if the loss goes
    non-finite.
    """
    if dataset.empty:
        raise ValueError("dataset is empty")
    settings = settings or TrainSettings()
    count = len(dataset)
    held = max(1, int(count * settings.holdout_fraction)) if count > 1 else 0
    train_x, train_t = dataset.inputs[: count - held], dataset.targets[: count - held]
    hold_x, hold_t = dataset.inputs[count - held :], dataset.targets[count - held :]

    rng = np.random.default_rng(settings.seed)
    layers = _trainable(net)
    params = []
    for _, layer in layers:
        params += [layer.weights, layer.bias]
    opt = Adam([p.shape for p in params])
    report = TrainReport(epochs_run=0)

    n_train = len(train_x)
    for epoch in range(settings.epochs):
        lr = learning_rate_at(epoch, settings)
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        for start in range(0, n_train, settings.batch_size):
            idx = order[start : start + settings.batch_size]
            x, t = train_x[idx], train_t[idx]
            out, saved = forward(net, x, keep=True)
            resid = out - t
            loss = float(np.mean(resid**2))
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"loss became non-finite at epoch {epoch}, lr {lr:g}, "
                    f"after {report.epochs_run} full epochs"
                )
            epoch_loss += loss * len(idx)
            grads_by_layer, _ = backward(net, saved, 2.0 * resid / resid.size)
            flat_grads = []
            for i, _ in layers:
                gw, gb = grads_by_layer[i]
                flat_grads += [gw, gb]
            opt.step(params, flat_grads, lr)
        report.train_losses.append(epoch_loss / n_train)
        report.epochs_run = epoch + 1

    if held:
        out = forward(net, hold_x)
        report.holdout_mse = float(np.mean((out - hold_t) ** 2))
        report.input_mse = float(np.mean((hold_x - hold_t) ** 2))
    return report
