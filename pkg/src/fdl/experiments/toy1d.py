"""Misaligned 1D training toy: learn a bump-sharpening map under shifted targets."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..losses import freq_wd_1d, mse, spatial_wd_1d
from ..numerics import AdamState, Tensor, adam_step, add, add_bias, backward, conv, param, relu

__all__ = [
    "Toy1dDataset",
    "TrainReport",
    "ToyModel",
    "gen_toy1d",
    "train_toy1d",
    "LOSS_KINDS",
    "DivergenceError",
]

LOSS_KINDS = ("mse", "spa", "freq")
SHARPEN = 0.5
GAIN = 1.5
WIDTH_RANGE = (2.0, 4.0)  # bump sigma in samples at L = 128
LEARNING_RATE = 1e-2


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass
class Toy1dDataset:
    """Input/target pairs of shape (N, 1, L).

    ``targets`` are aligned with ``inputs``; ``shifts`` holds the per-pair
    circular displacement applied to form the training targets.
    """

    inputs: np.ndarray
    targets: np.ndarray
    shifts: np.ndarray
    misalign_max: int
    seed: int
    test_inputs: np.ndarray = field(repr=False, default=None)
    test_targets: np.ndarray = field(repr=False, default=None)

    @property
    def length(self) -> int:
        return self.inputs.shape[-1]

    @property
    def aligned(self) -> bool:
        return self.misalign_max == 0

    def training_targets(self) -> np.ndarray:
        return np.stack([np.roll(t, s, axis=-1) for t, s in zip(self.targets, self.shifts)])

    @property
    def pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.inputs, self.training_targets()))


def _bumps(rng: np.random.Generator, n: int, length: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.arange(length)
    x = np.zeros((n, 1, length))
    y = np.zeros((n, 1, length))
    for i in range(n):
        for _ in range(rng.integers(1, 4)):
            center = rng.uniform(0, length)
            width = rng.uniform(*WIDTH_RANGE) * length / 128
            height = rng.uniform(0.5, 1.0)
            dist = (t - center + length / 2) % length - length / 2
            x[i, 0] += height * np.exp(-0.5 * (dist / width) ** 2)
            y[i, 0] += GAIN * height * np.exp(-0.5 * (dist / (SHARPEN * width)) ** 2)
    return x, y


def gen_toy1d(n_pairs: int, length: int, misalign_max: int, seed: int, n_test: int = 32) -> Toy1dDataset:
    """Sums of one to three Gaussian bumps, targets sharpened and amplified.

    Signals, shifts and test pairs come from independent child streams of
    ``seed``, so changing ``misalign_max`` leaves the signals untouched.
    """
    if length < 32 or length & (length - 1):
        raise ValueError(f"length must be a power of two >= 32, got {length}")
    if misalign_max < 0:
        raise ValueError("misalign_max must be >= 0")
    sig_ss, shift_ss, test_ss = np.random.SeedSequence(seed).spawn(3)
    x, y = _bumps(np.random.default_rng(sig_ss), n_pairs, length)
    shifts = np.random.default_rng(shift_ss).integers(-misalign_max, misalign_max + 1, size=n_pairs)
    tx, ty = _bumps(np.random.default_rng(test_ss), n_test, length)
    return Toy1dDataset(x, y, shifts, misalign_max, seed, tx, ty)


class ToyModel:
    """M(x) = f(x) + x, f three circular conv layers (with biases) and relus."""

    def __init__(self, seed: int, channels: int = 16, kernel: int = 5):
        rng = np.random.default_rng(seed)
        shapes = [(channels, 1, kernel), (channels, channels, kernel), (1, channels, kernel)]
        self.params = []
        for i, s in enumerate(shapes):
            std = np.sqrt(2.0 / (s[1] * kernel))
            if i == len(shapes) - 1:
                std *= 0.1  # start close to the identity map
            self.params.append(param(rng.standard_normal(s) * std))
            self.params.append(param(np.zeros(s[0])))

    def forward(self, x: Tensor, params) -> Tensor:
        w1, b1, w2, b2, w3, b3 = params
        h = relu(add_bias(conv(x, w1), b1, -2))
        h = relu(add_bias(conv(h, w2), b2, -2))
        return add(add_bias(conv(h, w3), b3, -2), x)

    def __call__(self, x) -> Tensor:
        return self.forward(x, self.params)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(Tensor(x), [Tensor(p.data) for p in self.params]).data


_LOSSES = {"mse": mse, "spa": spatial_wd_1d, "freq": freq_wd_1d}


@dataclass
class TrainReport:
    loss_kind: str
    aligned: bool
    train_loss: list[float]
    final_test_mse: float
    untrained_test_mse: float
    test_wd: float
    untrained_test_wd: float
    seconds: float
    predictions: np.ndarray = field(repr=False)


def _test_metrics(model: ToyModel, ds: Toy1dDataset) -> tuple[float, float, np.ndarray]:
    pred = model.predict(ds.test_inputs)
    err = float(np.mean((pred - ds.test_targets) ** 2))
    a = np.sort(pred[:, 0], axis=1)
    b = np.sort(ds.test_targets[:, 0], axis=1)
    return err, float(np.mean(np.abs(a - b))), pred


def train_toy1d(
    ds: Toy1dDataset, loss_kind: str, epochs: int = 200, seed: int = 0, lr: float = LEARNING_RATE
) -> TrainReport:
    """Full-batch Adam on the whole training set.

    Test error is measured against the aligned ground truth.
    """
    if loss_kind not in _LOSSES:
        raise ValueError(f"loss_kind must be one of {LOSS_KINDS}, got {loss_kind!r}")
    loss_fn = _LOSSES[loss_kind]
    start = time.perf_counter()
    model = ToyModel(seed)
    untrained_mse, untrained_wd, _ = _test_metrics(model, ds)
    x = Tensor(ds.inputs)
    y = Tensor(ds.training_targets())
    state = AdamState.for_params(model.params, lr=lr)
    history = []
    for epoch in range(epochs):
        loss = loss_fn(model(x), y)
        value = loss.item()
        if not np.isfinite(value):
            raise DivergenceError(f"{loss_kind} loss became {value} at epoch {epoch}")
        history.append(value)
        grads = backward(loss, model.params)
        new, state = adam_step(model.params, [grads[p] for p in model.params], state)
        for p, arr in zip(model.params, new):
            p.data = arr
    test_mse, test_wd, pred = _test_metrics(model, ds)
    return TrainReport(
        loss_kind=loss_kind,
        aligned=ds.aligned,
        train_loss=history,
        final_test_mse=test_mse,
        untrained_test_mse=untrained_mse,
        test_wd=test_wd,
        untrained_test_wd=untrained_wd,
        seconds=time.perf_counter() - start,
        predictions=pred,
    )
