"""Feature extractors and the conversion of feature maps into sample sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .io import read_ftns
from .numerics import ShapeError, Tensor, as_tensor, conv, relu, reshape, transpose
from .spectral import dft, to_polar
from .transport import SampleSet

__all__ = [
    "ExtractorSpec",
    "FeatureStack",
    "extract",
    "pyramid_kernels",
    "spectrum_samples",
    "spatial_samples",
]

KINDS = ("identity", "pyramid", "external")


@dataclass(frozen=True)
class ExtractorSpec:
    """How to turn a C x H x W image into a stack of feature maps.

    ``identity`` uses the pixels themselves, ``pyramid`` a frozen random
    stride-2 conv/relu pyramid, and ``external`` reads one FTNS file per layer.
    """

    kind: str = "identity"
    depth: int = 5
    channels: tuple[int, ...] = (8, 16, 16, 32, 32)
    kernel_size: int = 3
    seed: int = 0
    padding: str = "same-circular"
    paths: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown extractor kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        object.__setattr__(self, "paths", tuple(str(p) for p in self.paths))
        if self.kind == "pyramid":
            if self.depth < 1:
                raise ValueError("pyramid depth must be >= 1")
            if len(self.channels) < self.depth:
                raise ValueError(f"need {self.depth} channel counts, got {len(self.channels)}")
        if self.kind == "external" and not self.paths:
            raise ValueError("external extractor needs at least one FTNS path")


@dataclass
class FeatureStack:
    layers: list[Tensor]
    weights: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("feature stack needs at least one layer")
        if not self.weights:
            self.weights = [1.0] * len(self.layers)
        if len(self.weights) != len(self.layers):
            raise ShapeError(f"{len(self.layers)} layers but {len(self.weights)} weights")
        if any(w < 0 for w in self.weights):
            raise ValueError("layer weights must be nonnegative")
        for t in self.layers:
            if t.ndim != 3:
                raise ShapeError(f"feature layers must be C x H x W, got {t.shape}")
            if not np.all(np.isfinite(t.data)):
                raise ValueError("feature layer contains non-finite values")

    def __len__(self) -> int:
        return len(self.layers)


@lru_cache(maxsize=32)
def pyramid_kernels(spec: ExtractorSpec, in_channels: int) -> tuple[np.ndarray, ...]:
    """Frozen He-normal kernels for every pyramid level, derived from ``spec.seed``."""
    rng = np.random.default_rng([spec.seed, in_channels])
    k = spec.kernel_size
    kernels = []
    c_prev = in_channels
    for c in spec.channels[: spec.depth]:
        w = rng.standard_normal((c, c_prev, k, k)) * np.sqrt(2.0 / (c_prev * k * k))
        w.setflags(write=False)
        kernels.append(w)
        c_prev = c
    return tuple(kernels)


def _pyramid(spec: ExtractorSpec, image: Tensor) -> list[Tensor]:
    c, h, w = image.shape
    factor = 2 ** (spec.depth - 1)
    if min(h, w) < 8 or h % factor or w % factor:
        raise ShapeError(
            f"pyramid of depth {spec.depth} needs H, W >= 8 and divisible by {factor}, got {h}x{w}"
        )
    layers = []
    x = image
    for level, kern in enumerate(pyramid_kernels(spec, c)):
        # level 0 stays at full resolution, each later level halves it
        x = relu(conv(x, Tensor(kern), stride=1 if level == 0 else 2, padding=spec.padding))
        layers.append(x)
    return layers


def extract(spec: ExtractorSpec, image) -> FeatureStack:
    """Run an extractor on a C x H x W image. Differentiable for identity/pyramid."""
    if spec.kind == "external":
        return FeatureStack([Tensor(read_ftns(p)) for p in spec.paths])
    image = as_tensor(image)
    if image.ndim != 3:
        raise ShapeError(f"images must be C x H x W, got {image.shape}")
    if spec.kind == "identity":
        return FeatureStack([image])
    return FeatureStack(_pyramid(spec, image))


def spectrum_samples(layer) -> tuple[SampleSet, SampleSet]:
    """Per-channel 2D spectrum of a layer as amplitude and phase sample sets.

    Sample ``i`` is the C-vector of amplitudes (phases) at frequency bin ``i``.
    """
    layer = as_tensor(layer)
    if layer.ndim != 3:
        raise ShapeError(f"layer must be C x H x W, got {layer.shape}")
    c = layer.shape[0]
    polar = to_polar(dft(layer, 2))
    amp = transpose(reshape(polar.amplitude, (c, -1)))
    pha = transpose(reshape(polar.phase, (c, -1)))
    return SampleSet(amp), SampleSet(pha)


def spatial_samples(layer) -> SampleSet:
    """The C-vector at each spatial location as one sample."""
    layer = as_tensor(layer)
    if layer.ndim != 3:
        raise ShapeError(f"layer must be C x H x W, got {layer.shape}")
    return SampleSet(transpose(reshape(layer, (layer.shape[0], -1))))


def weighted(stack: FeatureStack, weights: Sequence[float] | None) -> FeatureStack:
    if weights is None:
        return stack
    return FeatureStack(stack.layers, list(weights))
