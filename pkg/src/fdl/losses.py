"""Frequency Distribution Loss and the baselines it is compared with.

All loss functions return scalar :class:`~fdl.numerics.Tensor` nodes, so they
can be differentiated with :func:`fdl.numerics.backward`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .features import ExtractorSpec, FeatureStack, extract, spatial_samples, spectrum_samples, weighted
from .numerics import ShapeError, Tensor, as_tensor, reduce_mean, reshape, scale, square, stack_sum, sub
from .spectral import dft, to_polar
from .transport import SampleSet, make_projections, sliced_wd, sorted_row_distance

__all__ = [
    "FdlConfig",
    "FrequencyFeatures",
    "frequency_features",
    "fdl",
    "fdl_features",
    "freq_wd_1d",
    "spatial_wd_1d",
    "spatial_swd",
    "mse",
    "style_loss",
    "content_loss",
    "content_features",
]

DEFAULT_PROJECTIONS = 256


@dataclass(frozen=True)
class FdlConfig:
    """Everything that determines an FDL evaluation apart from the eval id."""

    lam: float = 1.0
    k_projections: int = DEFAULT_PROJECTIONS
    master_seed: int = 0
    extractor: ExtractorSpec = field(default_factory=ExtractorSpec)
    layer_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.k_projections < 1:
            raise ValueError("k_projections must be >= 1")
        if self.layer_weights is not None:
            w = tuple(float(x) for x in self.layer_weights)
            if any(x < 0 for x in w):
                raise ValueError("layer weights must be nonnegative")
            object.__setattr__(self, "layer_weights", w)

    def bank(self, eval_id: int, layer: int, d: int):
        return make_projections(self.k_projections, d, (self.master_seed, eval_id, layer))


def _check_pair(u: Tensor, v: Tensor, what: str) -> None:
    if u.shape != v.shape:
        raise ShapeError(f"{what}: shape mismatch {u.shape} vs {v.shape}")


def _stack(image, cfg: FdlConfig) -> FeatureStack:
    return weighted(extract(cfg.extractor, image), cfg.layer_weights)


@dataclass
class FrequencyFeatures:
    """Per-layer (amplitude, phase) sample sets with their layer weights."""

    layers: list[tuple[SampleSet, SampleSet]]
    weights: list[float]


def frequency_features(image, cfg: FdlConfig) -> FrequencyFeatures:
    stack = _stack(image, cfg)
    return FrequencyFeatures([spectrum_samples(t) for t in stack.layers], list(stack.weights))


def _match(fu: FrequencyFeatures, fv: FrequencyFeatures) -> None:
    if len(fu.layers) != len(fv.layers):
        raise ShapeError(f"feature stacks differ in depth: {len(fu.layers)} vs {len(fv.layers)}")
    for (a, _), (b, _) in zip(fu.layers, fv.layers):
        if (a.n, a.d) != (b.n, b.d):
            raise ShapeError(f"layer shape mismatch: {(a.n, a.d)} vs {(b.n, b.d)}")


def fdl_features(fu: FrequencyFeatures, fv: FrequencyFeatures, cfg: FdlConfig, eval_id: int) -> Tensor:
    """FDL on precomputed frequency features (lets callers cache constant targets)."""
    _match(fu, fv)
    terms = []
    for layer, ((au, pu), (av, pv), w) in enumerate(zip(fu.layers, fv.layers, fu.weights)):
        bank = cfg.bank(eval_id, layer, au.d)
        term = sliced_wd(au, av, bank)
        if cfg.lam:
            term = term + scale(sliced_wd(pu, pv, bank), cfg.lam)
        terms.append(scale(term, w))
    return stack_sum(terms)


def fdl(U, V, cfg: FdlConfig, eval_id: int = 0) -> Tensor:
    """Frequency Distribution Loss between images ``U`` and ``V``.

    Sum over feature layers of ``SW(amplitudes) + lam * SW(phases)``, both
    terms of a layer sliced with one bank seeded by (master seed, eval id,
    layer index).
    """
    U, V = as_tensor(U), as_tensor(V)
    _check_pair(U, V, "fdl")
    return fdl_features(frequency_features(U, cfg), frequency_features(V, cfg), cfg, eval_id)


def content_features(fr: FrequencyFeatures, ft: FrequencyFeatures, cfg: FdlConfig, eval_id: int) -> Tensor:
    _match(fr, ft)
    terms = []
    for layer, ((_, pr), (_, pt), w) in enumerate(zip(fr.layers, ft.layers, fr.weights)):
        terms.append(scale(sliced_wd(pr, pt, cfg.bank(eval_id, layer, pr.d)), w))
    return stack_sum(terms)


def style_loss(R, S, cfg: FdlConfig, eval_id: int = 0) -> Tensor:
    return fdl(R, S, cfg, eval_id)


def content_loss(R, T, cfg: FdlConfig, eval_id: int = 0) -> Tensor:
    """Phase-only sliced distance between the feature spectra of ``R`` and ``T``."""
    R, T = as_tensor(R), as_tensor(T)
    _check_pair(R, T, "content_loss")
    return content_features(frequency_features(R, cfg), frequency_features(T, cfg), cfg, eval_id)


def spatial_swd(U, V, cfg: FdlConfig, eval_id: int = 0) -> Tensor:
    """Sliced W1 between feature vectors at spatial locations, summed over layers."""
    U, V = as_tensor(U), as_tensor(V)
    _check_pair(U, V, "spatial_swd")
    su, sv = _stack(U, cfg), _stack(V, cfg)
    terms = []
    for layer, (lu, lv, w) in enumerate(zip(su.layers, sv.layers, su.weights)):
        a, b = spatial_samples(lu), spatial_samples(lv)
        terms.append(scale(sliced_wd(a, b, cfg.bank(eval_id, layer, a.d)), w))
    return stack_sum(terms)


def _rows(u: Tensor) -> Tensor:
    return reshape(u, (1, -1)) if u.ndim == 1 else reshape(u, (-1, u.shape[-1]))


def freq_wd_1d(u, v) -> Tensor:
    """W1 between amplitude multisets plus W1 between phase multisets of 1D signals.

    A batch of signals (..., L) gives the mean of the per-signal values.
    """
    u, v = as_tensor(u), as_tensor(v)
    _check_pair(u, v, "freq_wd_1d")
    pu, pv = to_polar(dft(_rows(u))), to_polar(dft(_rows(v)))
    amp = sorted_row_distance(pu.amplitude, pv.amplitude)
    pha = sorted_row_distance(pu.phase, pv.phase)
    return reduce_mean(amp + pha)


def spatial_wd_1d(u, v) -> Tensor:
    """W1 between the value multisets of 1D signals (mean over a batch)."""
    u, v = as_tensor(u), as_tensor(v)
    _check_pair(u, v, "spatial_wd_1d")
    return reduce_mean(sorted_row_distance(_rows(u), _rows(v)))


def mse(U, V) -> Tensor:
    U, V = as_tensor(U), as_tensor(V)
    _check_pair(U, V, "mse")
    return reduce_mean(square(sub(U, V)))
