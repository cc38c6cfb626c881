"""Frequency Distribution Loss: sliced transport distances on Fourier features."""

from .losses import (
    FdlConfig,
    content_loss,
    fdl,
    freq_wd_1d,
    mse,
    spatial_swd,
    spatial_wd_1d,
    style_loss,
)
from .numerics import ShapeError, Tensor, backward, param
from .spectral import dft, idft, mix_frequency, to_polar
from .transport import SampleSet, make_projections, sliced_wd, wd1d

__version__ = "0.1.0"
