"""Discrete Fourier transforms, polar decomposition and spectrum mixing.

Convention: unnormalized forward transform, ``1/N`` on the inverse. Spectra
are stored on the full frequency grid (no half-spectrum packing).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import ShapeError, Tensor, _node, as_tensor

__all__ = [
    "fft",
    "ifft",
    "naive_dft",
    "Spectrum",
    "PolarSpectrum",
    "dft",
    "idft",
    "to_polar",
    "from_polar",
    "mix_frequency",
    "circular_shift",
    "POLAR_EPS",
]

POLAR_EPS = 1e-8
SYMMETRY_TOL = 1e-8


# ------------------------------------------------------------ raw transforms


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@lru_cache(maxsize=None)
def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=None)
def _twiddles(m: int) -> np.ndarray:
    tw = np.exp(-2j * np.pi * np.arange(m // 2) / m)
    if m % 4 == 0:
        tw[m // 4] = -1j  # exact quarter turn
    return tw


@lru_cache(maxsize=None)
def _dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    # reduce k*n mod N before scaling so large products keep full precision
    return np.exp(-2j * np.pi * (np.outer(k, k) % n) / n)


def _radix2(x: np.ndarray) -> np.ndarray:
    """Iterative decimation-in-time Cooley-Tukey along the last axis."""
    n = x.shape[-1]
    y = x[..., _bit_reverse(n)]
    lead = y.shape[:-1]
    m = 2
    while m <= n:
        blocks = y.reshape(lead + (n // m, m))
        half = m // 2
        even = blocks[..., :half]
        odd = blocks[..., half:] * _twiddles(m)
        y = np.concatenate([even + odd, even - odd], axis=-1).reshape(lead + (n,))
        m *= 2
    return y


def naive_dft(x: np.ndarray) -> np.ndarray:
    """O(N^2) DFT along the last axis; reference path and odd-length fallback."""
    x = np.asarray(x, dtype=np.complex128)
    return x @ _dft_matrix(x.shape[-1]).T


def _fft_last(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if n == 0:
        raise ShapeError("cannot transform an empty axis")
    return _radix2(x) if _is_pow2(n) else naive_dft(x)


def fft(x: np.ndarray, ndim: int = 1) -> np.ndarray:
    """Unnormalized forward DFT over the trailing ``ndim`` axes (1 or 2)."""
    if ndim not in (1, 2):
        raise ValueError("ndim must be 1 or 2")
    out = _fft_last(x)
    if ndim == 2:
        out = np.swapaxes(_fft_last(np.swapaxes(out, -1, -2)), -1, -2)
    return out


def ifft(X: np.ndarray, ndim: int = 1) -> np.ndarray:
    """Inverse of :func:`fft` (complex result, ``1/N`` normalized)."""
    X = np.asarray(X, dtype=np.complex128)
    n = int(np.prod(X.shape[-ndim:]))
    return np.conj(fft(np.conj(X), ndim)) / n


def _mirror(a: np.ndarray, ndim: int) -> np.ndarray:
    """a[-k mod N] over the trailing axes."""
    for ax in range(a.ndim - ndim, a.ndim):
        a = np.roll(np.flip(a, axis=ax), 1, axis=ax)
    return a


# --------------------------------------------------------- spectrum objects


@dataclass
class Spectrum:
    """Complex spectrum as a pair of real tensors over the full grid."""

    re: Tensor
    im: Tensor
    ndim: int = 1

    def __post_init__(self):
        self.re, self.im = as_tensor(self.re), as_tensor(self.im)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.re.shape

    def complex(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data

    def symmetry_error(self) -> float:
        X = self.complex()
        return float(np.max(np.abs(X - np.conj(_mirror(X, self.ndim))), initial=0.0))


@dataclass
class PolarSpectrum:
    amplitude: Tensor
    phase: Tensor
    ndim: int = 1

    def __post_init__(self):
        self.amplitude, self.phase = as_tensor(self.amplitude), as_tensor(self.phase)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.amplitude.shape


def _check_axes(x: Tensor, ndim: int) -> None:
    if ndim not in (1, 2):
        raise ValueError("only the last 1 or 2 axes can be transformed")
    if x.ndim < ndim:
        raise ShapeError(f"tensor of rank {x.ndim} has no {ndim} trailing axes")
    if any(n < 1 for n in x.shape[-ndim:]):
        raise ShapeError(f"transformed extents must be >= 1, got {x.shape}")


def dft(x, ndim: int = 1) -> Spectrum:
    """Forward DFT of a real tensor over its last ``ndim`` axes."""
    x = as_tensor(x)
    _check_axes(x, ndim)
    X = fft(x.data, ndim)
    # the real and imaginary parts of the DFT matrix are both symmetric
    re = _node(X.real.copy(), (x,), lambda g: (fft(g, ndim).real,))
    im = _node(X.imag.copy(), (x,), lambda g: (fft(g, ndim).imag,))
    return Spectrum(re, im, ndim)


def idft(X: Spectrum) -> Tensor:
    """Inverse DFT back to a real tensor.

    Raises ValueError if the spectrum is not conjugate symmetric, since its
    inverse would then not be real.
    """
    nd = X.ndim
    if X.re.shape != X.im.shape:
        raise ShapeError(f"re/im shape mismatch {X.re.shape} vs {X.im.shape}")
    _check_axes(X.re, nd)
    Z = X.complex()
    scale = max(1.0, float(np.max(np.abs(Z), initial=0.0)))
    err = X.symmetry_error()
    if err > SYMMETRY_TOL * scale:
        raise ValueError(f"spectrum is not conjugate symmetric (max deviation {err:.3e})")
    n = int(np.prod(X.shape[-nd:]))
    out = ifft(Z, nd).real

    def vjp(g):
        G = fft(g, nd) / n
        return G.real, G.imag

    return _node(out, (X.re, X.im), vjp)


def to_polar(X: Spectrum) -> PolarSpectrum:
    """Amplitude and phase in (-pi, pi]; phase of an exact zero bin is 0."""
    re, im = X.re.data, X.im.data + 0.0  # +0.0 folds -0.0 so atan2 never returns -pi
    amp = np.hypot(re, im)
    pha = np.arctan2(im, re)
    pha = np.where(pha <= -np.pi, np.pi, pha)
    den = np.maximum(amp, POLAR_EPS)
    amplitude = _node(amp, (X.re, X.im), lambda g: (g * re / den, g * im / den))
    den2 = den * den
    phase = _node(pha, (X.re, X.im), lambda g: (-g * im / den2, g * re / den2))
    return PolarSpectrum(amplitude, phase, X.ndim)


def from_polar(p: PolarSpectrum) -> Spectrum:
    a, ph = p.amplitude.data, p.phase.data
    c, s = np.cos(ph), np.sin(ph)
    re = _node(a * c, (p.amplitude, p.phase), lambda g: (g * c, -g * a * s))
    im = _node(a * s, (p.amplitude, p.phase), lambda g: (g * s, g * a * c))
    return Spectrum(re, im, p.ndim)


def _clean_phase(p: PolarSpectrum, rel: float = 1e-12) -> PolarSpectrum:
    """Zero the phase of bins that are numerically empty.

    The phase of a rounding-level residue is arbitrary and would break the
    conjugate symmetry of a mixed spectrum.
    """
    amp = p.amplitude.data
    nd = p.ndim
    peak = np.max(amp, axis=tuple(range(amp.ndim - nd, amp.ndim)), keepdims=True)
    dead = amp <= rel * peak
    if not dead.any():
        return p
    keep = ~dead
    phase = _node(np.where(dead, 0.0, p.phase.data), (p.phase,), lambda g: (np.where(keep, g, 0.0),))
    return PolarSpectrum(p.amplitude, phase, nd)


def mix_frequency(q, d, ndim: int | None = None) -> Tensor:
    """Combine the amplitude spectrum of ``q`` with the phase spectrum of ``d``.

    Works per channel over the trailing spatial axes: 2 for tensors of rank >= 2
    unless ``ndim`` says otherwise, 1 for vectors.
    """
    q, d = as_tensor(q), as_tensor(d)
    if q.shape != d.shape:
        raise ShapeError(f"mix_frequency: shape mismatch {q.shape} vs {d.shape}")
    if ndim is None:
        ndim = 1 if q.ndim == 1 else 2
    amp = to_polar(dft(q, ndim)).amplitude
    pha = _clean_phase(to_polar(dft(d, ndim))).phase
    return idft(from_polar(PolarSpectrum(amp, pha, ndim)))


def circular_shift(x, shift, axis=-1) -> Tensor:
    """Circularly shift a tensor (differentiable)."""
    x = as_tensor(x)
    out = np.roll(x.data, shift, axis=axis)
    neg = tuple(-s for s in shift) if isinstance(shift, (tuple, list)) else -shift
    return _node(out, (x,), lambda g: (np.roll(g, neg, axis=axis),))
