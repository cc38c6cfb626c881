"""Deterministic test images and small image utilities."""

from __future__ import annotations

import numpy as np

from ..spectral import ifft

__all__ = ["natural_image", "texture_image", "resize_bilinear", "psnr"]


def _pink_noise(rng: np.random.Generator, shape: tuple[int, int], exponent: float) -> np.ndarray:
    h, w = shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    f = np.hypot(fy, fx)
    f[0, 0] = 1.0
    spec = (rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))) / f**exponent
    spec[0, 0] = 0.0
    out = ifft(spec, 2).real
    return out / (np.abs(out).max() + 1e-12)


def natural_image(size: int = 128, channels: int = 1, seed: int = 0) -> np.ndarray:
    """Scene-like C x H x W image in [0, 1]: soft-edged shapes over 1/f texture."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size
    base = np.zeros((channels, size, size))
    base += 0.5 + 0.25 * (yy - 0.5)  # gentle illumination gradient
    for _ in range(12):
        cy, cx = rng.uniform(0, 1, 2)
        r = rng.uniform(0.05, 0.25)
        edge = rng.uniform(0.005, 0.02)
        color = rng.uniform(-0.45, 0.45, channels)[:, None, None]
        if rng.random() < 0.5:
            d = np.hypot(yy - cy, xx - cx) - r
        else:
            d = np.maximum(np.abs(yy - cy), np.abs(xx - cx)) - r
        mask = 1.0 / (1.0 + np.exp(d / edge))
        base = base * (1 - 0.7 * mask) + 0.7 * mask * (0.5 + color)
    for c in range(channels):
        base[c] += 0.12 * _pink_noise(rng, (size, size), 1.0)
    return np.clip(base, 0.0, 1.0)


def texture_image(size: int = 128, channels: int = 3, seed: int = 1) -> np.ndarray:
    """Structured style image: oriented stripes modulated by blobs, in [0, 1]."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size
    img = np.zeros((channels, size, size))
    for c in range(channels):
        theta = rng.uniform(0, np.pi)
        freq = rng.uniform(6, 14)
        phase = rng.uniform(0, 2 * np.pi)
        stripes = np.sin(2 * np.pi * freq * (np.cos(theta) * xx + np.sin(theta) * yy) + phase)
        img[c] = 0.5 + 0.35 * stripes * (0.6 + 0.4 * _pink_noise(rng, (size, size), 2.0))
    return np.clip(img, 0.0, 1.0)


def resize_bilinear(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of a C x H x W array (pixel-center aligned)."""
    img = np.asarray(image, dtype=np.float64)
    _, h, w = img.shape
    ys = np.clip((np.arange(height) + 0.5) * h / height - 0.5, 0, h - 1)
    xs = np.clip((np.arange(width) + 0.5) * w / width - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[None, :, None]
    wx = (xs - x0)[None, None, :]
    top = img[:, y0][:, :, x0] * (1 - wx) + img[:, y0][:, :, x1] * wx
    bot = img[:, y1][:, :, x0] * (1 - wx) + img[:, y1][:, :, x1] * wx
    return top * (1 - wy) + bot * wy


def psnr(u, v) -> float:
    """Peak signal-to-noise ratio in dB for [0, 1] images; ``inf`` if identical."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"psnr: shape mismatch {u.shape} vs {v.shape}")
    err = float(np.mean((u - v) ** 2))
    if err == 0.0:
        return float("inf")
    return 10.0 * np.log10(1.0 / err)
