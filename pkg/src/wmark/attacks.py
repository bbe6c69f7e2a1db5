"""Robustness attacks: additive Gaussian noise, mean filtering, JPEG-style
quantization. All attacks preserve dimensions and the 8-bit range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .imagio import Image
from .watermarkers import _finish_block

# ITU-T T.81 Annex K luminance quantization table.
JPEG_LUMA_Q = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)

DEFAULT_SIGMA = 10.0
DEFAULT_KERNEL = 3
DEFAULT_QUALITY = 50


@dataclass(frozen=True)
class AttackSpec:
    kind: str  # gaussian | lpf | jpeg
    sigma: float = DEFAULT_SIGMA
    kernel: int = DEFAULT_KERNEL
    quality: int = DEFAULT_QUALITY
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "lpf", "jpeg"):
            raise ValueError(f"unknown attack kind: {self.kind}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError("kernel must be odd and >= 1")
        if not 1 <= self.quality <= 100:
            raise ValueError("quality must be in [1, 100]")

    def apply(self, img: Image) -> Image:
        if self.kind == "gaussian":
            return gaussian_noise(img, self.sigma, self.seed)
        if self.kind == "lpf":
            return lowpass(img, self.kernel)
        return jpeg_like(img, self.quality)


def gaussian_noise(img: Image, sigma: float, seed: int = 0) -> Image:
    """Additive white Gaussian noise, deterministic for a given seed."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return Image(img.pixels.copy())
    rng = np.random.default_rng(seed)
    noisy = img.pixels.astype(np.float64) + rng.standard_normal(img.pixels.shape) * sigma
    return Image(_finish_block(noisy))


def lowpass(img: Image, kernel: int) -> Image:
    """Uniform mean filter with replicate-edge padding."""
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError("kernel must be odd and >= 1")
    if kernel == 1:
        return Image(img.pixels.copy())
    r = kernel // 2
    padded = np.pad(img.pixels, r, mode="edge").astype(np.float64)
    # Summed-area table: window sums are exact for integer inputs.
    s = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(padded, axis=0), axis=1, out=s[1:, 1:])
    w = kernel
    sums = s[w:, w:] - s[:-w, w:] - s[w:, :-w] + s[:-w, :-w]
    return Image(_finish_block(sums / (w * w)))


def jpeg_quant_table(quality: int) -> np.ndarray:
    """Annex K luminance table scaled by the conventional quality factor."""
    if not 1 <= quality <= 100:
        raise ValueError("quality must be in [1, 100]")
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    q = np.floor((JPEG_LUMA_Q * scale + 50.0) / 100.0)
    return np.clip(q, 1.0, 255.0)


def jpeg_like(img: Image, quality: int) -> Image:
    """JPEG-style degradation: 8x8 DCT quantization round-trip.

    No entropy coding; coefficient quantization is the signal-destroying
    step. Edges are replicate-padded to a multiple of 8 and cropped back.
    """
    q = jpeg_quant_table(quality)
    a = img.pixels.astype(np.float64)
    h, w = a.shape
    pad_h, pad_w = (-h) % 8, (-w) % 8
    if pad_h or pad_w:
        a = np.pad(a, ((0, pad_h), (0, pad_w)), mode="edge")
    hh, ww = a.shape
    # Tile into (hh/8, ww/8, 8, 8), transform both block axes at once.
    tiles = a.reshape(hh // 8, 8, ww // 8, 8).transpose(0, 2, 1, 3) - 128.0
    coeffs = scipy.fft.dctn(tiles, axes=(2, 3), norm="ortho")
    coeffs = np.rint(coeffs / q) * q
    rec = scipy.fft.idctn(coeffs, axes=(2, 3), norm="ortho") + 128.0
    out = rec.transpose(0, 2, 1, 3).reshape(hh, ww)[:h, :w]
    return Image(_finish_block(out))


def default_attacks(seed: int = 0) -> list[AttackSpec]:
    """The three attack channels at their default strengths."""
    return [
        AttackSpec("gaussian", sigma=DEFAULT_SIGMA, seed=seed),
        AttackSpec("lpf", kernel=DEFAULT_KERNEL),
        AttackSpec("jpeg", quality=DEFAULT_QUALITY),
    ]
