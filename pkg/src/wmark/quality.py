"""Structural similarity (luminance/contrast/structure decomposition) and MSE.

Local statistics use an 8x8 sliding window with stride 1 and uniform weights.
Variances and the cross term are unbiased sample estimates (N-1 normalization).
Pixel values enter the formulas as-is in [0, 255].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QualityConfig:
    window: int = 8
    c1: float = (0.01 * 255.0) ** 2
    c2: float = (0.03 * 255.0) ** 2
    c3: float = (0.03 * 255.0) ** 2 / 2.0

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if min(self.c1, self.c2, self.c3) <= 0:
            raise ValueError("stabilizing constants must be positive")


DEFAULT_CONFIG = QualityConfig()


@dataclass(frozen=True)
class SsimComponents:
    luminance: float
    contrast: float
    structure: float

    @property
    def score(self) -> float:
        return self.luminance * self.contrast * self.structure


def local_components(x, y, cfg: QualityConfig = DEFAULT_CONFIG) -> SsimComponents:
    """Luminance, contrast and structure terms for one pair of windows."""
    xa = np.asarray(x, dtype=np.float64).ravel()
    ya = np.asarray(y, dtype=np.float64).ravel()
    if xa.size != ya.size:
        raise ValueError(f"window size mismatch: {xa.size} vs {ya.size}")
    n = xa.size
    mx, my = xa.mean(), ya.mean()
    vx = ((xa - mx) ** 2).sum() / (n - 1)
    vy = ((ya - my) ** 2).sum() / (n - 1)
    cov = ((xa - mx) * (ya - my)).sum() / (n - 1)
    sx, sy = np.sqrt(vx), np.sqrt(vy)
    lum = (2.0 * mx * my + cfg.c1) / (mx * mx + my * my + cfg.c1)
    con = (2.0 * sx * sy + cfg.c2) / (vx + vy + cfg.c2)
    struct = (cov + cfg.c3) / (sx * sy + cfg.c3)
    return SsimComponents(lum, con, struct)


def _window_sums(a: np.ndarray, w: int) -> np.ndarray:
    # Summed-area table; exact in float64 for integer-valued inputs.
    s = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=s[1:, 1:])
    return s[w:, w:] - s[:-w, w:] - s[w:, :-w] + s[:-w, :-w]


def ssim_map(x, y, cfg: QualityConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Per-window SSIM scores over all sliding windows (stride 1).

    Shape is (H - window + 1, W - window + 1). Uses the collapsed
    contrast-structure form, which equals contrast * structure exactly
    when c3 == c2 / 2.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape:
        raise ValueError(f"image shape mismatch: {xa.shape} vs {ya.shape}")
    w = cfg.window
    if xa.shape[0] < w or xa.shape[1] < w:
        raise ValueError(f"image {xa.shape} smaller than {w}x{w} window")
    n = w * w
    sx = _window_sums(xa, w)
    sy = _window_sums(ya, w)
    sxx = _window_sums(xa * xa, w)
    syy = _window_sums(ya * ya, w)
    sxy = _window_sums(xa * ya, w)
    mx = sx / n
    my = sy / n
    vx = (sxx - n * mx * mx) / (n - 1)
    vy = (syy - n * my * my) / (n - 1)
    cov = (sxy - n * mx * my) / (n - 1)
    lum = (2.0 * mx * my + cfg.c1) / (mx * mx + my * my + cfg.c1)
    cs = (2.0 * cov + cfg.c2) / (vx + vy + cfg.c2)
    if abs(cfg.c3 - cfg.c2 / 2.0) > 1e-12 * cfg.c2:
        # General constants: keep the three terms separate.
        sdx = np.sqrt(np.maximum(vx, 0.0))
        sdy = np.sqrt(np.maximum(vy, 0.0))
        con = (2.0 * sdx * sdy + cfg.c2) / (vx + vy + cfg.c2)
        struct = (cov + cfg.c3) / (sdx * sdy + cfg.c3)
        cs = con * struct
    return lum * cs


def mean_ssim(x, y, cfg: QualityConfig = DEFAULT_CONFIG) -> tuple[np.ndarray, float]:
    """SSIM map plus its arithmetic mean over all windows."""
    smap = ssim_map(x, y, cfg)
    return smap, float(smap.mean())


def ssim(x, y, cfg: QualityConfig = DEFAULT_CONFIG) -> float:
    """Mean SSIM only."""
    return float(ssim_map(x, y, cfg).mean())


def mse(x, y) -> float:
    """Mean squared error between two same-shaped images."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape:
        raise ValueError(f"image shape mismatch: {xa.shape} vs {ya.shape}")
    d = xa - ya
    return float(np.mean(d * d))
