"""Orthonormal 2-D transforms: DCT-II with zig-zag ordering, and Haar DWT.

Both transforms use orthonormal scaling, so coefficient energy equals pixel
energy (Parseval) and round-trips are exact to floating-point precision.
The DWT uses the standard quad layout: approximation in the top-left corner,
three detail subbands per level.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft

_SQRT2 = np.sqrt(2.0)


def dct2(block) -> np.ndarray:
    """Orthonormal 2-D DCT-II of a square block."""
    a = np.asarray(block, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
        raise ValueError(f"expected a square block with n >= 2, got {a.shape}")
    return scipy.fft.dctn(a, norm="ortho")


def idct2(coeffs) -> np.ndarray:
    """Inverse of dct2."""
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"expected square coefficients, got {c.shape}")
    return scipy.fft.idctn(c, norm="ortho")


@lru_cache(maxsize=None)
def zigzag(n: int) -> tuple[tuple[int, int], ...]:
    """JPEG-style anti-diagonal zig-zag order for an n x n block.

    Starts at DC (0, 0); even anti-diagonals run bottom-left to top-right,
    odd ones the opposite way.
    """
    if n < 1:
        raise ValueError("n must be positive")
    order = []
    for s in range(2 * n - 1):
        lo = max(0, s - n + 1)
        hi = min(n - 1, s)
        rows = range(hi, lo - 1, -1) if s % 2 == 0 else range(lo, hi + 1)
        order.extend((r, s - r) for r in rows)
    return tuple(order)


@lru_cache(maxsize=None)
def _zigzag_flat(n: int) -> np.ndarray:
    return np.array([r * n + c for r, c in zigzag(n)], dtype=np.intp)


def scan(coeffs, order=None) -> np.ndarray:
    """Flatten a square coefficient block in zig-zag order (DC first)."""
    c = np.asarray(coeffs)
    n = c.shape[0]
    flat = _zigzag_flat(n) if order is None else np.array(
        [r * n + col for r, col in order], dtype=np.intp
    )
    return c.ravel()[flat].copy()


def unscan(values, n: int, order=None) -> np.ndarray:
    """Inverse of scan: rebuild the n x n block from a zig-zag list."""
    v = np.asarray(values)
    if v.size != n * n:
        raise ValueError(f"expected {n * n} values, got {v.size}")
    flat = _zigzag_flat(n) if order is None else np.array(
        [r * n + col for r, col in order], dtype=np.intp
    )
    out = np.empty(n * n, dtype=np.float64)
    out[flat] = v
    return out.reshape(n, n)


def dwt2_haar(block, levels: int = 1) -> np.ndarray:
    """Orthonormal 2-D Haar analysis, ``levels`` deep, in quad layout."""
    a = np.asarray(block, dtype=np.float64)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError(f"expected a square block, got {a.shape}")
    if levels < 1 or n % (1 << levels):
        raise ValueError(f"n={n} not divisible by 2^levels={1 << levels}")
    out = a.copy()
    size = n
    for _ in range(levels):
        sub = out[:size, :size]
        lo = (sub[:, 0::2] + sub[:, 1::2]) / _SQRT2
        hi = (sub[:, 0::2] - sub[:, 1::2]) / _SQRT2
        sub = np.hstack([lo, hi])
        lo = (sub[0::2, :] + sub[1::2, :]) / _SQRT2
        hi = (sub[0::2, :] - sub[1::2, :]) / _SQRT2
        out[:size, :size] = np.vstack([lo, hi])
        size //= 2
    return out


def idwt2_haar(coeffs, levels: int = 1) -> np.ndarray:
    """Inverse of dwt2_haar."""
    c = np.asarray(coeffs, dtype=np.float64)
    n = c.shape[0]
    if c.ndim != 2 or c.shape[1] != n:
        raise ValueError(f"expected square coefficients, got {c.shape}")
    if levels < 1 or n % (1 << levels):
        raise ValueError(f"n={n} not divisible by 2^levels={1 << levels}")
    out = c.copy()
    size = n >> (levels - 1)
    for _ in range(levels):
        sub = out[:size, :size]
        half = size // 2
        lo, hi = sub[:half, :], sub[half:, :]
        up = np.empty_like(sub)
        up[0::2, :] = (lo + hi) / _SQRT2
        up[1::2, :] = (lo - hi) / _SQRT2
        lo, hi = up[:, :half], up[:, half:]
        rec = np.empty_like(sub)
        rec[:, 0::2] = (lo + hi) / _SQRT2
        rec[:, 1::2] = (lo - hi) / _SQRT2
        out[:size, :size] = rec
        size *= 2
    return out


def detail_positions(n: int, levels: int) -> np.ndarray:
    """Flat indices of all detail coefficients in the quad layout.

    Enumerated coarsest level first, then per level the three subbands
    (top-right, bottom-left, bottom-right), each row-major. The length is
    n^2 - (n / 2^levels)^2.
    """
    idx = []
    for lev in range(levels, 0, -1):
        size = n >> (lev - 1)
        half = size // 2
        for r0, c0 in ((0, half), (half, 0), (half, half)):
            for r in range(r0, r0 + half):
                base = r * n
                idx.extend(range(base + c0, base + c0 + half))
    return np.array(idx, dtype=np.intp)


def level1_detail_positions(n: int) -> np.ndarray:
    """Flat indices of the finest-level detail subbands, fixed scan order."""
    half = n // 2
    idx = []
    for r0, c0 in ((0, half), (half, 0), (half, half)):
        for r in range(r0, r0 + half):
            base = r * n
            idx.extend(range(base + c0, base + c0 + half))
    return np.array(idx, dtype=np.intp)
