"""Keyed watermark sequences and the four base block embedders.

Sequences come from a counter-based generator, so bit i depends only on
(seed, block_index, i): extending a sequence never changes its prefix, and
blocks can be processed in any order with identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import hadamard

from .transforms import (
    dct2,
    detail_positions,
    dwt2_haar,
    idct2,
    idwt2_haar,
    level1_detail_positions,
    scan,
    unscan,
)

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_BLOCK_SALT = 0x632BE59BD9B4E019


def _mix64(z: int) -> int:
    # SplitMix64 finalizer.
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class WatermarkKey:
    seed: int
    block_index: int = 0

    def stream_base(self) -> int:
        return _mix64(_mix64(self.seed & _MASK64) ^ ((self.block_index + _BLOCK_SALT) & _MASK64))


def gen_sequence(key: WatermarkKey, n: int) -> np.ndarray:
    """First ``n`` bits of the key's stream, as a uint8 array of 0/1."""
    if n < 0:
        raise ValueError("sequence length must be >= 0")
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    base = np.uint64(key.stream_base())
    with np.errstate(over="ignore"):
        z = base + np.arange(n, dtype=np.uint64) * np.uint64(_GAMMA)
        z ^= z >> np.uint64(30)
        z *= np.uint64(0xBF58476D1CE4E5B9)
        z ^= z >> np.uint64(27)
        z *= np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
    return (z & np.uint64(1)).astype(np.uint8)


def bipolar(bits) -> np.ndarray:
    """Map bits {0,1} to {-1,+1} as float64."""
    return 2.0 * np.asarray(bits, dtype=np.float64) - 1.0


def _finish_block(values: np.ndarray) -> np.ndarray:
    # Round half away from zero, then clamp to the 8-bit range.
    rounded = np.copysign(np.floor(np.abs(values) + 0.5), values)
    return np.clip(rounded, 0.0, 255.0).astype(np.uint8)


def spread_spectrum(values: np.ndarray, marks: np.ndarray, alpha: float) -> np.ndarray:
    """Additive multiplicative-strength rule: v' = v + alpha * |v| * x."""
    v = np.asarray(values, dtype=np.float64)
    return v + alpha * np.abs(v) * np.asarray(marks, dtype=np.float64)


# ---------------------------------------------------------------------------
# LSB (spatial domain)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LsbParams:
    n_planes: int = 1

    def __post_init__(self):
        if not 0 <= self.n_planes <= 8:
            raise ValueError("n_planes must be in [0, 8]")


def embed_lsb(block, mark_block, n_planes: int) -> np.ndarray:
    """Replace the host's N low bit planes with the mark's N high planes."""
    if not 0 <= n_planes <= 8:
        raise ValueError("n_planes must be in [0, 8]")
    host = np.asarray(block, dtype=np.uint8)
    mark = np.asarray(mark_block, dtype=np.uint8)
    if host.shape != mark.shape:
        raise ValueError(f"shape mismatch: {host.shape} vs {mark.shape}")
    if n_planes == 0:
        return host.copy()
    keep = np.uint8(0xFF << n_planes & 0xFF)
    return (host & keep) | (mark >> (8 - n_planes))


def extract_lsb(w_block, n_planes: int) -> np.ndarray:
    """Recover the mark's top N planes (zero-filled below)."""
    if not 0 <= n_planes <= 8:
        raise ValueError("n_planes must be in [0, 8]")
    w = np.asarray(w_block, dtype=np.uint8)
    if n_planes == 0:
        return np.zeros_like(w)
    mask = np.uint8((1 << n_planes) - 1)
    return (w & mask).astype(np.uint8) << (8 - n_planes)


def mark_block_from_bits(bits: np.ndarray, shape: tuple[int, int], n_planes: int) -> np.ndarray:
    """Build an 8-bit mark block whose top N planes carry ``bits``.

    Plane chunks are consumed most-significant first: bits[0:size] fill
    plane 7, the next chunk plane 6, and so on.
    """
    size = shape[0] * shape[1]
    if len(bits) != n_planes * size:
        raise ValueError(f"need {n_planes * size} bits, got {len(bits)}")
    mark = np.zeros(size, dtype=np.uint8)
    for p in range(n_planes):
        mark |= bits[p * size:(p + 1) * size].astype(np.uint8) << (7 - p)
    return mark.reshape(shape)


def embed_lsb_sequence(block, bits: np.ndarray, n_planes: int) -> np.ndarray:
    """Embed a bit sequence of length N * k^2 as N mark planes."""
    host = np.asarray(block, dtype=np.uint8)
    mark = mark_block_from_bits(bits, host.shape, n_planes)
    return embed_lsb(host, mark, n_planes)


def extract_lsb_bits(w_block, n_planes: int) -> np.ndarray:
    """Read back the plane-ordered bit sequence embedded by embed_lsb_sequence."""
    w = np.asarray(w_block, dtype=np.uint8).ravel()
    chunks = [(w >> (n_planes - 1 - p)) & 1 for p in range(n_planes)]
    return np.concatenate(chunks).astype(np.uint8) if chunks else np.zeros(0, dtype=np.uint8)


# ---------------------------------------------------------------------------
# DCT spread spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DctEmbedParams:
    skip: int = 64     # lowest zig-zag ranks left untouched; DC is never modified
    alpha: float = 0.1
    m: int = 32

    def __post_init__(self):
        if self.skip < 1:
            raise ValueError("skip must be >= 1 (DC is never modified)")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.m < 0:
            raise ValueError("m must be >= 0")


def embed_dct(block, seq: np.ndarray, params: DctEmbedParams) -> np.ndarray:
    """Spread-spectrum embedding on zig-zag ranks [skip, skip + m)."""
    host = np.asarray(block, dtype=np.uint8)
    n = host.shape[0]
    if params.skip + params.m > n * n:
        raise ValueError(f"skip+m = {params.skip + params.m} exceeds {n * n} coefficients")
    if len(seq) < params.m:
        raise ValueError(f"sequence too short: {len(seq)} < {params.m}")
    coeffs = scan(dct2(host))
    sl = slice(params.skip, params.skip + params.m)
    coeffs[sl] = spread_spectrum(coeffs[sl], bipolar(seq[:params.m]), params.alpha)
    return _finish_block(idct2(unscan(coeffs, n)))


def dct_coefficients(image_or_block, skip: int, m: int) -> np.ndarray:
    """The m zig-zag coefficients starting at rank ``skip``."""
    a = np.asarray(image_or_block, dtype=np.float64)
    return scan(dct2(a))[skip:skip + m]


# ---------------------------------------------------------------------------
# Wavelet (largest-magnitude detail coefficients)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DwtParams:
    alpha: float = 0.25
    m: int = 8
    levels: int = 2


def _ranked_details(coeffs: np.ndarray, levels: int) -> np.ndarray:
    # Detail positions sorted by magnitude descending; ties keep subband-scan order.
    pos = detail_positions(coeffs.shape[0], levels)
    mags = np.abs(coeffs.ravel()[pos])
    order = np.argsort(-mags, kind="stable")
    return pos[order]


def embed_dwt(block, seq: np.ndarray, params: DwtParams) -> np.ndarray:
    """Spread-spectrum embedding on the m largest-magnitude detail coefficients."""
    host = np.asarray(block, dtype=np.uint8)
    n = host.shape[0]
    coeffs = dwt2_haar(host, params.levels)
    capacity = n * n - (n >> params.levels) ** 2
    if params.m > capacity:
        raise ValueError(f"m={params.m} exceeds {capacity} detail coefficients")
    if len(seq) < params.m:
        raise ValueError(f"sequence too short: {len(seq)} < {params.m}")
    flat = coeffs.ravel()
    target = _ranked_details(coeffs, params.levels)[:params.m]
    flat[target] = spread_spectrum(flat[target], bipolar(seq[:params.m]), params.alpha)
    return _finish_block(idwt2_haar(coeffs, params.levels))


def dwt_coefficients(image_or_block, m: int, levels: int) -> np.ndarray:
    """The m largest-magnitude detail coefficients, in ranking order."""
    a = np.asarray(image_or_block, dtype=np.float64)
    coeffs = dwt2_haar(a, levels)
    target = _ranked_details(coeffs, levels)[:m]
    return coeffs.ravel()[target]


# ---------------------------------------------------------------------------
# CDMA (orthogonal spreading over level-1 details)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CdmaParams:
    group_size: int = 4
    code_len: int = 64
    alpha: float = 1.0
    gain: float = 1.0

    def __post_init__(self):
        if self.group_size < 1:
            raise ValueError("group_size must be >= 1")
        if self.code_len < 1 or self.code_len & (self.code_len - 1):
            raise ValueError("code_len must be a power of 2")


def walsh_codes(n: int) -> np.ndarray:
    """Rows of the order-n Sylvester Hadamard matrix: n orthogonal bipolar codes."""
    if n < 1 or n & (n - 1):
        raise ValueError("n must be a power of 2")
    return hadamard(n).astype(np.float64)


def group_symbols(bits: np.ndarray, group_size: int) -> np.ndarray:
    """Multilevel bipolar symbols, one per bit group.

    Each group of bits is read as an unsigned integer v and mapped to
    (2v - (2^g - 1)) / (2^g - 1), an odd-spaced level in [-1, 1]. For
    group_size 1 this is the plain 0 -> -1, 1 -> +1 map.
    """
    b = np.asarray(bits, dtype=np.float64)
    if b.size % group_size:
        raise ValueError(f"{b.size} bits not divisible by group_size {group_size}")
    weights = 2.0 ** np.arange(group_size - 1, -1, -1)
    vals = b.reshape(-1, group_size) @ weights
    full = 2.0 ** group_size - 1.0
    return (2.0 * vals - full) / full


def cdma_superposition(bits: np.ndarray, params: CdmaParams) -> np.ndarray:
    """Sum of gain-weighted, symbol-modulated Walsh codes (length code_len)."""
    symbols = group_symbols(bits, params.group_size)
    if symbols.size > params.code_len:
        raise ValueError(f"{symbols.size} groups exceed {params.code_len} codes")
    codes = walsh_codes(params.code_len)[:symbols.size]
    return params.gain * (symbols @ codes)


def embed_cdma(block, seq: np.ndarray, params: CdmaParams) -> np.ndarray:
    """Add the code superposition onto the first code_len level-1 details."""
    host = np.asarray(block, dtype=np.uint8)
    n = host.shape[0]
    pos = level1_detail_positions(n)
    if params.code_len > pos.size:
        raise ValueError(f"code_len {params.code_len} exceeds {pos.size} level-1 details")
    chips = cdma_superposition(np.asarray(seq), params)
    coeffs = dwt2_haar(host, 1)
    flat = coeffs.ravel()
    flat[pos[:params.code_len]] += params.alpha * chips
    return _finish_block(idwt2_haar(coeffs, 1))


def cdma_despread(image_or_block, n_groups: int, params: CdmaParams) -> np.ndarray:
    """Per-group despread values from the first code_len level-1 details."""
    a = np.asarray(image_or_block, dtype=np.float64)
    n = a.shape[0]
    pos = level1_detail_positions(n)[:params.code_len]
    received = dwt2_haar(a, 1).ravel()[pos]
    codes = walsh_codes(params.code_len)[:n_groups]
    return (codes @ received) / params.code_len


# ---------------------------------------------------------------------------
# Correlation detection
# ---------------------------------------------------------------------------

def block_readout(w_block, n_bits: int, algo: str, params) -> np.ndarray:
    """Per-bit coefficient readouts d_i for one block.

    The readout uses the same positions the embedder writes: zig-zag ranks
    for dct, magnitude-ranked details for dwt, despread values (repeated
    across each group's bits) for cdma, and sign-mapped plane bits for lsb.
    """
    if n_bits == 0:
        return np.zeros(0, dtype=np.float64)
    if algo == "lsb":
        w = np.asarray(w_block, dtype=np.uint8)
        n_planes = n_bits // w.size
        return bipolar(extract_lsb_bits(w, n_planes))
    if algo == "dct":
        return dct_coefficients(w_block, params.skip, n_bits)
    if algo == "dwt":
        return dwt_coefficients(w_block, n_bits, params.levels)
    if algo == "cdma":
        u = cdma_despread(w_block, n_bits // params.group_size, params)
        return np.repeat(u, params.group_size)
    raise ValueError(f"unknown algorithm: {algo}")


def correlation_score(readout: np.ndarray, candidate_bits: np.ndarray) -> float:
    """Raw mean-product score (1/M) * sum(d_i * x_i)."""
    if readout.size == 0:
        raise ValueError("zero-length sequence")
    if readout.size != candidate_bits.size:
        raise ValueError(f"length mismatch: {readout.size} vs {candidate_bits.size}")
    return float(np.dot(readout, bipolar(candidate_bits)) / readout.size)


def correlation_detect(image_readout: np.ndarray, candidate_bits: np.ndarray) -> float:
    """Alias for correlation_score on a precomputed whole-image readout."""
    return correlation_score(image_readout, candidate_bits)
