"""Block-adaptive embedding driven by a structural-similarity threshold.

Each block is watermarked repeatedly with a growing keyed sequence, always
re-embedded into the pristine block. Growth stops once a candidate's SSIM
falls to the threshold or below (or capacity / the iteration cap runs out).
Under the default accept rule the result is the longest candidate still
above the threshold, so every marked block keeps SSIM > thr2.

The non-adaptive counterparts embed one long sequence into the whole image
in a single pass, for capacity-matched comparisons.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import quality
from .imagio import BlockGrid, Image, assemble, partition
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
from .watermarkers import (
    CdmaParams,
    DctEmbedParams,
    DwtParams,
    WatermarkKey,
    _finish_block,
    bipolar,
    block_readout,
    cdma_superposition,
    embed_cdma,
    embed_dct,
    embed_dwt,
    embed_lsb_sequence,
    gen_sequence,
    spread_spectrum,
)

ALGORITHMS = ("lsb", "dct", "dwt", "cdma")
ACCEPT_RULES = ("last_above", "first_below")
STOP_THRESHOLD = "threshold"
STOP_CAPACITY = "capacity_exhausted"
STOP_MAX_ITERS = "max_iters"


def level1_detail_count(k: int) -> int:
    return 3 * (k // 2) ** 2


def _pow2_floor(n: int) -> int:
    p = 1
    while p * 2 <= n:
        p *= 2
    return p


@dataclass(frozen=True)
class EmbedConfig:
    """Algorithm selection plus the per-iteration growth schedule."""

    algo: str
    thr2: float = 0.8
    k: int = 32
    accept_rule: str = "last_above"
    max_iters: int = 64
    pad: bool = False
    # lsb: planes added per iteration
    plane_step: int = 1
    # dct: bits per iteration and strength schedule alpha_t = alpha0 * (1 + t*delta)
    skip: int = 64
    step_l: int = 32
    alpha0: float = 0.1
    alpha_delta: float = 0.25
    # single-pass (non-adaptive) DCT strength; 0.2 is the strength the
    # original spread-spectrum scheme was published with
    dct_orig_alpha: float = 0.2
    # dwt: coefficients per iteration, fixed strength
    step_m: int = 8
    dwt_alpha: float = 0.25
    levels: int = 2
    # cdma: groups added per iteration
    group_step: int = 1
    group_size: int = 4
    code_len: int = 64
    cdma_alpha: float = 1.0
    cdma_gain: float = 1.0
    quality_cfg: quality.QualityConfig = field(default=quality.DEFAULT_CONFIG)

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm: {self.algo}")
        if not 0.0 < self.thr2 <= 1.0:
            raise ValueError("thr2 must be in (0, 1]")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.accept_rule not in ACCEPT_RULES:
            raise ValueError(f"unknown accept rule: {self.accept_rule}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("plane_step", "step_l", "step_m", "group_step"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def cdma_params(self) -> CdmaParams:
        return CdmaParams(
            group_size=self.group_size,
            code_len=self.code_len,
            alpha=self.cdma_alpha,
            gain=self.cdma_gain,
        )

    def capacity_bits(self) -> int:
        """Maximum bits one k x k block can carry under this config."""
        k = self.k
        if self.algo == "lsb":
            return 8 * k * k
        if self.algo == "dct":
            return max(0, k * k - self.skip)
        if self.algo == "dwt":
            return k * k - (k >> self.levels) ** 2
        return min(self.code_len, level1_detail_count(k)) * self.group_size

    def iteration_bits(self, t: int) -> int:
        """Sequence length for 0-based iteration t."""
        if self.algo == "lsb":
            return (t + 1) * self.plane_step * self.k * self.k
        if self.algo == "dct":
            return (t + 1) * self.step_l
        if self.algo == "dwt":
            return (t + 1) * self.step_m
        return (t + 1) * self.group_step * self.group_size

    def scaled_for_block_size(self, k: int) -> "EmbedConfig":
        """Re-derive size-dependent knobs for a different block side.

        The defaults are tuned for k=32; skip and step sizes scale with the
        block area so sweeps over k stay comparable, and the CDMA code
        length shrinks when a block has fewer level-1 details than 64.
        """
        ratio = (k * k) / (32 * 32)
        return replace(
            self,
            k=k,
            skip=max(1, round(self.skip * ratio)),
            step_l=max(1, round(self.step_l * ratio)),
            step_m=max(1, round(self.step_m * ratio)),
            code_len=min(64, _pow2_floor(3 * k * k // 4)),
        )


@dataclass(frozen=True)
class BlockEmbedResult:
    w_block: np.ndarray
    bits_embedded: int
    iterations: int
    final_ssim: float
    stop_reason: str


@dataclass(frozen=True)
class ImageEmbedResult:
    watermarked: Image
    grid: BlockGrid
    block_results: list[BlockEmbedResult]
    total_sequence: np.ndarray

    @property
    def total_bits(self) -> int:
        return int(self.total_sequence.size)

    @property
    def block_bits(self) -> list[int]:
        return [r.bits_embedded for r in self.block_results]


def _embed_candidate(block: np.ndarray, seq: np.ndarray, cfg: EmbedConfig, t: int) -> np.ndarray:
    if cfg.algo == "lsb":
        return embed_lsb_sequence(block, seq, len(seq) // (cfg.k * cfg.k))
    if cfg.algo == "dct":
        alpha = cfg.alpha0 * (1.0 + t * cfg.alpha_delta)
        return embed_dct(block, seq, DctEmbedParams(skip=cfg.skip, alpha=alpha, m=len(seq)))
    if cfg.algo == "dwt":
        return embed_dwt(block, seq, DwtParams(alpha=cfg.dwt_alpha, m=len(seq), levels=cfg.levels))
    return embed_cdma(block, seq, cfg.cdma_params())


def embed_block_adaptive(block, key: WatermarkKey, cfg: EmbedConfig) -> BlockEmbedResult:
    """Grow the mark in one block until its SSIM drops to thr2 or below.

    Every iteration embeds a longer sequence prefix into the pristine block.
    accept_rule 'last_above' returns the longest candidate whose SSIM stayed
    above thr2 (the unmodified block if none did); 'first_below' returns the
    first candidate at or below the threshold.
    """
    host = np.asarray(block, dtype=np.uint8)
    if host.shape != (cfg.k, cfg.k):
        raise ValueError(f"block shape {host.shape} does not match k={cfg.k}")
    capacity = cfg.capacity_bits()
    best = BlockEmbedResult(host.copy(), 0, 0, 1.0, STOP_MAX_ITERS)
    stop_reason = STOP_MAX_ITERS
    attempts = 0
    for t in range(cfg.max_iters):
        n_bits = cfg.iteration_bits(t)
        if n_bits > capacity:
            stop_reason = STOP_CAPACITY
            break
        seq = gen_sequence(key, n_bits)
        candidate = _embed_candidate(host, seq, cfg, t)
        score = quality.ssim(host, candidate, cfg.quality_cfg)
        attempts = t + 1
        if score > cfg.thr2:
            best = BlockEmbedResult(candidate, n_bits, attempts, score, stop_reason)
            continue
        # SSIM fell to the threshold: stop growing.
        if cfg.accept_rule == "first_below":
            return BlockEmbedResult(candidate, n_bits, attempts, score, STOP_THRESHOLD)
        return BlockEmbedResult(best.w_block, best.bits_embedded, attempts,
                                best.final_ssim, STOP_THRESHOLD)
    # Capacity or iteration cap reached with every candidate above threshold.
    return BlockEmbedResult(best.w_block, best.bits_embedded, attempts,
                            best.final_ssim, stop_reason)


def thread_count() -> int:
    """Worker count: the WMARK_THREADS environment variable, default 1."""
    raw = os.environ.get("WMARK_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def embed_image_adaptive(img: Image, seed: int, cfg: EmbedConfig,
                         threads: int | None = None) -> ImageEmbedResult:
    """Run the adaptive loop over every block and reassemble the image.

    Output is independent of the worker count: each block's stream is keyed
    by its index and results are placed by index.
    """
    grid, blocks = partition(img, cfg.k, pad=cfg.pad)
    workers = thread_count() if threads is None else max(1, threads)

    def run(i: int) -> BlockEmbedResult:
        return embed_block_adaptive(blocks[i], WatermarkKey(seed, i), cfg)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(blocks))))
    else:
        results = [run(i) for i in range(len(blocks))]

    watermarked = assemble(grid, [r.w_block for r in results])
    parts = [gen_sequence(WatermarkKey(seed, i), r.bits_embedded)
             for i, r in enumerate(results)]
    total = np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)
    return ImageEmbedResult(watermarked, grid, results, total)


# ---------------------------------------------------------------------------
# Non-adaptive (whole image, single pass) embedding for comparisons
# ---------------------------------------------------------------------------

def embed_image_original(img: Image, seq: np.ndarray, cfg: EmbedConfig) -> Image:
    """Embed the full sequence into the whole image without SSIM gating.

    lsb: uniform N = ceil(len / (W*H)) planes; pixels consume N bits each in
    raster order until the sequence runs out.  dct/dwt: the whole-image
    transform with fixed strength (alpha0 / dwt_alpha).  cdma: consecutive
    code_len-sized segments of level-1 details, code_len groups per segment.
    """
    seq = np.asarray(seq, dtype=np.uint8)
    if seq.size == 0:
        return Image(img.pixels.copy())
    a = img.pixels
    h, w = a.shape
    if cfg.algo == "lsb":
        return _original_lsb(a, seq)
    if h != w:
        raise ValueError("whole-image transform embedding requires a square image")
    if cfg.algo == "dct":
        if cfg.skip + seq.size > h * w:
            raise ValueError(f"sequence of {seq.size} exceeds image capacity")
        coeffs = scan(dct2(a))
        sl = slice(cfg.skip, cfg.skip + seq.size)
        coeffs[sl] = spread_spectrum(coeffs[sl], bipolar(seq), cfg.dct_orig_alpha)
        return Image(_finish_block(idct2(unscan(coeffs, h))))
    if cfg.algo == "dwt":
        coeffs = dwt2_haar(a, cfg.levels)
        pos = detail_positions(h, cfg.levels)
        if seq.size > pos.size:
            raise ValueError(f"sequence of {seq.size} exceeds {pos.size} detail coefficients")
        flat = coeffs.ravel()
        target = pos[np.argsort(-np.abs(flat[pos]), kind="stable")][:seq.size]
        flat[target] = spread_spectrum(flat[target], bipolar(seq), cfg.dwt_alpha)
        return Image(_finish_block(idwt2_haar(coeffs, cfg.levels)))
    if cfg.algo == "cdma":
        return _original_cdma(a, seq, cfg)
    raise ValueError(f"unknown algorithm: {cfg.algo}")


def _original_lsb(a: np.ndarray, seq: np.ndarray) -> Image:
    h, w = a.shape
    total = h * w
    n_planes = -(-seq.size // total)  # ceil
    if n_planes > 8:
        raise ValueError(f"sequence of {seq.size} exceeds 8 * {total} bits")
    flat = a.ravel().copy()
    full, rem = divmod(seq.size, n_planes)
    # Pixel i consumes bits [i*N, (i+1)*N), most significant replaced bit first.
    head = seq[:full * n_planes].reshape(full, n_planes)
    weights = (1 << np.arange(n_planes - 1, -1, -1)).astype(np.uint8)
    values = (head * weights).sum(axis=1).astype(np.uint8)
    keep = np.uint8(0xFF << n_planes & 0xFF)
    flat[:full] = (flat[:full] & keep) | values
    if rem:
        tail = seq[full * n_planes:]
        value = 0
        for b in tail:
            value = (value << 1) | int(b)
        # Partial pixel: only the top `rem` of its N low planes are replaced.
        keep_tail = np.uint8(~(((1 << rem) - 1) << (n_planes - rem)) & 0xFF)
        flat[full] = (flat[full] & keep_tail) | (value << (n_planes - rem))
    return Image(flat.reshape(h, w))


def _original_cdma(a: np.ndarray, seq: np.ndarray, cfg: EmbedConfig) -> Image:
    params = cfg.cdma_params()
    if seq.size % cfg.group_size:
        raise ValueError(f"{seq.size} bits not divisible by group_size {cfg.group_size}")
    n_groups = seq.size // cfg.group_size
    groups_per_seg = params.code_len
    n_segments = -(-n_groups // groups_per_seg)
    pos = level1_detail_positions(a.shape[0])
    if n_segments * params.code_len > pos.size:
        raise ValueError(f"sequence of {seq.size} exceeds CDMA capacity")
    bits_per_seg = groups_per_seg * cfg.group_size
    coeffs = dwt2_haar(a, 1)
    flat = coeffs.ravel()
    for s in range(n_segments):
        bits = seq[s * bits_per_seg:(s + 1) * bits_per_seg]
        chips = cdma_superposition(bits, params)
        sl = pos[s * params.code_len:(s + 1) * params.code_len]
        flat[sl] += params.alpha * chips
    return Image(_finish_block(idwt2_haar(coeffs, 1)))


# ---------------------------------------------------------------------------
# Whole-image correlation readout (needs the per-block bit counts)
# ---------------------------------------------------------------------------

def image_readout(img: Image, block_bits: list[int], cfg: EmbedConfig) -> np.ndarray:
    """Concatenated per-block coefficient readouts in block order."""
    _, blocks = partition(img, cfg.k, pad=cfg.pad)
    if len(block_bits) != len(blocks):
        raise ValueError(f"{len(block_bits)} bit counts for {len(blocks)} blocks")
    params = _readout_params(cfg)
    outs = [block_readout(blocks[i], block_bits[i], cfg.algo, params)
            for i in range(len(blocks))]
    return np.concatenate(outs) if outs else np.zeros(0, dtype=np.float64)


def _readout_params(cfg: EmbedConfig):
    if cfg.algo == "dct":
        return DctEmbedParams(skip=cfg.skip, alpha=cfg.alpha0, m=0)
    if cfg.algo == "dwt":
        return DwtParams(alpha=cfg.dwt_alpha, m=0, levels=cfg.levels)
    if cfg.algo == "cdma":
        return cfg.cdma_params()
    return None


def true_sequence(seed: int, block_bits: list[int]) -> np.ndarray:
    """Rebuild the concatenated embedded sequence from seed and bit counts."""
    parts = [gen_sequence(WatermarkKey(seed, i), b) for i, b in enumerate(block_bits)]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)
