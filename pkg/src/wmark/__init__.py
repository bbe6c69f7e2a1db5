"""Block-adaptive grayscale image watermarking with an SSIM stopping threshold."""

from .adaptive import (
    ALGORITHMS,
    BlockEmbedResult,
    EmbedConfig,
    ImageEmbedResult,
    embed_block_adaptive,
    embed_image_adaptive,
    embed_image_original,
)
from .attacks import AttackSpec, gaussian_noise, jpeg_like, lowpass
from .imagio import BlockGrid, Image, assemble, image_from_array, load_image, partition, save_image
from .quality import QualityConfig, SsimComponents, local_components, mean_ssim, mse, ssim
from .transforms import dct2, dwt2_haar, idct2, idwt2_haar, scan, unscan, zigzag
from .watermarkers import (
    CdmaParams,
    DctEmbedParams,
    DwtParams,
    LsbParams,
    WatermarkKey,
    embed_cdma,
    embed_dct,
    embed_dwt,
    embed_lsb,
    extract_lsb,
    gen_sequence,
    walsh_codes,
)

__version__ = "0.1.0"
