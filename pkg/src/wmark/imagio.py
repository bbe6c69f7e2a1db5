"""8-bit grayscale images: PGM (P5) file I/O and k x k block partitioning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ImageError(Exception):
    """Raised for malformed image data or files."""


@dataclass(frozen=True, eq=False)
class Image:
    """A grayscale raster. ``pixels`` is a 2-D uint8 array, row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.ndim != 2:
            raise ImageError("pixels must be a 2-D array")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ImageError("image dimensions must be positive")
        if p.dtype != np.uint8:
            raise ImageError("pixels must be uint8")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(
            self.pixels, other.pixels
        )

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.pixels
        return self.pixels.astype(dtype)


def image_from_array(arr) -> Image:
    """Build an Image from any array of values already in [0, 255]."""
    a = np.asarray(arr)
    if a.ndim != 2:
        raise ImageError("expected a 2-D array")
    if a.size and (a.min() < 0 or a.max() > 255):
        raise ImageError("samples outside [0, 255]")
    return Image(a.astype(np.uint8))


@dataclass(frozen=True)
class BlockGrid:
    """Partition geometry: k x k blocks covering a (possibly padded) image."""

    k: int
    blocks_x: int
    blocks_y: int
    width: int   # original image width
    height: int  # original image height

    @property
    def n_blocks(self) -> int:
        return self.blocks_x * self.blocks_y

    @property
    def padded_width(self) -> int:
        return self.blocks_x * self.k

    @property
    def padded_height(self) -> int:
        return self.blocks_y * self.k


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Skips whitespace and '#' comment lines, returns next header token.
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ImageError("truncated PGM header")
    return data[start:pos], pos


def load_image(path) -> Image:
    """Read a binary 8-bit PGM (P5) file. Samples are taken verbatim."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise ImageError(f"unsupported format (expected P5): {path}")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(data, pos)
        fields.append(tok)
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise ImageError(f"malformed PGM header: {path}") from None
    if width < 1 or height < 1:
        raise ImageError(f"bad dimensions {width}x{height}: {path}")
    if not 1 <= maxval <= 255:
        raise ImageError(f"unsupported bit depth (maxval {maxval}): {path}")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos:pos + width * height]
    if len(payload) < width * height:
        raise ImageError(f"truncated pixel payload: {path}")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Image(pixels.copy())


def save_image(img: Image, path) -> None:
    """Write ``img`` as a canonical binary PGM: 'P5\\n<w> <h>\\n255\\n' + raw bytes."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.pixels.tobytes())


def partition(img: Image, k: int, pad: bool = False) -> tuple[BlockGrid, list[np.ndarray]]:
    """Split ``img`` into k x k blocks in row-major order.

    Dimensions must be divisible by k unless ``pad`` is set, in which case the
    right/bottom edges are replicated out to the next multiple of k.
    """
    if k < 2:
        raise ImageError(f"block size must be >= 2, got {k}")
    a = img.pixels
    h, w = a.shape
    if (h % k or w % k) and not pad:
        raise ImageError(f"dimensions {w}x{h} not divisible by k={k} and padding disabled")
    pad_h = (-h) % k
    pad_w = (-w) % k
    if pad_h or pad_w:
        a = np.pad(a, ((0, pad_h), (0, pad_w)), mode="edge")
    by, bx = a.shape[0] // k, a.shape[1] // k
    grid = BlockGrid(k=k, blocks_x=bx, blocks_y=by, width=w, height=h)
    blocks = [
        a[r * k:(r + 1) * k, c * k:(c + 1) * k].copy()
        for r in range(by)
        for c in range(bx)
    ]
    return grid, blocks


def assemble(grid: BlockGrid, blocks: list[np.ndarray]) -> Image:
    """Inverse of partition: stitch blocks back and crop any padding."""
    if len(blocks) != grid.n_blocks:
        raise ImageError(f"expected {grid.n_blocks} blocks, got {len(blocks)}")
    k = grid.k
    out = np.empty((grid.padded_height, grid.padded_width), dtype=np.uint8)
    for i, blk in enumerate(blocks):
        if blk.shape != (k, k):
            raise ImageError(f"block {i} has shape {blk.shape}, expected ({k}, {k})")
        r, c = divmod(i, grid.blocks_x)
        out[r * k:(r + 1) * k, c * k:(c + 1) * k] = blk
    return Image(out[:grid.height, :grid.width].copy())
