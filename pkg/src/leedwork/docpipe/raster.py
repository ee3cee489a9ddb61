"""Raster page and binary image types plus PNG/PGM input."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MIN_DPI = 72


class RasterError(Exception):
    pass


class UnsupportedInputError(RasterError):
    pass


@dataclass
class RasterPage:
    """Grayscale page, row-major intensities in [0, 255]."""

    pixels: np.ndarray  # (height, width) uint8
    dpi: int = 600

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise RasterError("page must be a non-empty 2-D grayscale array")
        if self.dpi < MIN_DPI:
            raise UnsupportedInputError(f"dpi {self.dpi} below minimum {MIN_DPI}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class BinaryImage:
    """Boolean raster; True marks foreground (ink)."""

    bits: np.ndarray  # (height, width) bool

    def __post_init__(self) -> None:
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2:
            raise RasterError("binary image must be 2-D")

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


def load_page(path: str | Path, dpi: int = 600) -> RasterPage:
    """Read an 8-bit grayscale PNG or binary PGM (P5) page."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return RasterPage(_read_pgm(path), dpi=dpi)
    from PIL import Image

    with Image.open(path) as img:
        gray = img.convert("L")
        return RasterPage(np.asarray(gray, dtype=np.uint8), dpi=dpi)


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":  # comment line
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise RasterError(f"not a binary PGM: magic {fields[0]!r}")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval > 255:
        raise RasterError("16-bit PGM not supported")
    pos += 1  # single whitespace after maxval
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return raster.reshape(height, width).copy()
