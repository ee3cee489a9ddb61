"""Image enhancement stages: Gaussian blur, adaptive threshold,
morphological opening, connected components, and Canny edges."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import BinaryImage, RasterPage


class FilterParameterError(ValueError):
    pass


def _gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D kernel with radius ceil(3*sigma), weights normalized to sum 1."""
    radius = math.ceil(3 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(offsets**2) / (2 * sigma**2))
    return weights / weights.sum()


def gaussian_blur(page: RasterPage, sigma: float = 1.0) -> RasterPage:
    """Separable discrete Gaussian with edge-replicated borders."""
    if sigma <= 0:
        raise FilterParameterError("sigma must be > 0")
    kernel = _gaussian_kernel(sigma)
    radius = (len(kernel) - 1) // 2
    img = page.pixels.astype(np.float64)
    padded = np.pad(img, ((0, 0), (radius, radius)), mode="edge")
    img = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="valid"), 1, padded)
    padded = np.pad(img, ((radius, radius), (0, 0)), mode="edge")
    img = np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="valid"), 0, padded)
    return RasterPage(np.clip(np.rint(img), 0, 255).astype(np.uint8), dpi=page.dpi)


def gaussian_blur_float(pixels: np.ndarray, sigma: float) -> np.ndarray:
    """Blur without the uint8 rounding, for mass-conservation checks."""
    kernel = _gaussian_kernel(sigma)
    radius = (len(kernel) - 1) // 2
    img = np.asarray(pixels, dtype=np.float64)
    padded = np.pad(img, ((0, 0), (radius, radius)), mode="edge")
    img = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="valid"), 1, padded)
    padded = np.pad(img, ((radius, radius), (0, 0)), mode="edge")
    return np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="valid"), 0, padded)


def adaptive_threshold(page: RasterPage, window: int = 31, c: float = 10.0) -> BinaryImage:
    """Foreground where intensity < local mean - c (dark ink on light).

    Local mean is taken over a window x window neighborhood with edge
    replication. Window must be odd and >= 3.
    """
    if window < 3 or window % 2 == 0:
        raise FilterParameterError(f"window must be odd and >= 3, got {window}")
    img = page.pixels.astype(np.float64)
    local_mean = ndimage.uniform_filter(img, size=window, mode="nearest")
    return BinaryImage(img < local_mean - c)


_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)


def morphological_open(img: BinaryImage, kernel: tuple[int, int] = (3, 3)) -> BinaryImage:
    """Erosion then dilation with a filled kw x kh rectangle.

    Removes foreground features thinner than the kernel while leaving
    larger solids intact. Pixels outside the image are background.
    """
    kw, kh = kernel
    if kw < 1 or kh < 1:
        raise FilterParameterError("kernel dimensions must be >= 1")
    structure = np.ones((kh, kw), dtype=bool)
    eroded = ndimage.binary_erosion(img.bits, structure=structure, border_value=0)
    opened = ndimage.binary_dilation(eroded, structure=structure, border_value=0)
    return BinaryImage(opened)


@dataclass(frozen=True)
class Component:
    label: int
    area: int
    bbox: tuple[int, int, int, int]  # (x, y, w, h)


def connected_components(img: BinaryImage, connectivity: int = 8) -> list[Component]:
    """Exhaustive foreground labeling, sorted by (bbox.y, bbox.x)."""
    if connectivity not in (4, 8):
        raise FilterParameterError("connectivity must be 4 or 8")
    structure = _STRUCT_4 if connectivity == 4 else _STRUCT_8
    labels, count = ndimage.label(img.bits, structure=structure)
    components: list[Component] = []
    for label, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        ys, xs = sl
        area = int(np.count_nonzero(labels[sl] == label))
        components.append(
            Component(
                label=label,
                area=area,
                bbox=(xs.start, ys.start, xs.stop - xs.start, ys.stop - ys.start),
            )
        )
    components.sort(key=lambda comp: (comp.bbox[1], comp.bbox[0]))
    return components


def canny_edges(
    img: BinaryImage, low: float = 50.0, high: float = 150.0
) -> BinaryImage:
    """Canny on the cleaned binary image (intensities 0/255).

    Sobel gradients, orientation-quantized non-maximum suppression, then
    two-threshold hysteresis: strong edges (>= high) seed, weak edges
    (>= low) survive when 8-connected to a strong edge.
    """
    gray = img.bits.astype(np.float64) * 255.0
    gx = ndimage.sobel(gray, axis=1, mode="nearest")
    gy = ndimage.sobel(gray, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0

    # Non-maximum suppression along the quantized gradient direction.
    suppressed = np.zeros_like(mag)
    padded = np.pad(mag, 1, mode="constant")
    h, w = mag.shape
    direction = np.zeros((h, w, 2), dtype=np.int8)
    direction[(angle < 22.5) | (angle >= 157.5)] = (0, 1)
    direction[(angle >= 22.5) & (angle < 67.5)] = (1, 1)
    direction[(angle >= 67.5) & (angle < 112.5)] = (1, 0)
    direction[(angle >= 112.5) & (angle < 157.5)] = (1, -1)
    ys, xs = np.nonzero(mag > 0)
    for y, x in zip(ys, xs):
        dy, dx = direction[y, x]
        m = mag[y, x]
        if m >= padded[y + 1 + dy, x + 1 + dx] and m >= padded[y + 1 - dy, x + 1 - dx]:
            suppressed[y, x] = m

    strong = suppressed >= high
    weak = suppressed >= low
    labels, _ = ndimage.label(weak, structure=_STRUCT_8)
    keep = np.unique(labels[strong])
    edges = weak & np.isin(labels, keep[keep > 0])
    return BinaryImage(edges)
