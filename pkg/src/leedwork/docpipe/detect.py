"""Text-region detection: enhancement pipeline, geometric candidate
filtering, and merging of adjacent boxes into line regions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filters import (
    adaptive_threshold,
    canny_edges,
    connected_components,
    gaussian_blur,
    morphological_open,
)
from .raster import BinaryImage, RasterPage

REFERENCE_DPI = 600


@dataclass(frozen=True)
class DetectParams:
    sigma: float = 1.0
    threshold_window: int = 31  # at 600 DPI; scaled to the page's dpi
    threshold_c: float = 10.0
    open_kernel: tuple[int, int] = (3, 3)
    canny_low: float = 50.0
    canny_high: float = 150.0
    min_area: int = 40
    max_area_fraction: float = 0.05
    aspect_min: float = 0.04
    aspect_max: float = 25.0
    fill_min: float = 0.15
    merge_gap_factor: float = 0.5


@dataclass(frozen=True)
class TextRegion:
    bbox: tuple[int, int, int, int]  # (x, y, w, h)
    component_count: int
    score: float


def _scaled_window(window: int, dpi: int) -> int:
    scaled = max(3, round(window * dpi / REFERENCE_DPI))
    return scaled if scaled % 2 == 1 else scaled + 1


def binarize(page: RasterPage, params: DetectParams = DetectParams()) -> BinaryImage:
    """Blur, adaptive-threshold, then open (hatching removal)."""
    blurred = gaussian_blur(page, params.sigma)
    window = _scaled_window(params.threshold_window, page.dpi)
    binary = adaptive_threshold(blurred, window, params.threshold_c)
    return morphological_open(binary, params.open_kernel)


def detect_text_regions(
    page: RasterPage, params: DetectParams = DetectParams()
) -> list[TextRegion]:
    """Full candidate pipeline.

    blur -> adaptive threshold -> open -> Canny -> connected components
    -> geometric filter -> horizontal merge into line regions. Fill
    ratio is measured on the cleaned binary image within each candidate
    bbox, so solid text strokes qualify while sparse line art does not.
    Output is sorted top-to-bottom then left-to-right.
    """
    opened = binarize(page, params)
    edges = canny_edges(opened, params.canny_low, params.canny_high)
    components = connected_components(edges, connectivity=8)

    page_area = page.width * page.height
    max_area = params.max_area_fraction * page_area
    candidates = []
    for comp in components:
        x, y, w, h = comp.bbox
        if not (params.min_area <= comp.area <= max_area):
            continue
        aspect = w / h
        if not (params.aspect_min <= aspect <= params.aspect_max):
            continue
        fill = np.count_nonzero(opened.bits[y : y + h, x : x + w]) / (w * h)
        if fill < params.fill_min:
            continue
        candidates.append((comp, fill))
    if not candidates:
        return []

    heights = sorted(comp.bbox[3] for comp, _ in candidates)
    median_height = heights[len(heights) // 2]
    gap = params.merge_gap_factor * median_height

    boxes = [list(comp.bbox) + [1, fill] for comp, fill in candidates]
    merged = _merge_adjacent(boxes, gap)
    regions = [
        TextRegion(bbox=(x, y, w, h), component_count=n, score=min(1.0, fill))
        for x, y, w, h, n, fill in merged
    ]
    regions.sort(key=lambda r: (r.bbox[1], r.bbox[0]))
    return regions


def _merge_adjacent(boxes: list[list], gap: float) -> list[list]:
    """Union horizontally adjacent boxes (gap-limited, rows overlapping)
    until a fixpoint."""
    changed = True
    while changed:
        changed = False
        out: list[list] = []
        for box in sorted(boxes, key=lambda b: (b[1], b[0])):
            for other in out:
                if _mergeable(other, box, gap):
                    x = min(other[0], box[0])
                    y = min(other[1], box[1])
                    other[2] = max(other[0] + other[2], box[0] + box[2]) - x
                    other[3] = max(other[1] + other[3], box[1] + box[3]) - y
                    other[0], other[1] = x, y
                    other[4] += box[4]
                    other[5] = max(other[5], box[5])
                    changed = True
                    break
            else:
                out.append(box)
        boxes = out
    return boxes


def _mergeable(a: list, b: list, gap: float) -> bool:
    ax0, ay0, aw, ah = a[:4]
    bx0, by0, bw, bh = b[:4]
    vertical_overlap = min(ay0 + ah, by0 + bh) - max(ay0, by0)
    if vertical_overlap <= 0:
        return False
    horizontal_gap = max(ax0, bx0) - min(ax0 + aw, bx0 + bw)
    return horizontal_gap <= gap
