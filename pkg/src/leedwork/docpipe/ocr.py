"""OCR adapters and the end-to-end document extraction entry point.

The adapter contract: given a grayscale crop, return (text, confidence,
language hint). Production adapters wrap an external engine invoked as a
subprocess (PNG crop on stdin, one JSON object on stdout); a
deterministic stub ships for offline runs and tests.
"""
from __future__ import annotations

import io
import json
import subprocess
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..orchestrator import TransientTaskError
from .detect import DetectParams, TextRegion, detect_text_regions
from .raster import RasterPage


@dataclass(frozen=True)
class ExtractedText:
    region: TextRegion
    text: str
    confidence: float
    language_hint: str = "unknown"  # ko | en | mixed | unknown


class OcrAdapter(Protocol):
    def recognize(self, crop: np.ndarray) -> tuple[str, float, str]:
        """Return (text, confidence, language hint) for a grayscale crop."""
        ...


class StubOcrAdapter:
    """Deterministic offline adapter: returns canned strings in call
    order, or a geometry-derived placeholder when the script runs out."""

    def __init__(self, texts: list[str] | None = None, language: str = "en"):
        self.texts = list(texts or [])
        self.language = language
        self._calls = 0

    def recognize(self, crop: np.ndarray) -> tuple[str, float, str]:
        idx = self._calls
        self._calls += 1
        if idx < len(self.texts):
            return self.texts[idx], 1.0, self.language
        h, w = crop.shape
        return f"region-{idx}-{w}x{h}", 1.0, self.language


class SubprocessOcrAdapter:
    """Invokes an external OCR engine per region crop."""

    def __init__(self, command: list[str]):
        self.command = list(command)

    def recognize(self, crop: np.ndarray) -> tuple[str, float, str]:
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(crop, mode="L").save(buf, format="PNG")
        try:
            proc = subprocess.run(
                self.command, input=buf.getvalue(), capture_output=True, timeout=120
            )
        except FileNotFoundError as exc:
            raise TransientTaskError(f"OCR adapter unavailable: {self.command[0]}") from exc
        if proc.returncode != 0:
            raise RuntimeError(f"OCR adapter failed: {proc.stderr.decode(errors='replace')[:200]}")
        reply = json.loads(proc.stdout.decode("utf-8"))
        return reply["text"], float(reply["confidence"]), reply.get("lang", "unknown")


def ocr_extract(
    page: RasterPage, regions: list[TextRegion], adapter: OcrAdapter
) -> list[ExtractedText]:
    """Run the adapter over each region crop, preserving region order.

    Adapter unavailability propagates as a transient error; a per-region
    failure records empty text at confidence 0 and the pipeline moves on.
    """
    out: list[ExtractedText] = []
    for region in regions:
        x, y, w, h = region.bbox
        crop = page.pixels[y : y + h, x : x + w]
        try:
            text, confidence, lang = adapter.recognize(crop)
        except TransientTaskError:
            raise
        except Exception:
            out.append(ExtractedText(region, "", 0.0, "unknown"))
            continue
        out.append(ExtractedText(region, text, confidence, lang))
    return out


@dataclass
class StageMetrics:
    components_found: int = 0
    regions_kept: int = 0
    regions_ocrd: int = 0


@dataclass
class DocumentExtraction:
    pages: list[list[ExtractedText]] = field(default_factory=list)
    metrics: list[StageMetrics] = field(default_factory=list)


def process_document(
    doc: list[RasterPage],
    adapter: OcrAdapter,
    params: DetectParams = DetectParams(),
) -> DocumentExtraction:
    """Detect and OCR text regions on every page of a document."""
    from .detect import binarize
    from .filters import canny_edges, connected_components

    extraction = DocumentExtraction()
    for page in doc:
        opened = binarize(page, params)
        edges = canny_edges(opened, params.canny_low, params.canny_high)
        n_components = len(connected_components(edges, connectivity=8))
        regions = detect_text_regions(page, params)
        texts = ocr_extract(page, regions, adapter)
        extraction.pages.append(texts)
        extraction.metrics.append(
            StageMetrics(
                components_found=n_components,
                regions_kept=len(regions),
                regions_ocrd=len(texts),
            )
        )
    return extraction
