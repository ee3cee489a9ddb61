"""Document preprocessing and text-region extraction pipeline."""
from .detect import DetectParams, TextRegion, binarize, detect_text_regions
from .filters import (
    Component,
    FilterParameterError,
    adaptive_threshold,
    canny_edges,
    connected_components,
    gaussian_blur,
    gaussian_blur_float,
    morphological_open,
)
from .ocr import (
    DocumentExtraction,
    ExtractedText,
    OcrAdapter,
    StubOcrAdapter,
    SubprocessOcrAdapter,
    ocr_extract,
    process_document,
)
from .raster import BinaryImage, RasterPage, UnsupportedInputError, load_page

__all__ = [
    "BinaryImage",
    "Component",
    "DetectParams",
    "DocumentExtraction",
    "ExtractedText",
    "FilterParameterError",
    "OcrAdapter",
    "RasterPage",
    "StubOcrAdapter",
    "SubprocessOcrAdapter",
    "TextRegion",
    "UnsupportedInputError",
    "adaptive_threshold",
    "binarize",
    "canny_edges",
    "connected_components",
    "detect_text_regions",
    "gaussian_blur",
    "gaussian_blur_float",
    "load_page",
    "morphological_open",
    "ocr_extract",
    "process_document",
]
