"""Runtime configuration: adapter endpoints, worker count, retry policy,
memory threshold, and data directories.

A single JSON config document; the LEEDW_CONFIG environment variable
overrides the default path. Everything defaults to the bundled offline
fixtures so a fresh checkout runs with no network access.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .orchestrator import RetryPolicy

ENV_VAR = "LEEDW_CONFIG"
DEFAULT_CONFIG_PATH = "leedwork.config.json"


def data_dir() -> Path:
    """Bundled fixture data shipped inside the package."""
    return Path(resources.files("leedwork") / "data")


@dataclass
class Config:
    workers: int = 4
    memory_threshold: float = 0.70
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    rules_dir: Optional[str] = None  # default: bundled sample rules
    kb_dir: Optional[str] = None  # default: bundled knowledge base
    gis_fixture: Optional[str] = None  # default: bundled fixture city
    ocr_command: Optional[list[str]] = None  # external OCR; stub when unset
    llm_base_url: Optional[str] = None  # chat endpoint; mock when unset
    llm_model: str = "gemma3"
    embedding_base_url: Optional[str] = None  # hashed fallback when unset
    engine_path: Optional[str] = None  # external simulator; builtin when unset
    projects_root: str = "projects"

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 < self.memory_threshold <= 1:
            raise ValueError("memory_threshold must lie in (0, 1]")

    @property
    def rules_path(self) -> Path:
        return Path(self.rules_dir) if self.rules_dir else data_dir() / "rules"

    @property
    def kb_path(self) -> Path:
        return Path(self.kb_dir) if self.kb_dir else data_dir() / "kb"

    @property
    def gis_path(self) -> Path:
        return Path(self.gis_fixture) if self.gis_fixture else data_dir() / "gis" / "fixture_city.json"

    @classmethod
    def from_dict(cls, doc: dict) -> "Config":
        retry_doc = doc.pop("retry", {})
        retry = RetryPolicy(
            max_attempts=retry_doc.get("max_attempts", 3),
            base_delay=retry_doc.get("base_delay", 0.5),
            backoff_factor=retry_doc.get("backoff_factor", 2.0),
        )
        known = {f for f in cls.__dataclass_fields__ if f != "retry"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(retry=retry, **doc)

    @classmethod
    def load(cls, path: Optional[str] = None) -> "Config":
        path = path or os.environ.get(ENV_VAR) or DEFAULT_CONFIG_PATH
        if not Path(path).exists():
            return cls()
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
