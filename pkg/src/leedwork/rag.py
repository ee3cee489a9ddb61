"""Knowledge base construction and retrieval.

Reference guides are chunked per credit unit (heading convention
"<CATEGORY> <Prerequisite|Credit>: <Name> (<N> point[s])") with the
credit metadata parsed from the heading. Embeddings come from an HTTP
adapter in production; a deterministic hashed bag-of-words embedder
ships for offline use. Search is exact cosine top-k with optional
metadata filtering.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from .orchestrator import TransientTaskError

DEFAULT_DIM = 384

HEADING = re.compile(
    r"^(?P<category>LT|SS|WE|EA|MR|EQ|IN)\s+(?P<kind>Prerequisite|Credit):\s+"
    r"(?P<name>.+?)\s+\((?P<points>\d+)\s+points?\)\s*$",
    re.MULTILINE,
)


class VectorIndexError(Exception):
    pass


@dataclass(frozen=True)
class CreditChunk:
    chunk_id: str
    text: str
    category: str
    credit_name: str
    point_value: int
    kind: str  # prerequisite | credit
    source_doc: str = ""

    @property
    def metadata(self) -> dict:
        return {
            "category": self.category,
            "credit_name": self.credit_name,
            "point_value": self.point_value,
            "kind": self.kind,
        }


@dataclass
class ChunkingResult:
    chunks: list[CreditChunk]
    warnings: list[str] = field(default_factory=list)
    frontmatter: str = ""


def chunk_reference_guide(doc: str, source_doc: str = "") -> ChunkingResult:
    """Segment a reference document into one chunk per credit heading.

    Chunk text spans its heading to the next heading. Text before the
    first heading is discarded with a frontmatter warning; unparseable
    headings never match and fall into the preceding chunk's body.
    """
    matches = list(HEADING.finditer(doc))
    result = ChunkingResult(chunks=[])
    if not matches:
        if doc.strip():
            result.warnings.append("no credit headings found; whole document discarded")
            result.frontmatter = doc
        return result
    if matches[0].start() > 0:
        result.frontmatter = doc[: matches[0].start()]
        if result.frontmatter.strip():
            result.warnings.append("text before first credit heading discarded as frontmatter")
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(doc)
        kind = m.group("kind").lower()
        prefix = "p" if kind == "prerequisite" else "c"
        chunk_id = f"{m.group('category')}{prefix}-{_slug(m.group('name'))}"
        result.chunks.append(
            CreditChunk(
                chunk_id=chunk_id,
                text=doc[m.start() : end],
                category=m.group("category"),
                credit_name=m.group("name"),
                point_value=int(m.group("points")),
                kind=kind,
                source_doc=source_doc,
            )
        )
    return result


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


# -- embedding ----------------------------------------------------------

_TOKEN = re.compile(r"[a-z0-9]+")


def hashed_embedding(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Deterministic fallback embedder.

    Tokens hash into dim buckets; term weights are sublinear
    (1 + log(tf)); the result is L2-normalized.
    """
    if not text.strip():
        raise ValueError("cannot embed empty text")
    counts: dict[int, int] = {}
    for token in _TOKEN.findall(text.lower()):
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:4], "big") % dim
        counts[bucket] = counts.get(bucket, 0) + 1
    vec = np.zeros(dim, dtype=np.float64)
    for bucket, tf in counts.items():
        vec[bucket] = 1.0 + np.log(tf)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("text produced no tokens")
    return vec / norm


class HttpEmbeddingAdapter:
    """POSTs {"texts": [...]} and expects {"vectors": [[...], ...]}."""

    def __init__(self, base_url: str, dim: int = DEFAULT_DIM, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.dim = dim
        self.timeout = timeout

    def embed(self, text: str) -> np.ndarray:
        import httpx

        try:
            resp = httpx.post(
                f"{self.base_url}/embed", json={"texts": [text]}, timeout=self.timeout
            )
            resp.raise_for_status()
        except Exception as exc:
            raise TransientTaskError(f"embedding adapter unavailable: {exc}") from exc
        vec = np.asarray(resp.json()["vectors"][0], dtype=np.float64)
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


def embed_text(
    text: str,
    adapter=None,
    dim: int = DEFAULT_DIM,
    fallback: bool = True,
) -> np.ndarray:
    """Unit-norm embedding via the adapter, or the hashed fallback."""
    if adapter is not None:
        try:
            return adapter.embed(text)
        except TransientTaskError:
            if not fallback:
                raise
    return hashed_embedding(text, dim)


# -- vector index --------------------------------------------------------


@dataclass(frozen=True)
class RetrievalHit:
    chunk_id: str
    score: float
    rank: int


@dataclass
class VectorIndex:
    dim: int
    chunk_ids: list[str] = field(default_factory=list)
    vectors: Optional[np.ndarray] = None  # (n, dim), unit rows
    metadata: list[dict] = field(default_factory=list)
    texts: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.chunk_ids)

    def save(self, path: str | Path) -> None:
        doc = {
            "version": 1,
            "dim": self.dim,
            "chunk_ids": self.chunk_ids,
            "vectors": [] if self.vectors is None else self.vectors.tolist(),
            "metadata": self.metadata,
            "texts": self.texts,
        }
        Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if doc.get("version") != 1:
            raise VectorIndexError(f"unsupported index version: {doc.get('version')}")
        vectors = np.asarray(doc["vectors"], dtype=np.float64) if doc["vectors"] else None
        return cls(
            dim=doc["dim"],
            chunk_ids=doc["chunk_ids"],
            vectors=vectors,
            metadata=doc["metadata"],
            texts=doc.get("texts", {}),
        )


def build_index(
    chunks: Iterable[CreditChunk],
    adapter=None,
    dim: int = DEFAULT_DIM,
) -> VectorIndex:
    """Embed all chunks into an exact-search index."""
    chunks = list(chunks)
    seen: set[str] = set()
    for chunk in chunks:
        if chunk.chunk_id in seen:
            raise VectorIndexError(f"duplicate chunk_id: {chunk.chunk_id}")
        seen.add(chunk.chunk_id)
    index = VectorIndex(dim=dim)
    if not chunks:
        return index
    rows = []
    for chunk in chunks:
        rows.append(embed_text(chunk.text, adapter=adapter, dim=dim))
        index.chunk_ids.append(chunk.chunk_id)
        index.metadata.append(chunk.metadata)
        index.texts[chunk.chunk_id] = chunk.text
    index.vectors = np.vstack(rows)
    return index


def search_topk(
    index: VectorIndex,
    query: str,
    k: int = 5,
    metadata_filter: Optional[Callable[[dict], bool]] = None,
    adapter=None,
) -> list[RetrievalHit]:
    """Exact top-k cosine search over the (optionally filtered) entries.

    Hits are sorted by descending score; ties break on ascending
    chunk_id. Fewer than k matches returns fewer hits.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if index.vectors is None or len(index) == 0:
        return []
    query_vec = embed_text(query, adapter=adapter, dim=index.dim)
    keep = [
        i
        for i in range(len(index))
        if metadata_filter is None or metadata_filter(index.metadata[i])
    ]
    if not keep:
        return []
    scores = index.vectors[keep] @ query_vec
    ranked = sorted(
        zip(scores, (index.chunk_ids[i] for i in keep)),
        key=lambda pair: (-pair[0], pair[1]),
    )
    return [
        RetrievalHit(chunk_id=cid, score=float(score), rank=rank)
        for rank, (score, cid) in enumerate(ranked[:k], start=1)
    ]
