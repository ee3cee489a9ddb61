"""Unified project data store: the common interface all analysis modules
read inputs from and write results into.

The store is a versioned JSON-shaped tree. Numeric leaves are quantity
dicts ``{"value": <number>, "unit": "<ucum-ish unit>"}`` so every number
carries an explicit unit ("1" for dimensionless). Results subtrees are
owned by the module that produced them and carry provenance entries.
"""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

SCHEMA_VERSION = 1

DIMENSIONLESS = "1"


class StoreError(Exception):
    """Base error for store operations."""


class MergeConflictError(StoreError):
    """A delta tried to write a path owned by a different module."""


class PathSyntaxError(StoreError):
    """Malformed store path."""


class UnsupportedSchemaError(StoreError):
    """Persisted document has an unsupported schema_version."""


def qty(value: float, unit: str = DIMENSIONLESS) -> dict:
    """Build a unit-tagged numeric leaf."""
    return {"value": value, "unit": unit}


def is_quantity(node: Any) -> bool:
    return (
        isinstance(node, dict)
        and set(node.keys()) == {"value", "unit"}
        and isinstance(node["value"], (int, float))
        and not isinstance(node["value"], bool)
        and isinstance(node["unit"], str)
    )


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:  # pragma: no cover - convenience
        return f"{self.path}: {self.message}"


_PATH_TOKEN = re.compile(r"\.([A-Za-z_][\w\-]*)|\[(\d+)\]")


def parse_path(path: str) -> list:
    """Parse a "$.a.b[0].c" path into key/index tokens."""
    if not isinstance(path, str) or not path.startswith("$"):
        raise PathSyntaxError(f"path must start with '$': {path!r}")
    pos = 1
    tokens: list = []
    while pos < len(path):
        m = _PATH_TOKEN.match(path, pos)
        if m is None:
            raise PathSyntaxError(f"malformed path at offset {pos}: {path!r}")
        tokens.append(m.group(1) if m.group(1) is not None else int(m.group(2)))
        pos = m.end()
    return tokens


def join_path(tokens: list) -> str:
    out = "$"
    for t in tokens:
        out += f"[{t}]" if isinstance(t, int) else f".{t}"
    return out


class NotFound:
    """Sentinel for query_path misses."""

    _instance: Optional["NotFound"] = None

    def __new__(cls) -> "NotFound":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "<not-found>"

    def __bool__(self) -> bool:
        return False


NOT_FOUND = NotFound()


@dataclass
class UnifiedStore:
    """Immutable-by-convention snapshot of all project data.

    Mutating operations (merge) return new values; callers must not
    mutate a store they share with others.
    """

    schema_version: int = SCHEMA_VERSION
    project: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    # -- construction -------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "UnifiedStore":
        version = doc.get("schema_version")
        if version is not None and version != SCHEMA_VERSION:
            raise UnsupportedSchemaError(f"unsupported schema_version: {version}")
        return cls(
            schema_version=version if version is not None else SCHEMA_VERSION,
            project=copy.deepcopy(doc.get("project", {})),
            inputs=copy.deepcopy(doc.get("inputs", {})),
            results=copy.deepcopy(doc.get("results", {})),
            provenance=copy.deepcopy(doc.get("provenance", {})),
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "project": self.project,
            "inputs": self.inputs,
            "results": self.results,
            "provenance": self.provenance,
        }

    def copy(self) -> "UnifiedStore":
        return UnifiedStore.from_dict(self.to_dict())

    # -- queries ------------------------------------------------------

    def query_path(self, path: str):
        """Resolve a path to its value.

        Numeric quantity leaves come back as ``(value, unit)``; any other
        node (subtree, text, list) is returned as-is. Misses return the
        NOT_FOUND sentinel; malformed paths raise PathSyntaxError.
        """
        tokens = parse_path(path)
        node: Any = self.to_dict()
        for tok in tokens:
            if isinstance(tok, int):
                if not isinstance(node, list) or tok >= len(node):
                    return NOT_FOUND
                node = node[tok]
            else:
                if not isinstance(node, dict) or tok not in node:
                    return NOT_FOUND
                node = node[tok]
        if is_quantity(node):
            return (node["value"], node["unit"])
        return node

    def has_path(self, path: str) -> bool:
        return self.query_path(path) is not NOT_FOUND


def _walk_leaves(node: Any, tokens: list) -> Iterator[tuple[list, Any]]:
    if is_quantity(node):
        yield tokens, node
    elif isinstance(node, dict):
        for key in node:
            yield from _walk_leaves(node[key], tokens + [key])
    elif isinstance(node, list):
        for i, item in enumerate(node):
            yield from _walk_leaves(item, tokens + [i])
    else:
        yield tokens, node


def validate_store(store: UnifiedStore) -> list[Violation]:
    """Check the store's structural invariants.

    Returns an empty list iff the store is valid; each violation names
    the offending path. Violations are data, never exceptions.
    """
    violations: list[Violation] = []
    doc = store.to_dict()

    if doc.get("schema_version") is None:
        violations.append(Violation("$.schema_version", "schema_version missing"))
    elif doc["schema_version"] != SCHEMA_VERSION:
        violations.append(
            Violation("$.schema_version", f"unsupported schema_version {doc['schema_version']}")
        )

    project = doc.get("project", {})
    if project:
        area = project.get("floor_area")
        if is_quantity(area):
            if area["value"] <= 0:
                violations.append(Violation("$.project.floor_area", "floor_area must be > 0"))
        elif area is not None:
            violations.append(Violation("$.project.floor_area", "floor_area must carry a unit"))
        stories = project.get("stories")
        if stories is not None and (not isinstance(stories, int) or stories < 1):
            violations.append(Violation("$.project.stories", "stories must be >= 1"))

    # Bare numeric leaves (unit tag missing) anywhere under inputs/results.
    for section in ("inputs", "results"):
        for tokens, leaf in _walk_leaves(doc.get(section, {}), [section]):
            if isinstance(leaf, (int, float)) and not isinstance(leaf, bool):
                violations.append(
                    Violation(join_path(tokens), "numeric leaf lacks a unit tag")
                )

    # Every results subtree must be covered by a provenance entry.
    prov_paths = list(store.provenance.keys())
    for module in doc.get("results", {}):
        prefix = f"$.results.{module}"
        covered = any(p == prefix or p.startswith(prefix + ".") for p in prov_paths)
        if not covered:
            violations.append(Violation(prefix, "results subtree has no provenance entry"))

    return violations


def merge_module_results(
    store: UnifiedStore,
    module: str,
    delta: dict,
    task_id: str = "",
    stamp: str = "",
) -> UnifiedStore:
    """Merge a module's result delta into a new store value.

    ``delta`` maps absolute store paths ("$.results.<module>....") to
    values. All paths must fall under the writing module's results
    subtree; writing under another module's subtree is a conflict. The
    input store is left untouched.
    """
    out = store.copy()
    for path in sorted(delta):
        tokens = parse_path(path)
        if tokens[:1] != ["results"] or len(tokens) < 2 or tokens[1] != module:
            raise MergeConflictError(
                f"module {module!r} may not write {path} (owned by {tokens[1] if len(tokens) > 1 else '?'})"
            )
        target = out.results
        # navigate within results subtree, creating dicts along the way
        for tok in tokens[1:-1]:
            if isinstance(tok, int):
                raise MergeConflictError(f"list targets not supported in merge: {path}")
            target = target.setdefault(tok, {})
            if not isinstance(target, dict):
                raise MergeConflictError(f"{path} collides with an existing leaf")
        leaf_key = tokens[-1]
        if isinstance(leaf_key, int):
            raise MergeConflictError(f"list targets not supported in merge: {path}")
        if leaf_key in target and target[leaf_key] != delta[path]:
            owner = _owning_module(out, path)
            if owner is not None and owner != module:
                raise MergeConflictError(f"{path} already owned by module {owner!r}")
        target[leaf_key] = copy.deepcopy(delta[path])
        out.provenance[path] = {"task": task_id or module, "stamp": stamp}
    return out


def _owning_module(store: UnifiedStore, path: str) -> Optional[str]:
    entry = store.provenance.get(path)
    if entry is None:
        return None
    task = entry.get("task", "")
    return task.split(":", 1)[0] if task else None


def persist(store: UnifiedStore) -> bytes:
    """Serialize the store deterministically (stable key order, UTF-8)."""
    violations = validate_store(store)
    if violations:
        raise StoreError(
            "cannot persist invalid store: " + "; ".join(str(v) for v in violations)
        )
    text = json.dumps(store.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def load(data: bytes) -> UnifiedStore:
    """Inverse of persist. Raises UnsupportedSchemaError on unknown versions."""
    doc = json.loads(data.decode("utf-8"))
    if "schema_version" not in doc:
        raise UnsupportedSchemaError("schema_version missing")
    return UnifiedStore.from_dict(doc)
