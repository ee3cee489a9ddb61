"""Draft report generation and verification.

Retrieved credit language plus project results are assembled into
structured prompts, sent to a chat-completion LLM endpoint, and every
numeric claim in the response is cross-checked against the store before
the report is assembled. Flagged claims are never auto-corrected; they
only mark the report as draft.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .credits import CATEGORIES
from .datastore import NOT_FOUND, DIMENSIONLESS, UnifiedStore
from .rag import RetrievalHit

DEFAULT_TOLERANCE = 0.005  # 0.5% relative
EPSILON = 1e-9
KEYWORD_WINDOW = 8  # tokens on each side of a number


class ProtocolError(Exception):
    """Malformed LLM response body; permanent."""


class LlmUnavailable(Exception):
    """HTTP 5xx / timeout; transient, retryable."""


# -- prompt assembly -----------------------------------------------------

PLACEHOLDERS = (
    "credit_id",
    "credit_language",
    "evidence_snippets",
    "project_results",
    "instructions",
)

DEFAULT_TEMPLATE = """You are drafting a LEED submission narrative.

Credit: {credit_id}

Reference credit language:
{credit_language}

Supporting evidence:
{evidence_snippets}

Project results:
{project_results}

Instructions: {instructions}
"""


@dataclass(frozen=True)
class PromptTemplate:
    text: str = DEFAULT_TEMPLATE
    token_budget: int = 2000

    def __post_init__(self) -> None:
        for name in PLACEHOLDERS:
            if self.text.count("{" + name + "}") != 1:
                raise ValueError(f"template must contain {{{name}}} exactly once")


@dataclass
class AssembledPrompt:
    text: str
    credit_id: str
    snippet_ids: list[str]
    store_paths: list[str]
    low_evidence: bool = False


def _token_count(text: str) -> int:
    return len(text.split())


def assemble_prompt(
    template: PromptTemplate,
    credit_id: str,
    hits: list[RetrievalHit],
    chunk_texts: dict[str, str],
    store_slice: dict,
    instructions: str = "Write a concise compliance narrative citing the project results.",
) -> AssembledPrompt:
    """Insert snippets in rank order, dropping lowest-score snippets
    first until the whitespace-token budget fits."""
    ordered = sorted(hits, key=lambda h: h.rank)
    results_text = json.dumps(store_slice, sort_keys=True, indent=2)
    credit_language = chunk_texts.get(ordered[0].chunk_id, "") if ordered else ""

    kept = list(ordered)
    while True:
        snippets = "\n---\n".join(chunk_texts[h.chunk_id] for h in kept)
        text = template.text.format(
            credit_id=credit_id,
            credit_language=credit_language,
            evidence_snippets=snippets or "(no evidence retrieved)",
            project_results=results_text,
            instructions=instructions,
        )
        if _token_count(text) <= template.token_budget or not kept:
            break
        kept.pop()  # lowest-ranked goes first
    return AssembledPrompt(
        text=text,
        credit_id=credit_id,
        snippet_ids=[h.chunk_id for h in kept],
        store_paths=sorted(_flatten_paths(store_slice)),
        low_evidence=not kept,
    )


def _flatten_paths(slice_: dict, prefix: str = "$") -> list[str]:
    out = []
    for key, value in slice_.items():
        path = f"{prefix}.{key}"
        if isinstance(value, dict) and not (
            set(value.keys()) == {"value", "unit"}
        ):
            out.extend(_flatten_paths(value, path))
        else:
            out.append(path)
    return out


# -- generation -----------------------------------------------------------


@dataclass
class VerificationFinding:
    claim_text: str
    parsed_value: Optional[float]
    unit: str
    store_path: Optional[str]
    store_value: Optional[float]
    relative_error: Optional[float]
    verdict: str  # pass | mismatch | unmatched


@dataclass
class DraftSection:
    credit_id: str
    text: str
    provenance: list[str]
    model_id: str = ""
    verification: list[VerificationFinding] = field(default_factory=list)


class MockLlmClient:
    """Canned-response endpoint stand-in for offline runs and tests."""

    def __init__(self, responses: Optional[dict[str, str]] = None, model_id: str = "mock-model"):
        self.responses = responses or {}
        self.model_id = model_id
        self.prompts: list[str] = []

    def complete(self, prompt: str) -> tuple[str, str]:
        self.prompts.append(prompt)
        for key, text in self.responses.items():
            if key in prompt:
                return text, self.model_id
        return (
            "The project satisfies the documented requirements for this credit; "
            "supporting evidence is attached in the project record.",
            self.model_id,
        )


class HttpLlmClient:
    """Chat-completion endpoint: POST {model, messages, temperature}."""

    def __init__(
        self,
        base_url: str,
        model: str = "gemma3",
        temperature: float = 0.2,
        timeout: float = 120.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self.timeout = timeout

    def complete(self, prompt: str) -> tuple[str, str]:
        import httpx

        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        try:
            resp = httpx.post(
                f"{self.base_url}/v1/chat/completions", json=body, timeout=self.timeout
            )
        except httpx.HTTPError as exc:
            raise LlmUnavailable(f"LLM endpoint unreachable: {exc}") from exc
        if resp.status_code >= 500:
            raise LlmUnavailable(f"LLM endpoint returned {resp.status_code}")
        if resp.status_code != 200:
            raise ProtocolError(f"LLM endpoint returned {resp.status_code}: {resp.text[:200]}")
        try:
            doc = resp.json()
            content = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed LLM response: {exc}") from exc
        return content, doc.get("model", self.model)


def generate_section(prompt: AssembledPrompt, client) -> DraftSection:
    """Send the prompt and capture the response verbatim."""
    text, model_id = client.complete(prompt.text)
    return DraftSection(
        credit_id=prompt.credit_id,
        text=text,
        provenance=prompt.snippet_ids + prompt.store_paths,
        model_id=model_id,
    )


# -- numeric claim verification --------------------------------------------

_NUMBER = re.compile(
    r"(?<![\w.])(?P<number>\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?)"
    r"\s*(?P<unit>%|kWh/m²·yr|kWh/m2\.yr|kWh/m²|kWh/m2|kWh|m²|m2|W/K|W/m2K|points?)?"
)

_UNIT_ALIASES = {
    "%": "%",
    "kwh/m²·yr": "kWh/m2.yr",
    "kwh/m2.yr": "kWh/m2.yr",
    "kwh/m²": "kWh/m2.yr",
    "kwh/m2": "kWh/m2.yr",
    "kwh": "kWh",
    "m²": "m2",
    "m2": "m2",
    "w/k": "W/K",
    "w/m2k": "W/m2K",
    "point": DIMENSIONLESS,
    "points": DIMENSIONLESS,
}


@dataclass(frozen=True)
class PathAlias:
    """Maps a store path to the unit and keywords its claims use."""

    path: str
    unit: str
    keywords: tuple[str, ...]


DEFAULT_ALIASES = (
    PathAlias("$.results.energymod.eui_proposed", "kWh/m2.yr", ("eui", "intensity")),
    PathAlias("$.results.energymod.eui_baseline", "kWh/m2.yr", ("baseline",)),
    PathAlias("$.results.energymod.total_kwh", "kWh", ("annual", "total", "energy")),
    PathAlias("$.results.energymod.reduction", "%", ("reduction", "savings", "improvement")),
    PathAlias("$.project.floor_area", "m2", ("area", "floor")),
    PathAlias("$.results.credits.total_points", DIMENSIONLESS, ("points", "score")),
)


def _store_number(store: UnifiedStore, path: str) -> Optional[tuple[float, str]]:
    got = store.query_path(path)
    if got is NOT_FOUND:
        return None
    if isinstance(got, tuple):
        return got
    if isinstance(got, (int, float)) and not isinstance(got, bool):
        return (float(got), DIMENSIONLESS)
    return None


def verify_numeric_claims(
    section: DraftSection,
    store: UnifiedStore,
    tolerance: float = DEFAULT_TOLERANCE,
    aliases: tuple[PathAlias, ...] = DEFAULT_ALIASES,
) -> list[VerificationFinding]:
    """Parse every number in the section and check it against the store.

    Matching is unit-compatibility first, then keyword proximity within
    an 8-token window. Unmatched numbers are reported, never silently
    passed. Percent claims compare as fractions.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    findings: list[VerificationFinding] = []
    tokens = section.text.split()
    for m in _NUMBER.finditer(section.text):
        raw = m.group("number")
        unit_raw = (m.group("unit") or "").lower()
        unit = _UNIT_ALIASES.get(unit_raw, DIMENSIONLESS)
        value = float(raw.replace(",", ""))
        claim_value = value / 100 if unit == "%" else value
        claim_unit = DIMENSIONLESS if unit == "%" else unit

        context = _context_tokens(section.text, tokens, m.start())
        candidates = [
            a
            for a in aliases
            if (a.unit == "%" and unit == "%")
            or (a.unit != "%" and a.unit == claim_unit)
        ]
        best = None
        for alias in candidates:
            if any(kw in context for kw in alias.keywords):
                best = alias
                break
        # A unit-specific claim with a single candidate needs no keyword;
        # bare dimensionless numbers must hit a keyword to match at all.
        if best is None and len(candidates) == 1 and claim_unit != DIMENSIONLESS:
            best = candidates[0]

        claim_text = m.group(0)
        if best is None:
            findings.append(
                VerificationFinding(claim_text, claim_value, claim_unit, None, None, None, "unmatched")
            )
            continue
        stored = _store_number(store, best.path)
        if stored is None:
            findings.append(
                VerificationFinding(claim_text, claim_value, claim_unit, best.path, None, None, "unmatched")
            )
            continue
        store_value = stored[0]
        rel_err = abs(claim_value - store_value) / max(abs(store_value), EPSILON)
        verdict = "pass" if rel_err <= tolerance else "mismatch"
        findings.append(
            VerificationFinding(
                claim_text, claim_value, claim_unit, best.path, store_value, rel_err, verdict
            )
        )
    return findings


def _context_tokens(text: str, tokens: list[str], char_pos: int) -> set[str]:
    # token index of the match position
    consumed = 0
    idx = 0
    for i, tok in enumerate(tokens):
        consumed = text.index(tok, consumed)
        if consumed >= char_pos:
            idx = i
            break
        consumed += len(tok)
        idx = i
    lo = max(0, idx - KEYWORD_WINDOW)
    hi = min(len(tokens), idx + KEYWORD_WINDOW + 1)
    return {t.strip(".,;:()%").lower() for t in tokens[lo:hi]}


# -- report assembly ---------------------------------------------------------


@dataclass
class ReportDocument:
    sections: list[DraftSection]
    status: str  # draft | verified
    findings_appendix: list[VerificationFinding]


def assemble_report(sections: list[DraftSection]) -> ReportDocument:
    """Order sections by category then credit id; any mismatch forces
    draft status and lands in the findings appendix."""
    rank = {cat: i for i, cat in enumerate(CATEGORIES)}

    def sort_key(section: DraftSection):
        category = section.credit_id[:2]
        return (rank.get(category, len(rank)), section.credit_id)

    ordered = sorted(sections, key=sort_key)
    mismatches = [
        f for s in ordered for f in s.verification if f.verdict == "mismatch"
    ]
    return ReportDocument(
        sections=ordered,
        status="verified" if not mismatches else "draft",
        findings_appendix=mismatches,
    )


def export_markdown(report: ReportDocument) -> str:
    """Deterministic portable-markup export, one heading per credit."""
    lines = [f"# Compliance Report ({report.status})", ""]
    for section in report.sections:
        lines.append(f"## {section.credit_id}")
        lines.append("")
        lines.append(section.text.rstrip())
        lines.append("")
        if section.verification:
            flagged = [f for f in section.verification if f.verdict != "pass"]
            if flagged:
                lines.append("> Verification flags:")
                for f in flagged:
                    lines.append(f"> - {f.verdict}: {f.claim_text!r}")
                lines.append("")
    if report.findings_appendix:
        lines.append("## Appendix: verification findings")
        lines.append("")
        for f in report.findings_appendix:
            lines.append(
                f"- {f.verdict}: claim {f.claim_text!r} vs {f.store_path} = {f.store_value}"
            )
        lines.append("")
    return "\n".join(lines)
