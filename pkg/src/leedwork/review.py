"""Default review pipeline: wires the analysis modules into the task
graph the orchestrator executes.

Tasks read store snapshots and return result deltas keyed by absolute
store paths. Complex payloads (scorecard detail, report sections) are
stored as JSON-encoded text leaves so every bare numeric leaf in the
store keeps its unit tag.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import credits as credits_mod
from . import energymod, geo, rag, reportgen
from .config import Config
from .datastore import NOT_FOUND, UnifiedStore, qty
from .docpipe import DetectParams, StubOcrAdapter, SubprocessOcrAdapter, load_page, process_document
from .orchestrator import TaskSpec


@dataclass
class PipelineContext:
    config: Config
    project_dir: Optional[Path] = None
    llm_client: Optional[object] = None
    ocr_adapter: Optional[object] = None
    gis_dataset: Optional[geo.GisDataset] = None
    rules: list = field(default_factory=list)
    kb_index: Optional[rag.VectorIndex] = None

    def __post_init__(self) -> None:
        if self.ocr_adapter is None:
            self.ocr_adapter = (
                SubprocessOcrAdapter(self.config.ocr_command)
                if self.config.ocr_command
                else StubOcrAdapter()
            )
        if self.llm_client is None:
            self.llm_client = (
                reportgen.HttpLlmClient(self.config.llm_base_url, self.config.llm_model)
                if self.config.llm_base_url
                else reportgen.MockLlmClient()
            )
        if self.gis_dataset is None:
            self.gis_dataset = geo.GisDataset.from_file(self.config.gis_path)
        if not self.rules:
            self.rules = load_rule_set(self.config.rules_path)
        if self.kb_index is None:
            self.kb_index = build_knowledge_base(self.config.kb_path)


def load_rule_set(rules_dir: Path) -> list:
    rules = []
    for path in sorted(Path(rules_dir).glob("*.json")):
        rules.extend(credits_mod.load_rules(path.read_text(encoding="utf-8")))
    return rules


def build_knowledge_base(kb_dir: Path, adapter=None) -> rag.VectorIndex:
    chunks = []
    for path in sorted(Path(kb_dir).glob("*.txt")):
        result = rag.chunk_reference_guide(path.read_text(encoding="utf-8"), source_doc=path.name)
        chunks.extend(result.chunks)
    return rag.build_index(chunks, adapter=adapter)


# -- task bodies -----------------------------------------------------------


def run_docpipe(store: UnifiedStore, ctx: PipelineContext) -> dict:
    docs = store.query_path("$.inputs.documents")
    delta: dict = {}
    total_regions = 0
    texts: list[dict] = []
    if docs is not NOT_FOUND and isinstance(docs, list):
        for doc in docs:
            path = doc.get("path", "")
            page_path = Path(path)
            if not page_path.is_absolute() and ctx.project_dir is not None:
                page_path = ctx.project_dir / page_path
            dpi = doc.get("dpi", 600)
            if isinstance(dpi, dict):
                dpi = dpi["value"]
            page = load_page(page_path, dpi=dpi)
            extraction = process_document([page], ctx.ocr_adapter, DetectParams())
            for page_texts in extraction.pages:
                for item in page_texts:
                    total_regions += 1
                    texts.append(
                        {
                            "document": doc.get("id", path),
                            "bbox": list(item.region.bbox),
                            "text": item.text,
                            "confidence": qty(item.confidence, "1"),
                            "language": item.language_hint,
                        }
                    )
    delta["$.results.docpipe.regions_extracted"] = qty(total_regions, "1")
    delta["$.results.docpipe.extractions_json"] = json.dumps(texts, sort_keys=True)
    return delta


def run_energymod(store: UnifiedStore, ctx: PipelineContext) -> dict:
    proposed_model = energymod.extract_building_model(store)
    weather_raw = store.query_path("$.inputs.weather")
    if weather_raw is NOT_FOUND:
        raise energymod.ModelError("missing required field $.inputs.weather")
    weather = energymod.Weather(
        hdd=weather_raw["hdd"]["value"],
        cdd=weather_raw["cdd"]["value"],
        location=weather_raw.get("location", ""),
    )
    engine = "external" if ctx.config.engine_path else "builtin"
    proposed = energymod.simulate(
        proposed_model, weather, engine=engine, engine_path=ctx.config.engine_path
    )

    # Baseline arrives as explicit input with the same schema.
    baseline_store = store.copy()
    baseline_raw = store.query_path("$.inputs.baseline_building")
    if baseline_raw is NOT_FOUND:
        raise energymod.ModelError("missing required field $.inputs.baseline_building")
    baseline_store.inputs["building"] = baseline_raw
    baseline_model = energymod.extract_building_model(baseline_store)
    baseline = energymod.simulate(
        baseline_model, weather, engine=engine, engine_path=ctx.config.engine_path
    )

    metrics = energymod.compute_energy_metrics(baseline, proposed)
    delta = {
        "$.results.energymod.eui_proposed": qty(proposed.eui, "kWh/m2.yr"),
        "$.results.energymod.eui_baseline": qty(baseline.eui, "kWh/m2.yr"),
        "$.results.energymod.total_kwh": qty(proposed.total_kwh, "kWh"),
        "$.results.energymod.heating_kwh": qty(proposed.heating_kwh, "kWh"),
        "$.results.energymod.cooling_kwh": qty(proposed.cooling_kwh, "kWh"),
        "$.results.energymod.engine": proposed.engine,
    }
    if metrics.reduction is not None:
        delta["$.results.energymod.reduction"] = qty(metrics.reduction, "1")
    return delta


def run_geo(store: UnifiedStore, ctx: PipelineContext) -> dict:
    location = store.query_path("$.project.location")
    if location is NOT_FOUND:
        raise energymod.ModelError("missing required field $.project.location")
    site = geo.GeoPoint(location["lat"], location["lon"])
    report = geo.assess_location(site, dataset=ctx.gis_dataset)
    delta = {
        "$.results.geo.transit_stops": qty(report.transit.stops_within, "1"),
        "$.results.geo.transit_trips": qty(report.transit.total_trips, "1"),
        "$.results.geo.transit_qualifies": report.transit.qualifies,
        "$.results.geo.walk_categories": qty(report.walkability.categories_within, "1"),
        "$.results.geo.walkability_qualifies": report.walkability.qualifies,
        "$.results.geo.sensitive_land": report.sensitive_land,
        "$.results.geo.data_source": report.data_source,
    }
    if report.sensitive_land != "unknown":
        delta["$.results.geo.sensitive_land_ok"] = report.sensitive_land == "no"
    return delta


def run_credits(store: UnifiedStore, ctx: PipelineContext) -> dict:
    scorecard = credits_mod.evaluate_all(ctx.rules, store)
    gaps = credits_mod.identify_gaps(scorecard, ctx.rules, store)
    by_id = {r.credit_id: r for r in ctx.rules}
    detail = {
        cid: {
            "category": by_id[cid].category,
            "kind": by_id[cid].kind,
            "name": by_id[cid].name,
            "status": result.status.value,
            "awarded_points": result.awarded_points,
            "max_points": by_id[cid].max_points,
            "missing_inputs": sorted(result.missing_inputs),
        }
        for cid, result in scorecard.results.items()
    }
    delta = {
        "$.results.credits.total_points": qty(scorecard.total_points, "1"),
        "$.results.credits.targeted": qty(scorecard.targeted, "1"),
        "$.results.credits.automated": qty(scorecard.automated, "1"),
        "$.results.credits.coverage_percent": qty(scorecard.coverage_percent, "%"),
        "$.results.credits.scorecard_json": json.dumps(detail, sort_keys=True),
        "$.results.credits.gaps_json": json.dumps(
            [{"credit_id": g.credit_id, "type": g.gap_type, "detail": g.detail} for g in gaps],
            sort_keys=True,
        ),
    }
    return delta


def run_reportgen(store: UnifiedStore, ctx: PipelineContext) -> dict:
    scorecard_json = store.query_path("$.results.credits.scorecard_json")
    detail = json.loads(scorecard_json) if scorecard_json is not NOT_FOUND else {}
    template = reportgen.PromptTemplate()
    store_slice = {
        "project": store.project,
        "results": store.results,
    }
    sections = []
    for credit_id in sorted(detail):
        if detail[credit_id]["kind"] != "credit":
            continue
        hits = rag.search_topk(
            ctx.kb_index,
            f"{credit_id} {detail[credit_id]['name']}",
            k=3,
            metadata_filter=lambda md, cat=detail[credit_id]["category"]: md["category"] == cat,
        )
        prompt = reportgen.assemble_prompt(
            template, credit_id, hits, ctx.kb_index.texts, store_slice
        )
        section = reportgen.generate_section(prompt, ctx.llm_client)
        section.verification = reportgen.verify_numeric_claims(section, store)
        sections.append(section)
    report = reportgen.assemble_report(sections)
    markdown = reportgen.export_markdown(report)
    payload = [
        {
            "credit_id": s.credit_id,
            "text": s.text,
            "model_id": s.model_id,
            "provenance": s.provenance,
            "verification": [
                {
                    "claim_text": f.claim_text,
                    "verdict": f.verdict,
                    "store_path": f.store_path,
                    "relative_error": f.relative_error,
                }
                for f in s.verification
            ],
        }
        for s in report.sections
    ]
    return {
        "$.results.reportgen.status": report.status,
        "$.results.reportgen.sections_json": json.dumps(payload, sort_keys=True),
        "$.results.reportgen.markdown": markdown,
        "$.results.reportgen.mismatch_count": qty(len(report.findings_appendix), "1"),
    }


DEFAULT_READS = {
    "docpipe": {"$.inputs.documents"},
    "energymod": {"$.inputs.building", "$.inputs.baseline_building", "$.inputs.weather"},
    "geo": {"$.project.location", "$.inputs.site"},
    "credits": {"$.inputs", "$.results.energymod", "$.results.geo"},
    "reportgen": {"$.results"},
}


def default_task_specs(ctx: PipelineContext) -> list[TaskSpec]:
    """The standard review pipeline.

    docpipe feeds credits and energymod; geo is independent; credits
    additionally waits on energymod and geo so energy and location
    credits evaluate against their results; reportgen consumes all
    three.
    """
    return [
        TaskSpec(
            id="docpipe",
            module="docpipe",
            reads=frozenset(DEFAULT_READS["docpipe"]),
            produces=frozenset({"$.results.docpipe"}),
            run=lambda store: run_docpipe(store, ctx),
        ),
        TaskSpec(
            id="energymod",
            module="energymod",
            depends_on=frozenset({"docpipe"}),
            reads=frozenset(DEFAULT_READS["energymod"]),
            produces=frozenset({"$.results.energymod"}),
            run=lambda store: run_energymod(store, ctx),
        ),
        TaskSpec(
            id="geo",
            module="geo",
            reads=frozenset(DEFAULT_READS["geo"]),
            produces=frozenset({"$.results.geo"}),
            run=lambda store: run_geo(store, ctx),
        ),
        TaskSpec(
            id="credits",
            module="credits",
            depends_on=frozenset({"docpipe", "energymod", "geo"}),
            reads=frozenset(DEFAULT_READS["credits"]),
            produces=frozenset({"$.results.credits"}),
            run=lambda store: run_credits(store, ctx),
        ),
        TaskSpec(
            id="reportgen",
            module="reportgen",
            depends_on=frozenset({"credits", "energymod", "geo"}),
            reads=frozenset(DEFAULT_READS["reportgen"]),
            produces=frozenset({"$.results.reportgen"}),
            run=lambda store: run_reportgen(store, ctx),
        ),
    ]
