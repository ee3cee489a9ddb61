import json
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from leedwork.datastore import UnifiedStore, qty
from leedwork.rag import RetrievalHit
from leedwork.reportgen import (
    AssembledPrompt,
    DraftSection,
    HttpLlmClient,
    LlmUnavailable,
    MockLlmClient,
    PromptTemplate,
    ProtocolError,
    assemble_prompt,
    assemble_report,
    export_markdown,
    generate_section,
    verify_numeric_claims,
)


def result_store() -> UnifiedStore:
    return UnifiedStore(
        project={"floor_area": qty(6967.7, "m2")},
        results={
            "energymod": {
                "total_kwh": qty(836124.0, "kWh"),
                "eui_proposed": qty(120.0, "kWh/m2.yr"),
                "eui_baseline": qty(160.4, "kWh/m2.yr"),
                "reduction": qty(0.252, "1"),
            },
            "credits": {"total_points": qty(27, "1")},
        },
    )


def section_with(text: str) -> DraftSection:
    return DraftSection(credit_id="EAc2", text=text, provenance=[])


# -- prompt templates ------------------------------------------------------------


def test_template_requires_each_placeholder_once():
    PromptTemplate()  # default is valid
    with pytest.raises(ValueError):
        PromptTemplate(text="no placeholders at all")
    with pytest.raises(ValueError):
        PromptTemplate(
            text="{credit_id} {credit_id} {credit_language} {evidence_snippets} "
            "{project_results} {instructions}"
        )


def test_assemble_prompt_orders_snippets_by_rank():
    hits = [
        RetrievalHit("b", 0.8, rank=2),
        RetrievalHit("a", 0.9, rank=1),
    ]
    texts = {"a": "first snippet", "b": "second snippet"}
    prompt = assemble_prompt(PromptTemplate(), "EAc2", hits, texts, {"x": qty(1.0)})
    assert prompt.snippet_ids == ["a", "b"]
    assert prompt.text.index("first snippet") < prompt.text.index("second snippet")
    assert not prompt.low_evidence
    assert prompt.store_paths == ["$.x"]


def test_assemble_prompt_drops_lowest_rank_first():
    template = PromptTemplate(token_budget=60)
    hits = [RetrievalHit(f"c{i}", 1.0 - i / 10, rank=i + 1) for i in range(4)]
    texts = {f"c{i}": " ".join(["word"] * 30) for i in range(4)}
    prompt = assemble_prompt(template, "EAc2", hits, texts, {})
    assert prompt.snippet_ids == ["c0"] or prompt.snippet_ids == []
    # the kept list is always a rank-order prefix
    kept_ranks = [int(cid[1:]) for cid in prompt.snippet_ids]
    assert kept_ranks == sorted(kept_ranks)


def test_assemble_prompt_low_evidence_flag():
    template = PromptTemplate(token_budget=1)
    hits = [RetrievalHit("a", 0.9, rank=1)]
    prompt = assemble_prompt(template, "EAc2", hits, {"a": "x " * 50}, {})
    assert prompt.low_evidence
    assert prompt.snippet_ids == []
    assert "(no evidence retrieved)" in prompt.text


# -- clients -----------------------------------------------------------------------


def test_mock_client_keyed_and_default_responses():
    client = MockLlmClient(responses={"EAc2": "canned EAc2 narrative"})
    text, model = client.complete("prompt mentioning EAc2 here")
    assert text == "canned EAc2 narrative"
    assert model == "mock-model"
    default, _ = client.complete("something else")
    assert not any(ch.isdigit() for ch in default)  # safe default: no numbers


class _Handler(BaseHTTPRequestHandler):
    behavior = "ok"

    def do_POST(self):
        self.rfile.read(int(self.headers.get("Content-Length", 0)))
        if self.behavior == "error":
            self.send_response(500)
            self.end_headers()
            return
        if self.behavior == "malformed":
            body = b'{"nope": true}'
        else:
            body = json.dumps(
                {
                    "model": "test-model",
                    "choices": [{"message": {"role": "assistant", "content": "drafted text"}}],
                }
            ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def llm_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def test_http_client_happy_path(llm_server):
    _Handler.behavior = "ok"
    client = HttpLlmClient(llm_server)
    text, model = client.complete("hello")
    assert (text, model) == ("drafted text", "test-model")


def test_http_client_5xx_is_transient(llm_server):
    _Handler.behavior = "error"
    with pytest.raises(LlmUnavailable):
        HttpLlmClient(llm_server).complete("hello")


def test_http_client_malformed_is_protocol_error(llm_server):
    _Handler.behavior = "malformed"
    with pytest.raises(ProtocolError):
        HttpLlmClient(llm_server).complete("hello")


def test_http_client_unreachable_is_transient():
    client = HttpLlmClient("http://127.0.0.1:1", timeout=0.05)
    with pytest.raises(LlmUnavailable):
        client.complete("hello")


def test_generate_section_provenance():
    prompt = AssembledPrompt(
        text="p", credit_id="EAc2", snippet_ids=["a"], store_paths=["$.results.x"]
    )
    section = generate_section(prompt, MockLlmClient())
    assert section.provenance == ["a", "$.results.x"]
    assert section.model_id == "mock-model"


# -- numeric verification -------------------------------------------------------------


def test_claim_with_thousand_separators_passes():
    findings = verify_numeric_claims(
        section_with("Annual energy use totals 836,124 kWh for the project."),
        result_store(),
    )
    [f] = findings
    assert f.verdict == "pass"
    assert f.store_path == "$.results.energymod.total_kwh"
    assert f.parsed_value == 836124.0


def test_percent_claim_mismatch():
    store = result_store()
    store.results["energymod"]["reduction"] = qty(0.167, "1")
    findings = verify_numeric_claims(
        section_with("The design achieves a 35% reduction in energy cost."), store
    )
    [f] = findings
    assert f.verdict == "mismatch"
    assert f.parsed_value == pytest.approx(0.35)
    assert f.store_value == pytest.approx(0.167)


def test_eui_and_points_claims():
    text = "The proposed EUI is 120 kWh/m2.yr and the project scores 27 points."
    findings = verify_numeric_claims(section_with(text), result_store())
    verdicts = {f.store_path: f.verdict for f in findings}
    assert verdicts["$.results.energymod.eui_proposed"] == "pass"
    assert verdicts["$.results.credits.total_points"] == "pass"


def test_bare_number_without_keyword_is_unmatched():
    findings = verify_numeric_claims(
        section_with("The committee met 4 times to discuss."), result_store()
    )
    [f] = findings
    assert f.verdict == "unmatched"
    assert f.store_path is None


def test_tolerance_boundary():
    store = result_store()  # total 836124 kWh
    within = 836124.0 * 1.004
    beyond = 836124.0 * 1.006
    f1 = verify_numeric_claims(
        section_with(f"Annual total energy: {within:,.0f} kWh."), store
    )[0]
    f2 = verify_numeric_claims(
        section_with(f"Annual total energy: {beyond:,.0f} kWh."), store
    )[0]
    assert f1.verdict == "pass"
    assert f2.verdict == "mismatch"


def test_tolerance_validation():
    with pytest.raises(ValueError):
        verify_numeric_claims(section_with("1 kWh"), result_store(), tolerance=0.0)


def _faithful_text(store: UnifiedStore) -> str:
    total = store.query_path("$.results.energymod.total_kwh")[0]
    eui = store.query_path("$.results.energymod.eui_proposed")[0]
    red = store.query_path("$.results.energymod.reduction")[0]
    area = store.query_path("$.project.floor_area")[0]
    points = store.query_path("$.results.credits.total_points")[0]
    return (
        f"Across its {area:,.1f} m2 floor area the project uses a total of "
        f"{total:,.0f} kWh annually, an EUI of {eui:.1f} kWh/m2.yr. That is a "
        f"{red * 100:.1f}% reduction over baseline, worth {points} points in total."
    )


def test_faithful_section_has_zero_mismatches():
    store = result_store()
    findings = verify_numeric_claims(section_with(_faithful_text(store)), store)
    assert len(findings) == 5
    assert all(f.verdict == "pass" for f in findings)


def test_seeded_perturbations_all_flagged():
    store = result_store()
    rng = random.Random(101)
    paths = [
        "$.results.energymod.total_kwh",
        "$.results.energymod.eui_proposed",
        "$.results.energymod.reduction",
        "$.project.floor_area",
    ]
    flagged = 0
    for i in range(20):
        perturbed = store.copy()
        path = paths[i % len(paths)]
        # walk to the quantity dict and scale it by > 0.5%
        target = perturbed.results if path.startswith("$.results") else perturbed.project
        keys = path.split(".")[2:]
        for key in keys[:-1]:
            target = target[key]
        factor = 1 + rng.choice([-1, 1]) * rng.uniform(0.006, 0.20)
        target[keys[-1]]["value"] *= factor
        findings = verify_numeric_claims(
            section_with(_faithful_text(store)), perturbed
        )
        if any(f.verdict == "mismatch" for f in findings):
            flagged += 1
    assert flagged == 20


# -- report assembly ----------------------------------------------------------------


def _mk_section(cid, verdict=None):
    s = DraftSection(credit_id=cid, text=f"narrative for {cid}", provenance=[])
    if verdict:
        from leedwork.reportgen import VerificationFinding

        s.verification = [VerificationFinding("x", 1.0, "1", None, None, None, verdict)]
    return s


def test_report_ordering_and_status():
    sections = [_mk_section(c) for c in ("EAc2", "LTc1", "INc1", "EAc1", "WEc1")]
    report = assemble_report(sections)
    assert [s.credit_id for s in report.sections] == [
        "LTc1", "WEc1", "EAc1", "EAc2", "INc1",
    ]
    assert report.status == "verified"
    assert report.findings_appendix == []


def test_any_mismatch_forces_draft():
    report = assemble_report([_mk_section("EAc2", "mismatch"), _mk_section("LTc1")])
    assert report.status == "draft"
    assert len(report.findings_appendix) == 1
    # unmatched findings do not force draft, but they are not hidden either
    report2 = assemble_report([_mk_section("EAc2", "unmatched")])
    assert report2.status == "verified"
    assert "unmatched" in export_markdown(report2)


def test_export_markdown_deterministic():
    sections = [_mk_section("EAc2", "mismatch"), _mk_section("LTc1")]
    a = export_markdown(assemble_report(sections))
    b = export_markdown(assemble_report(list(reversed(sections))))
    assert a == b
    assert a.startswith("# Compliance Report (draft)")
    assert "## LTc1" in a and "## EAc2" in a
    assert "Appendix" in a
