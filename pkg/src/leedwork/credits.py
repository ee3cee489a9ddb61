"""Declarative credit rule engine.

Rules live in JSON files as explicit expression trees (no string
mini-language). Evaluation uses strong Kleene three-valued logic so a
missing store value surfaces as an indeterminate credit instead of a
hard failure, mirroring credits that need manual intervention.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .datastore import NOT_FOUND, DIMENSIONLESS, UnifiedStore

CATEGORIES = ("LT", "SS", "WE", "EA", "MR", "EQ", "IN")

COMPARATORS = {"<", "<=", "==", ">=", ">"}
ARITHMETIC = {"+", "-", "*", "/"}
BOOLEAN = {"all", "any", "not"}


class RuleSyntaxError(Exception):
    """Rule file failed to parse; message carries location context."""


class RuleConfigurationError(Exception):
    """Referential problem across rules (dangling or cyclic prerequisites)."""


class EvaluationError(Exception):
    """Rule is misconfigured for this store (unit mismatch); permanent."""


class Status(str, Enum):
    ACHIEVED = "achieved"
    NOT_ACHIEVED = "not_achieved"
    INDETERMINATE = "indeterminate"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class PointRow:
    threshold: float
    unit: str
    points: int


@dataclass(frozen=True)
class CreditRule:
    credit_id: str
    category: str
    kind: str  # prerequisite | credit
    name: str
    max_points: int
    requirements: dict
    metric: Optional[dict] = None
    point_table: tuple[PointRow, ...] = ()
    prerequisites: frozenset[str] = frozenset()
    required_inputs: frozenset[str] = frozenset()


@dataclass
class ComplianceResult:
    credit_id: str
    status: Status
    awarded_points: int = 0
    evidence: list[dict] = field(default_factory=list)
    missing_inputs: set[str] = field(default_factory=set)
    used_paths: set[str] = field(default_factory=set)


@dataclass
class Scorecard:
    results: dict[str, ComplianceResult]
    total_points: int
    targeted: int
    automated: int

    @property
    def coverage(self) -> float:
        return self.automated / self.targeted if self.targeted else 0.0

    @property
    def coverage_percent(self) -> int:
        """Display rounding: half-up to a whole percent."""
        return int(self.coverage * 100 + 0.5)


# -- rule loading ------------------------------------------------------


def _parse_expr(node: Any, where: str) -> dict:
    if not isinstance(node, dict) or "op" not in node:
        raise RuleSyntaxError(f"{where}: expression node must be an object with 'op'")
    op = node["op"]
    if op == "lit":
        if "value" not in node:
            raise RuleSyntaxError(f"{where}: lit node needs 'value'")
        return {"op": "lit", "value": node["value"], "unit": node.get("unit", DIMENSIONLESS)}
    if op == "path":
        if not isinstance(node.get("path"), str) or not node["path"].startswith("$"):
            raise RuleSyntaxError(f"{where}: path node needs a '$...' path")
        return {"op": "path", "path": node["path"]}
    if op == "cmp":
        cmp = node.get("cmp")
        if cmp not in COMPARATORS:
            raise RuleSyntaxError(f"{where}: unknown operator {cmp!r}")
        return {
            "op": "cmp",
            "cmp": cmp,
            "left": _parse_expr(node["left"], where),
            "right": _parse_expr(node["right"], where),
        }
    if op in ARITHMETIC:
        return {
            "op": op,
            "left": _parse_expr(node["left"], where),
            "right": _parse_expr(node["right"], where),
        }
    if op in ("all", "any"):
        args = node.get("args")
        if not isinstance(args, list):
            raise RuleSyntaxError(f"{where}: {op} needs an 'args' list")
        return {"op": op, "args": [_parse_expr(a, where) for a in args]}
    if op == "not":
        return {"op": "not", "arg": _parse_expr(node["arg"], where)}
    raise RuleSyntaxError(f"{where}: unknown operator {op!r}")


def load_rules(rule_text: str) -> list[CreditRule]:
    """Parse a JSON rule file and check referential integrity."""
    try:
        doc = json.loads(rule_text)
    except json.JSONDecodeError as exc:
        raise RuleSyntaxError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    raw_rules = doc.get("rules", []) if isinstance(doc, dict) else doc
    rules: list[CreditRule] = []
    for raw in raw_rules:
        cid = raw.get("credit_id", "<unnamed>")
        where = f"rule {cid}"
        category = raw.get("category")
        if category not in CATEGORIES:
            raise RuleSyntaxError(f"{where}: unknown category {category!r}")
        kind = raw.get("kind")
        if kind not in ("prerequisite", "credit"):
            raise RuleSyntaxError(f"{where}: kind must be prerequisite or credit")
        table: list[PointRow] = []
        prev = None
        for row in raw.get("point_table", []):
            threshold = float(row["threshold"])
            if prev is not None and threshold <= prev:
                raise RuleSyntaxError(f"{where}: point_table thresholds must strictly increase")
            prev = threshold
            points = int(row["points"])
            table.append(PointRow(threshold, row.get("unit", DIMENSIONLESS), points))
        max_points = int(raw.get("max_points", 0))
        if any(row.points > max_points for row in table):
            raise RuleSyntaxError(f"{where}: point_table exceeds max_points")
        rules.append(
            CreditRule(
                credit_id=cid,
                category=category,
                kind=kind,
                name=raw.get("name", cid),
                max_points=max_points,
                requirements=_parse_expr(raw["requirements"], where),
                metric=_parse_expr(raw["metric"], where) if raw.get("metric") else None,
                point_table=tuple(table),
                prerequisites=frozenset(raw.get("prerequisites", [])),
                required_inputs=frozenset(raw.get("required_inputs", [])),
            )
        )
    by_id = {r.credit_id: r for r in rules}
    if len(by_id) != len(rules):
        raise RuleSyntaxError("duplicate credit_id in rule set")
    for rule in rules:
        for pre in rule.prerequisites:
            if pre not in by_id:
                raise RuleConfigurationError(
                    f"rule {rule.credit_id}: dangling prerequisite {pre!r}"
                )
            if by_id[pre].kind != "prerequisite":
                raise RuleConfigurationError(
                    f"rule {rule.credit_id}: prerequisite {pre!r} is not kind=prerequisite"
                )
    return rules


# -- expression evaluation ---------------------------------------------

UNKNOWN = None  # tri-state: True | False | None


def _eval_numeric(expr: dict, store: UnifiedStore, used: set, missing: set):
    """Evaluate a numeric subtree to (value, unit) or None when unknown."""
    op = expr["op"]
    if op == "lit":
        return (expr["value"], expr.get("unit", DIMENSIONLESS))
    if op == "path":
        used.add(expr["path"])
        got = store.query_path(expr["path"])
        if got is NOT_FOUND:
            missing.add(expr["path"])
            return None
        if isinstance(got, tuple):
            return got
        if isinstance(got, bool):
            return (1.0 if got else 0.0, DIMENSIONLESS)
        if isinstance(got, (int, float)):
            return (float(got), DIMENSIONLESS)
        missing.add(expr["path"])
        return None
    if op in ARITHMETIC:
        left = _eval_numeric(expr["left"], store, used, missing)
        right = _eval_numeric(expr["right"], store, used, missing)
        if left is None or right is None:
            return None
        (lv, lu), (rv, ru) = left, right
        if op in ("+", "-"):
            if lu != ru:
                raise EvaluationError(f"unit mismatch: {lu!r} {op} {ru!r}")
            return (lv + rv if op == "+" else lv - rv, lu)
        if op == "*":
            unit = ru if lu == DIMENSIONLESS else (lu if ru == DIMENSIONLESS else f"{lu}.{ru}")
            return (lv * rv, unit)
        # division: zero denominators are data problems, not rule bugs
        if rv == 0:
            return None
        unit = DIMENSIONLESS if lu == ru else (lu if ru == DIMENSIONLESS else f"{lu}/{ru}")
        return (lv / rv, unit)
    raise EvaluationError(f"expected numeric expression, got op {op!r}")


def _compare(cmp: str, lv: float, rv: float) -> bool:
    if cmp == "<":
        return lv < rv
    if cmp == "<=":
        return lv <= rv
    if cmp == "==":
        return lv == rv
    if cmp == ">=":
        return lv >= rv
    return lv > rv


def evaluate_expr(expr: dict, store: UnifiedStore) -> tuple[Optional[bool], set[str], set[str]]:
    """Strong-Kleene evaluation: (tri-state, used paths, missing paths)."""
    used: set[str] = set()
    missing: set[str] = set()
    value = _eval_bool(expr, store, used, missing)
    return value, used, missing


def _eval_bool(expr: dict, store: UnifiedStore, used: set, missing: set) -> Optional[bool]:
    op = expr["op"]
    if op == "lit":
        return bool(expr["value"])
    if op == "cmp":
        left = _eval_numeric(expr["left"], store, used, missing)
        right = _eval_numeric(expr["right"], store, used, missing)
        if left is None or right is None:
            return UNKNOWN
        (lv, lu), (rv, ru) = left, right
        if lu != ru:
            raise EvaluationError(f"unit mismatch in comparison: {lu!r} vs {ru!r}")
        return _compare(expr["cmp"], lv, rv)
    if op == "all":
        values = [_eval_bool(a, store, used, missing) for a in expr["args"]]
        if any(v is False for v in values):
            return False
        if any(v is UNKNOWN for v in values):
            return UNKNOWN
        return True
    if op == "any":
        values = [_eval_bool(a, store, used, missing) for a in expr["args"]]
        if any(v is True for v in values):
            return True
        if any(v is UNKNOWN for v in values):
            return UNKNOWN
        return False
    if op == "not":
        value = _eval_bool(expr["arg"], store, used, missing)
        return UNKNOWN if value is UNKNOWN else not value
    if op == "path":
        used.add(expr["path"])
        got = store.query_path(expr["path"])
        if got is NOT_FOUND:
            missing.add(expr["path"])
            return UNKNOWN
        if isinstance(got, bool):
            return got
        if isinstance(got, tuple):
            return got[0] != 0
        return UNKNOWN
    raise EvaluationError(f"expected boolean expression, got op {op!r}")


# -- credit evaluation ---------------------------------------------------


def lookup_points(table: tuple[PointRow, ...], metric: float) -> int:
    """Largest row whose threshold <= metric, else 0."""
    points = 0
    for row in table:
        if metric >= row.threshold:
            points = row.points
    return points


def evaluate_credit(
    rule: CreditRule,
    store: UnifiedStore,
    prereq_results: dict[str, ComplianceResult],
) -> ComplianceResult:
    """Evaluate one credit against the store and its prerequisites."""
    for pre in sorted(rule.prerequisites):
        if pre not in prereq_results:
            raise RuleConfigurationError(
                f"rule {rule.credit_id}: prerequisite {pre!r} not yet evaluated"
            )
        if prereq_results[pre].status != Status.ACHIEVED:
            return ComplianceResult(rule.credit_id, Status.BLOCKED)

    verdict, used, missing = evaluate_expr(rule.requirements, store)
    result = ComplianceResult(rule.credit_id, Status.INDETERMINATE, used_paths=used)
    if verdict is UNKNOWN:
        result.missing_inputs = missing
        return result
    if verdict is False:
        result.status = Status.NOT_ACHIEVED
        return result

    if rule.point_table and rule.metric is not None:
        metric_used: set[str] = set()
        metric_missing: set[str] = set()
        value = _eval_numeric(rule.metric, store, metric_used, metric_missing)
        result.used_paths |= metric_used
        if value is None:
            result.status = Status.INDETERMINATE
            result.missing_inputs = metric_missing
            return result
        points = lookup_points(rule.point_table, value[0])
    else:
        points = rule.max_points

    if rule.kind == "prerequisite":
        result.status = Status.ACHIEVED
        result.awarded_points = 0
    elif points > 0:
        result.status = Status.ACHIEVED
        result.awarded_points = points
    else:
        result.status = Status.NOT_ACHIEVED
    if result.status == Status.ACHIEVED:
        result.evidence = [
            {"source": "user_input", "locator": path, "confidence": 1.0}
            for path in sorted(result.used_paths)
        ]
    return result


def _prereq_order(rules: list[CreditRule]) -> list[CreditRule]:
    by_id = {r.credit_id: r for r in rules}
    order: list[CreditRule] = []
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(rule: CreditRule) -> None:
        mark = state.get(rule.credit_id)
        if mark == 1:
            return
        if mark == 0:
            raise RuleConfigurationError(f"prerequisite cycle involving {rule.credit_id!r}")
        state[rule.credit_id] = 0
        for pre in sorted(rule.prerequisites):
            visit(by_id[pre])
        state[rule.credit_id] = 1
        order.append(rule)

    for rule in sorted(rules, key=lambda r: r.credit_id):
        visit(rule)
    return order


def evaluate_all(rules: list[CreditRule], store: UnifiedStore) -> Scorecard:
    """Evaluate the whole rule set, prerequisites first."""
    results: dict[str, ComplianceResult] = {}
    for rule in _prereq_order(rules):
        prereqs = {pre: results[pre] for pre in rule.prerequisites}
        results[rule.credit_id] = evaluate_credit(rule, store, prereqs)
    credit_results = [
        results[r.credit_id] for r in rules if r.kind == "credit"
    ]
    return Scorecard(
        results=results,
        total_points=sum(r.awarded_points for r in results.values()),
        targeted=len(credit_results),
        automated=sum(1 for r in credit_results if r.status != Status.INDETERMINATE),
    )


@dataclass(frozen=True)
class GapRecord:
    credit_id: str
    gap_type: str  # shortfall | missing_data | blocked
    detail: str


def identify_gaps(
    scorecard: Scorecard, rules: list[CreditRule], store: UnifiedStore
) -> list[GapRecord]:
    """One record per non-achieved credit, with actionable detail."""
    by_id = {r.credit_id: r for r in rules}
    gaps: list[GapRecord] = []
    for cid in sorted(scorecard.results):
        result = scorecard.results[cid]
        if result.status == Status.ACHIEVED:
            continue
        rule = by_id[cid]
        if result.status == Status.BLOCKED:
            unmet = sorted(
                pre
                for pre in rule.prerequisites
                if scorecard.results[pre].status != Status.ACHIEVED
            )
            gaps.append(GapRecord(cid, "blocked", f"prerequisites not achieved: {', '.join(unmet)}"))
        elif result.status == Status.INDETERMINATE:
            paths = ", ".join(sorted(result.missing_inputs))
            gaps.append(GapRecord(cid, "missing_data", f"missing store paths: {paths}"))
        else:
            detail = "requirements not met"
            if rule.point_table and rule.metric is not None:
                used: set[str] = set()
                missing: set[str] = set()
                value = _eval_numeric(rule.metric, store, used, missing)
                if value is not None:
                    nxt = next(
                        (row for row in rule.point_table if row.threshold > value[0]), None
                    )
                    if nxt is not None:
                        distance = nxt.threshold - value[0]
                        detail = (
                            f"metric {value[0]:g} short of next threshold "
                            f"{nxt.threshold:g} by {distance:g}"
                        )
            gaps.append(GapRecord(cid, "shortfall", detail))
    return gaps
