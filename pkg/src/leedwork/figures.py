"""Scorecard exports: delimited CSV plus rendered figures.

The report path writes these next to the markdown report so reviewers
get both machine-readable and visual summaries.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .credits import CATEGORIES

STATUS_COLORS = {
    "achieved": "#2e7d32",
    "not_achieved": "#c62828",
    "indeterminate": "#f9a825",
    "blocked": "#616161",
}


def write_scorecard_csv(scorecard: dict, path: str | Path) -> None:
    """One row per credit; stable credit-id order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["credit_id", "category", "kind", "name", "status", "awarded_points", "max_points"]
        )
        for cid in sorted(scorecard["credits"]):
            row = scorecard["credits"][cid]
            writer.writerow(
                [
                    cid,
                    row["category"],
                    row["kind"],
                    row["name"],
                    row["status"],
                    row["awarded_points"],
                    row["max_points"],
                ]
            )
        writer.writerow([])
        writer.writerow(["total_points", scorecard["total_points"]])
        writer.writerow(["coverage_percent", scorecard["coverage_percent"]])


def render_scorecard_figure(scorecard: dict, path: str | Path) -> None:
    """Stacked bar of awarded vs remaining points per category."""
    awarded = {cat: 0 for cat in CATEGORIES}
    maximum = {cat: 0 for cat in CATEGORIES}
    for row in scorecard["credits"].values():
        if row["kind"] != "credit":
            continue
        awarded[row["category"]] += row["awarded_points"]
        maximum[row["category"]] += row["max_points"]

    cats = [c for c in CATEGORIES if maximum[c] > 0]
    got = [awarded[c] for c in cats]
    remaining = [maximum[c] - awarded[c] for c in cats]

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(cats, got, color="#2e7d32", label="awarded")
    ax.bar(cats, remaining, bottom=got, color="#cfd8dc", label="remaining")
    ax.set_ylabel("points")
    ax.set_title(
        f"Scorecard: {scorecard['total_points']} points, "
        f"{scorecard['coverage_percent']}% automated coverage"
    )
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_status_figure(scorecard: dict, path: str | Path) -> None:
    """Horizontal per-credit status strip."""
    rows = sorted(
        (cid, row) for cid, row in scorecard["credits"].items() if row["kind"] == "credit"
    )
    fig, ax = plt.subplots(figsize=(7, 0.4 * max(len(rows), 1) + 1))
    labels = []
    for i, (cid, row) in enumerate(rows):
        ax.barh(i, row["max_points"] or 1, color="#eceff1")
        ax.barh(i, row["awarded_points"], color=STATUS_COLORS.get(row["status"], "#90a4ae"))
        labels.append(f"{cid} ({row['status']})")
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(labels, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("points")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def export_scorecard_artifacts(scorecard: dict, out_dir: str | Path) -> list[Path]:
    """CSV plus both figures; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        out_dir / "scorecard.csv",
        out_dir / "scorecard_by_category.png",
        out_dir / "credit_status.png",
    ]
    write_scorecard_csv(scorecard, paths[0])
    render_scorecard_figure(scorecard, paths[1])
    render_status_figure(scorecard, paths[2])
    return paths
