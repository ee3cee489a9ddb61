"""Command-line interface.

Exit codes: 0 success, 1 degraded run, 2 failure, 3 usage error.
Every command accepts --json for machine-readable output.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import Config
from .figures import export_scorecard_artifacts
from .fixtures import create_synthetic_project
from .project import NotFoundError, ProjectError, ProjectManager

EXIT_OK = 0
EXIT_DEGRADED = 1
EXIT_FAILURE = 2
EXIT_USAGE = 3


class Cli(click.Group):
    def main(self, *args, **kwargs):
        kwargs.setdefault("standalone_mode", False)
        try:
            return super().main(*args, **kwargs)
        except click.UsageError as exc:
            click.echo(f"usage error: {exc.format_message()}", err=True)
            click.echo(exc.ctx.get_help() if exc.ctx else "", err=True)
            sys.exit(EXIT_USAGE)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_FAILURE)
        except click.exceptions.Abort:
            sys.exit(EXIT_FAILURE)


@click.group(cls=Cli)
@click.option("--config", "config_path", default=None, help="Config file path (or $LEEDW_CONFIG).")
@click.option("--root", default=None, help="Projects root directory (overrides config).")
@click.pass_context
def cli(ctx, config_path, root):
    """Green-building certification review workbench."""
    config = Config.load(config_path)
    ctx.obj = ProjectManager(root or config.projects_root, config)


def _emit(payload: dict, as_json: bool, lines: list[str]) -> None:
    if as_json:
        click.echo(json.dumps(payload, sort_keys=True, indent=2, default=str))
    else:
        for line in lines:
            click.echo(line)


@cli.command()
@click.option("--name", default="Pilot Office", help="Project name.")
@click.option("--descriptor", type=click.Path(exists=True), default=None,
              help="JSON project descriptor; default is the bundled synthetic project.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def init(manager: ProjectManager, name, descriptor, as_json):
    """Create a project (bundled synthetic fixture by default)."""
    try:
        if descriptor:
            doc = json.loads(Path(descriptor).read_text(encoding="utf-8"))
            doc.setdefault("name", name)
            project_id = manager.create_project(doc)
        else:
            project_id = create_synthetic_project(manager, name=name)
    except ProjectError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FAILURE)
    _emit({"project_id": project_id}, as_json, [f"created project {project_id}"])


@cli.command()
@click.argument("project_id")
@click.option("--scope", type=click.Choice(["full", "stale-only"]), default="full")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def run(manager: ProjectManager, project_id, scope, as_json):
    """Run the review pipeline and print the scorecard."""
    try:
        handle = manager.run_review(project_id, scope=scope)
    except ProjectError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FAILURE)
    payload = {
        "run_id": handle.run_id,
        "state": handle.state,
        "tasks": handle.task_states,
    }
    lines = [f"run {handle.run_id}: {handle.state}"]
    for tid in sorted(handle.task_states):
        ts = handle.task_states[tid]
        lines.append(f"  {tid:<12} {ts['status']:<10} attempts={ts['attempts']}")
    if handle.state in ("done", "degraded"):
        try:
            scorecard = manager.get_scorecard(project_id)
            payload["scorecard"] = scorecard
            lines.append(
                f"scorecard: {scorecard['total_points']} points, "
                f"{scorecard['coverage_percent']}% coverage"
            )
        except NotFoundError:
            pass
    _emit(payload, as_json, lines)
    if handle.state == "degraded":
        sys.exit(EXIT_DEGRADED)
    if handle.state == "failed":
        sys.exit(EXIT_FAILURE)


@cli.command()
@click.argument("project_id")
@click.argument("run_id")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def status(manager: ProjectManager, project_id, run_id, as_json):
    """Show a run's report."""
    try:
        report = manager.get_run(project_id, run_id)
    except ProjectError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FAILURE)
    lines = [f"run {run_id}: {report['overall']}"]
    for tid in sorted(report["tasks"]):
        ts = report["tasks"][tid]
        lines.append(f"  {tid:<12} {ts['status']:<10} attempts={ts['attempts']}")
    _emit(report, as_json, lines)


@cli.command()
@click.argument("project_id")
@click.option("--scenario", default=None, help="Scenario id instead of the base project.")
@click.option("--out", type=click.Path(), default=None,
              help="Directory for scorecard.csv plus rendered figures.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def scorecard(manager: ProjectManager, project_id, scenario, out, as_json):
    """Print the scorecard; optionally export CSV + figures."""
    try:
        payload = manager.get_scorecard(project_id, scenario_id=scenario)
    except ProjectError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FAILURE)
    lines = [
        f"{'credit':<8} {'cat':<4} {'status':<15} points",
    ]
    for cid in sorted(payload["credits"]):
        row = payload["credits"][cid]
        lines.append(
            f"{cid:<8} {row['category']:<4} {row['status']:<15} "
            f"{row['awarded_points']}/{row['max_points']}"
        )
    lines.append(f"total: {payload['total_points']} points")
    lines.append(f"coverage: {payload['coverage_percent']}%")
    if out:
        paths = export_scorecard_artifacts(payload, out)
        lines.extend(f"wrote {p}" for p in paths)
        payload["artifacts"] = [str(p) for p in paths]
    _emit(payload, as_json, lines)


@cli.command()
@click.argument("project_id")
@click.option("--out", type=click.Path(), default=None,
              help="Directory for report.md, scorecard.csv, and figures.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def report(manager: ProjectManager, project_id, out, as_json):
    """Print (and optionally export) the draft report."""
    try:
        payload = manager.get_report(project_id)
    except ProjectError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FAILURE)
    lines = [f"report status: {payload['status']}"]
    lines.extend(f"  section {s['credit_id']} (rev {s['revision']})" for s in payload["sections"])
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.md").write_text(payload["markdown"], encoding="utf-8")
        written = [out_dir / "report.md"]
        try:
            written.extend(export_scorecard_artifacts(manager.get_scorecard(project_id), out_dir))
        except NotFoundError:
            pass
        lines.extend(f"wrote {p}" for p in written)
        payload["artifacts"] = [str(p) for p in written]
    _emit(payload, as_json, lines)


@cli.command()
@click.argument("project_id")
@click.argument("name")
@click.option("--set", "changes", multiple=True, metavar="PATH=VALUE",
              help="Input change, e.g. $.inputs.building.wwr=0.3 (repeatable).")
@click.option("--run", "do_run", is_flag=True, help="Run the stale task set immediately.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def scenario(manager: ProjectManager, project_id, name, changes, do_run, as_json):
    """Create (and optionally run) a what-if scenario."""
    parsed = []
    for item in changes:
        path, sep, raw = item.partition("=")
        if not sep:
            click.echo(f"usage error: --set needs PATH=VALUE, got {item!r}", err=True)
            sys.exit(EXIT_USAGE)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parsed.append({"path": path, "value": value})
    try:
        payload = manager.apply_scenario(project_id, name, parsed)
        lines = [
            f"scenario {payload['scenario_id']}: stale tasks "
            f"{', '.join(payload['stale_tasks']) or '(none)'}"
        ]
        if do_run:
            handle = manager.run_scenario(project_id, payload["scenario_id"])
            payload["run"] = {"run_id": handle.run_id, "state": handle.state}
            lines.append(f"run {handle.run_id}: {handle.state}")
    except ProjectError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FAILURE)
    _emit(payload, as_json, lines)


@cli.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.pass_obj
def serve(manager: ProjectManager, host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(manager, manager.config), host=host, port=port)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
