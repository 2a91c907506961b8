"""CLI commands for benchmark generators and run history."""

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table

from pemid.core.audit import AuditLogger
from pemid.core.exceptions import BenchmarkError
from pemid.core.pipeline import AUDIT_FILE_NAME
from pemid.core.registry import BenchmarkRegistry

benchmark_app = typer.Typer()
console = Console()


@benchmark_app.command("list")
def list_benchmarks() -> None:
    """List built-in and installed benchmark generators."""
    try:
        benchmarks = BenchmarkRegistry().list_benchmarks()
    except BenchmarkError as e:
        console.print(f"[red]Benchmark Error:[/red] {e}")
        raise typer.Exit(1)

    table = Table(title="Benchmarks")
    table.add_column("Name", style="cyan")
    table.add_column("Source", style="blue")
    table.add_column("API", style="yellow")
    table.add_column("Description", style="green")
    for info in sorted(benchmarks, key=lambda i: i["name"]):
        table.add_row(
            info["name"],
            info["source"],
            str(info.get("api_version", "?")),
            info.get("description", ""),
        )
    console.print(table)


def history(
    out: str = typer.Argument(..., help="Output directory of a previous command"),
    run_id: Optional[str] = typer.Option(None, "--run-id", help="Specific run ID"),
    limit: int = typer.Option(20, help="Number of recent events to show"),
) -> None:
    """Show the audit trail written to an output directory."""
    log_file = Path(out) / AUDIT_FILE_NAME
    if not log_file.is_file():
        console.print(f"[yellow]No audit log found in {out}[/yellow]")
        return

    logger = AuditLogger(log_file)
    events = logger.get_run_events(run_id) if run_id else logger.get_recent_events(limit)
    if not events:
        console.print("[yellow]No run history found[/yellow]")
        return

    table = Table()
    table.add_column("Run ID", style="cyan")
    table.add_column("Timestamp", style="blue")
    table.add_column("Command", style="magenta")
    table.add_column("Event", style="green")
    table.add_column("Stage")
    table.add_column("Status", style="yellow")
    for event in events:
        table.add_row(
            event.run_id[:8] + "...",
            event.timestamp.isoformat(timespec="seconds"),
            event.command or "",
            event.event_type,
            event.stage or "",
            "✓" if event.success else "✗",
        )
    console.print(table)
