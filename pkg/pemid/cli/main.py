"""Main CLI application."""

from pathlib import Path

import typer
from rich.console import Console

from pemid.cli.commands.benchmark import benchmark_app, history
from pemid.cli.commands.experiment import evaluate, generate, select, train
from pemid.cli.templates import TEMPLATES, render_template

app = typer.Typer(
    name="pemid",
    help="pemid - prediction-error identification of state-space models with noise models",
    no_args_is_help=True,
    add_completion=False,
)

console = Console(force_terminal=True)


def version_callback(value: bool) -> None:
    """Show version information."""
    if value:
        from pemid import __version__

        console.print(f"pemid version {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: bool = typer.Option(
        None,
        "--version",
        callback=version_callback,
        is_eager=True,
        help="Show version information and exit.",
    ),
) -> None:
    """pemid - prediction-error identification of state-space models with noise models"""
    pass


app.command("generate")(generate)
app.command("train")(train)
app.command("eval")(evaluate)
app.command("select")(select)
app.command("history")(history)
app.add_typer(benchmark_app, name="benchmark", help="Inspect benchmark generators")


@app.command()
def init(
    name: str = typer.Argument(..., help="Experiment name"),
    template: str = typer.Option("lti", help=f"Template: {', '.join(TEMPLATES)}"),
) -> None:
    """Initialize a new experiment configuration."""
    if template not in TEMPLATES:
        console.print(
            f"[red]Error:[/red] Template must be one of: {', '.join(TEMPLATES)}"
        )
        raise typer.Exit(1)

    config_file = Path(f"{name}.yml")
    if config_file.exists():
        console.print(f"[red]Error:[/red] Experiment config '{config_file}' already exists")
        raise typer.Exit(1)

    config_file.write_text(render_template(template, name), encoding="utf-8")
    console.print(f"[green]✓[/green] Created experiment config: {config_file}")
    console.print(
        "[blue]Tip:[/blue] Set PEMID_OUTPUT_ROOT to choose where runs are written"
    )


if __name__ == "__main__":
    app()
