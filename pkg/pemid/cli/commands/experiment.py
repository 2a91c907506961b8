"""CLI commands for generating data, training, evaluating and selecting models."""

import re
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional, Sequence

import typer
from rich.console import Console
from rich.table import Table

from pemid.core.config import ExperimentConfig
from pemid.core.engine import CommandResult, ExperimentEngine
from pemid.core.exceptions import ExperimentStageError, PemidError
from pemid.metrics.report import REPORT_HEADER, format_percent, report_rows
from pemid.metrics.scores import ScoreCard
from pemid.training.trainer import RunSummary

console = Console()

_RANGE = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")


def parse_seeds(text: str) -> List[int]:
    """``"0..9"`` (inclusive range) or a comma-separated list such as ``"0,3,7"``."""
    match = _RANGE.match(text)
    if match:
        start, stop = int(match.group(1)), int(match.group(2))
        if stop < start:
            raise typer.BadParameter(f"Empty seed range '{text}'")
        return list(range(start, stop + 1))
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"Seeds must be 'a..b' or a comma list, got '{text}'") from e
    if not seeds:
        raise typer.BadParameter("No seeds given")
    return seeds


def _fail(stage: str, error: BaseException) -> NoReturn:
    console.print(f"[red]{stage.title()} Error:[/red] {error}")
    raise typer.Exit(1)


def _load(
    engine: ExperimentEngine, config_path: str, overrides: Dict[str, Any]
) -> ExperimentConfig:
    try:
        return engine.load_config(config_path, overrides)
    except PemidError as e:
        _fail("config", e)


def _score_table(cards: Sequence[ScoreCard], title: str) -> Table:
    table = Table(title=title)
    first, *rest = REPORT_HEADER
    table.add_column(first, style="cyan")
    for column in rest:
        table.add_column(column, style="green", justify="right")
    for row in report_rows(cards):
        table.add_row(*row)
    return table


def _print_outputs(result: CommandResult) -> None:
    console.print(f"[blue]Run ID:[/blue] {result.run_id}")
    for key, path in result.outputs.items():
        console.print(f"  • {key}: {path}")


def _print_run(summary: RunSummary) -> None:
    if summary.success:
        console.print(
            f"  seed {summary.seed}: loss {summary.final_loss:.4e}, "
            f"score {format_percent(summary.score)}"
        )
    else:
        console.print(f"  seed {summary.seed}: [yellow]failed[/yellow] ({summary.error})")


def _run(stage: str, action: Any) -> CommandResult:
    try:
        result: CommandResult = action()
    except ExperimentStageError as e:
        _fail(e.stage, e.error)
    except PemidError as e:
        _fail(stage, e)
    return result


def generate(
    config_path: str = typer.Option(..., "--config", "-c", help="Experiment configuration file"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Output directory"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Root seed for train and test data"),
    samples: Optional[int] = typer.Option(None, "--samples", help="Samples per dataset"),
) -> None:
    """Generate seeded train and test datasets with their hidden truth."""
    engine = ExperimentEngine()
    benchmark: Dict[str, Any] = {}
    if seed is not None:
        benchmark["seed"] = seed
    if samples is not None:
        benchmark["n_samples"] = samples
    config = _load(engine, config_path, {"benchmark": benchmark} if benchmark else {})

    console.print(f"[blue]Generating:[/blue] {config.benchmark.kind}")
    with console.status("Generating datasets..."):
        result = _run("generate", lambda: engine.generate(config, out))

    console.print("[green]✓ Datasets written[/green]")
    _print_outputs(result)


def train(
    config_path: str = typer.Option(..., "--config", "-c", help="Experiment configuration file"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Output directory"),
    data: Optional[str] = typer.Option(None, "--data", help="Dataset directory"),
    seeds: Optional[str] = typer.Option(None, "--seeds", help="Seeds, e.g. 0..9 or 0,3,7"),
    multistart: Optional[int] = typer.Option(None, "--multistart", min=1, help="Training runs"),
    plant_only: bool = typer.Option(
        False, "--plant-only", help="Fit the process model alone (no noise model)"
    ),
) -> None:
    """Train a model with multistart and save the best run."""
    engine = ExperimentEngine()
    training: Dict[str, Any] = {}
    if seeds is not None:
        training["seeds"] = parse_seeds(seeds)
    if multistart is not None:
        training["multistart"] = multistart
    config = _load(engine, config_path, {"training": training} if training else {})

    runs = config.training.run_seeds()
    console.print(f"[blue]Training:[/blue] {config.name} ({len(runs)} run(s), seeds {runs})")
    result = _run(
        "train", lambda: engine.train(config, out, data, plant_only=plant_only, on_run=_print_run)
    )

    report = result.train.report if result.train else None
    if report is not None:
        console.print(
            f"[green]✓ Training completed[/green] (seed {report.seed}, "
            f"{report.wall_time_s:.2f} s, {report.failures} failed run(s))"
        )
        if report.line_search_failed:
            console.print(f"[yellow]Warning:[/yellow] {report.message}")
    console.print(_score_table(result.cards, "Training Results"))
    _print_outputs(result)


def evaluate(
    model: str = typer.Option(..., "--model", "-m", help="Model file"),
    data: str = typer.Option(..., "--data", "-d", help="Dataset CSV to score on"),
    config_path: Optional[str] = typer.Option(
        None, "--config", "-c", help="Experiment configuration (burn-in, rho_w)"
    ),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Output directory"),
) -> None:
    """Score a model on a dataset after reconstructing its initial state."""
    engine = ExperimentEngine()
    overrides: Dict[str, Any] = {"name": f"eval_{Path(model).stem}"}
    if config_path is not None:
        config = _load(engine, config_path, overrides)
    else:
        try:
            config = engine.config_manager.build_config(overrides)
        except PemidError as e:
            _fail("config", e)

    result = _run("eval", lambda: engine.evaluate(model, data, config, out))
    card = result.cards[0]
    console.print(_score_table(result.cards, "Evaluation Results"))
    console.print(f"[blue]Var(v):[/blue] {card.var_v:.4e}  [blue]Var(e):[/blue] {card.var_e:.4e}")
    _print_outputs(result)


def select(
    config_path: str = typer.Option(..., "--config", "-c", help="Experiment configuration file"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Output directory"),
    data: Optional[str] = typer.Option(None, "--data", help="Dataset directory"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Training seed"),
    reweight: bool = typer.Option(False, "--reweight", help="Iteratively reweight group norms"),
) -> None:
    """Prune model orders with the group lasso and re-estimate the reduced model."""
    engine = ExperimentEngine()
    overrides: Dict[str, Any] = {}
    if reweight:
        overrides["selection"] = {"reweight": True}
    if seed is not None:
        overrides["training"] = {"seeds": [seed]}
    config = _load(engine, config_path, overrides)

    if config.training.tau_g == 0:
        console.print("[yellow]Warning:[/yellow] training.tau_g is 0, nothing will be pruned")
    result = _run("select", lambda: engine.select(config, out, data))

    selection = result.selection
    if selection is not None:
        ms = selection.structure
        console.print(
            f"[green]✓ Selected[/green] nx={ms.nx}, nz={ms.nz}, n_p={ms.n_p} "
            f"(eps_g={selection.eps_g:.3e}, {selection.reweight_rounds} round(s))"
        )
        norms = Table(title="Group Norms")
        norms.add_column("group", style="cyan")
        norms.add_column("norm before", justify="right")
        norms.add_column("norm after", justify="right")
        for name, value in selection.norms_before.items():
            after = selection.norms_after.get(name)
            norms.add_row(
                name,
                f"{value:.3e}",
                "[red]pruned[/red]" if after is None else f"{after:.3e}",
            )
        console.print(norms)
    console.print(_score_table(result.cards, "Selected Model"))
    _print_outputs(result)
