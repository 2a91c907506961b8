"""
Report achieved SNRs and the true-system BFR baselines of the disk generators.

Usage:
  python scripts/calibrate_disk.py --seeds 0..9 --samples 2000
  python scripts/calibrate_disk.py --per-seed -b lti_disk
"""

from typing import List, Optional, Tuple

import numpy as np
import typer
from rich.console import Console
from rich.table import Table

from pemid.benchmarks import BenchmarkConfig, BenchmarkGenerator
from pemid.cli.commands.experiment import parse_seeds
from pemid.core.registry import BenchmarkRegistry
from pemid.metrics import format_percent, true_baseline_scores

console = Console()


def _pair_scores(
    generator: BenchmarkGenerator, samples: int, seed: int
) -> List[Tuple[float, float, float]]:
    """(SNR, sim, pred) of the train and test records ``generate`` writes for ``seed``."""
    scores = []
    for child in np.random.SeedSequence(seed).spawn(2):
        generated = generator.generate(samples, child)
        sim, pred = true_baseline_scores(generated.dataset, generated.truth)
        scores.append((generated.snr_db, sim, pred))
    return scores


def _per_seed_table(
    name: str,
    generator: BenchmarkGenerator,
    samples: int,
    seed_list: List[int],
    target_sim: float,
    target_pred: float,
) -> Table:
    table = Table(title=f"{name}: train/test records per benchmark seed (N={samples})")
    table.add_column("seed", justify="right", style="cyan")
    for split in ("train", "test"):
        table.add_column(f"{split} SNR [dB]", justify="right")
        table.add_column(f"{split} sim", justify="right", style="green")
        table.add_column(f"{split} pred", justify="right", style="green")
    table.add_column("test distance", justify="right", style="yellow")

    for seed in seed_list:
        row = [str(seed)]
        scores = _pair_scores(generator, samples, seed)
        for snr, sim, pred in scores:
            row += [f"{snr:.2f}", format_percent(sim), format_percent(pred)]
        _, sim_test, pred_test = scores[1]
        distance = max(abs(sim_test - target_sim), abs(pred_test - target_pred))
        row.append(f"{100 * distance:.2f}")
        table.add_row(*row)
    return table


def calibrate(
    seeds: str = typer.Option("0..9", "--seeds", help="Seeds, e.g. 0..9 or 0,3,7"),
    samples: int = typer.Option(2000, "--samples", min=2, help="Samples per dataset"),
    benchmark: Optional[List[str]] = typer.Option(
        None, "--benchmark", "-b", help="Benchmarks to calibrate (default all)"
    ),
    per_seed: bool = typer.Option(
        False, "--per-seed", help="Score the train/test pair of every benchmark seed"
    ),
    target_sim: float = typer.Option(0.6813, "--target-sim", help="Reference test sim BFR"),
    target_pred: float = typer.Option(0.7285, "--target-pred", help="Reference test pred BFR"),
) -> None:
    """Mean and spread of SNR and true sim/pred BFR over seeds."""
    registry = BenchmarkRegistry(discover_entry_points=False)
    names = benchmark or sorted(info["name"] for info in registry.list_benchmarks())
    seed_list = parse_seeds(seeds)

    if per_seed:
        for name in names:
            generator = registry.create_instance(BenchmarkConfig(kind=name, n_samples=samples))
            console.print(
                _per_seed_table(name, generator, samples, seed_list, target_sim, target_pred)
            )
        return

    table = Table(title=f"Disk calibration ({len(seed_list)} seeds, N={samples})")
    table.add_column("benchmark", style="cyan")
    table.add_column("noise", style="blue")
    table.add_column("SNR [dB]", justify="right")
    table.add_column("true sim BFR", justify="right", style="green")
    table.add_column("true pred BFR", justify="right", style="green")

    for name in names:
        generator = registry.create_instance(BenchmarkConfig(kind=name, n_samples=samples))
        snr, sim, pred = [], [], []
        for seed in seed_list:
            generated = generator.generate(samples, seed)
            snr.append(generated.snr_db)
            s, p = true_baseline_scores(generated.dataset, generated.truth)
            sim.append(s)
            pred.append(p)
        table.add_row(
            name,
            generator.noise.kind,
            f"{np.mean(snr):.2f} ± {np.std(snr):.2f}",
            f"{format_percent(float(np.mean(sim)))} ± {100 * np.std(sim):.2f}",
            f"{format_percent(float(np.mean(pred)))} ± {100 * np.std(pred):.2f}",
        )
    console.print(table)


if __name__ == "__main__":
    typer.run(calibrate)
