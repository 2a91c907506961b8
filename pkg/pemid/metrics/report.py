"""Plain-text experiment tables."""

import io
from typing import List, Literal, Mapping, Optional, Sequence, Tuple

from rich import box
from rich.console import Console
from rich.table import Table
from rich.text import Text

from pemid.metrics.scores import ScoreCard

REPORT_HEADER = ("model", "n_x", "n_z", "sched", "type", "BFR train", "BFR test", "time")

Layout = Literal["text", "markdown"]


def format_percent(value: Optional[float]) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}%"


def _format_time(seconds: Optional[float]) -> str:
    return "-" if seconds is None else f"{seconds:.2f} s"


def report_rows(cards: Sequence[ScoreCard]) -> List[Tuple[str, ...]]:
    rows: List[Tuple[str, ...]] = []
    for card in cards:
        head = (card.label or "-", str(card.nx), str(card.nz), card.sched)
        time = _format_time(card.time_s)
        rows.append(
            head
            + ("sim", format_percent(card.bfr_sim_train), format_percent(card.bfr_sim_test), time)
        )
        if card.has_prediction:
            rows.append(
                head
                + (
                    "pred",
                    format_percent(card.bfr_pred_train),
                    format_percent(card.bfr_pred_test),
                    time,
                )
            )
    return rows


def _render(header: Sequence[str], rows: Sequence[Sequence[str]], layout: Layout) -> str:
    if layout == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return "\n".join(lines) + "\n"

    table = Table(box=box.SIMPLE_HEAD, show_edge=False, pad_edge=False)
    for i, name in enumerate(header):
        table.add_column(name, justify="left" if i == 0 else "right", no_wrap=True)
    for row in rows:
        table.add_row(*(Text(str(cell)) for cell in row))

    console = Console(record=True, file=io.StringIO(), width=240, color_system=None)
    console.print(table)
    lines = [line.rstrip() for line in console.export_text().splitlines()]
    return "\n".join(line for line in lines if line) + "\n"


def render_report(cards: Sequence[ScoreCard], layout: Layout = "text") -> str:
    """Tabulate score cards: one ``sim`` row per card, plus a ``pred`` row with a noise model."""
    return _render(REPORT_HEADER, report_rows(cards), layout)


def render_group_norms(
    before: Mapping[str, float],
    after: Mapping[str, float],
    layout: Layout = "text",
) -> str:
    """Group norms before and after pruning; pruned groups show ``pruned``."""
    rows = [
        (name, f"{value:.3e}", f"{after[name]:.3e}" if name in after else "pruned")
        for name, value in before.items()
    ]
    return _render(("group", "norm before", "norm after"), rows, layout)
