import logging
from typing import Iterable, Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table
from rich.theme import Theme

logger = logging.getLogger(__name__)

# Initialize Rich console
custom_theme = Theme({
    "info": "cyan",
    "warning": "yellow",
    "error": "red",
    "success": "green",
    "highlight": "bold magenta"
})

console = Console(theme=custom_theme)


def setup_logging(level: str = "INFO"):
    """Route stdlib logging through rich"""
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True)],
        force=True,
    )


def print_section(title: str, content: str, style: str = "info"):
    """Print a nicely formatted section"""
    console.print(Panel(content, title=title, style=style))


def print_table(title: str, columns: Sequence[str], rows: Iterable[Sequence[object]]):
    """Render rows as a rich table; floats get two decimals, p-values stay scientific."""
    table = Table(title=title, show_header=True, header_style="bold magenta")
    for column in columns:
        table.add_column(column)

    for row in rows:
        cells = []
        for column, value in zip(columns, row):
            if isinstance(value, float):
                cells.append(f"{value:.2e}" if column.lower().startswith("p") else f"{value:.2f}")
            else:
                cells.append("" if value is None else str(value))
        table.add_row(*cells)

    console.print(table)
