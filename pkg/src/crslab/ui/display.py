"""Display and UI utilities"""

import logging
from typing import Iterable, Optional, Sequence

from rich.box import ROUNDED
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table


def configure_logging(verbose: bool = False, console: Optional[Console] = None) -> None:
    """Route package logs through rich on stderr; DEBUG when verbose, else WARNING"""
    handler = RichHandler(
        console=console or Console(stderr=True),
        show_path=False,
        markup=False,
        rich_tracebacks=verbose,
    )
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    root = logging.getLogger("crslab")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)
    root.propagate = False


class TerminalDisplay:
    """Handles status messages on the error stream"""

    def __init__(self, console: Console = None):
        self.console = console or Console(stderr=True)

    def display_success(self, message: str) -> None:
        self.console.print(f"[green]✓[/] {message}")

    def display_warning(self, message: str) -> None:
        self.console.print(f"[yellow]{message}[/]")

    def display_error(self, message: str) -> None:
        self.console.print(f"[red]{message}[/]")

    def display_info(self, message: str) -> None:
        self.console.print(f"[cyan]{message}[/]")

    def display_check(self, name: str, passed: bool, detail: str) -> None:
        """One verify line: PASS/FAIL, check name and the measured numbers"""
        badge = "[green]PASS[/]" if passed else "[red]FAIL[/]"
        self.console.print(f"{badge} {name}: {detail}")


class ReportTable:
    """Renders report rows as a rich table"""

    def __init__(self, console: Console = None):
        self.console = console or Console()

    def create_table(self, title: str, columns: Sequence[str], rows: Iterable[Sequence[str]]) -> Table:
        table = Table(title=title, box=ROUNDED)
        for index, column in enumerate(columns):
            table.add_column(column, style="cyan" if index == 0 else None,
                             justify="left" if index == 0 else "right")
        for row in rows:
            table.add_row(*row)
        return table

    def show(self, title: str, columns: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
        self.console.print(self.create_table(title, columns, rows))


class ProgressDisplay:
    """Handles progress display for long simulations"""

    def __init__(self, console: Console = None):
        self.console = console or Console(stderr=True)

    def show_progress(self) -> Progress:
        """Progress bar context manager; hidden when stderr is not a terminal"""
        return Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TimeElapsedColumn(),
            console=self.console,
            transient=True,
            disable=not self.console.is_terminal,
        )
