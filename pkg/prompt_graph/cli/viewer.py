"""Vista de trazas en la terminal con rich."""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Optional, Sequence, Union

from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from ..models.backend import Usage
from ..store.trace import PassTrace, TraceEntry, import_trace

PREVIEW_CHARS = 400


@dataclass
class TraceRow:
    pass_index: int
    step: Optional[int]
    entry: TraceEntry


def filter_entries(traces: Sequence[PassTrace], node: Optional[str] = None,
                   pass_index: Optional[int] = None, step: Optional[int] = None) -> List[TraceRow]:
    rows = []
    for trace in traces:
        if pass_index is not None and trace.pass_index != pass_index:
            continue
        if step is not None and trace.step != step:
            continue
        for entry in trace.entries:
            if node is not None and entry.node_id != node:
                continue
            rows.append(TraceRow(trace.pass_index, trace.step, entry))
    return rows


def total_usage(rows: Sequence[TraceRow]) -> Usage:
    total = Usage()
    for row in rows:
        total = total + row.entry.usage
    return total


def _preview(value: Any, full: bool) -> str:
    if value is None:
        return ""
    text = value if isinstance(value, str) else json.dumps(value, ensure_ascii=False, indent=2)
    if full or len(text) <= PREVIEW_CHARS:
        return text
    return text[:PREVIEW_CHARS] + f"… (+{len(text) - PREVIEW_CHARS} caracteres)"


def totals_line(rows: Sequence[TraceRow]) -> str:
    usage = total_usage(rows)
    return (f"Total: {len(rows)} entradas, {usage.prompt_tokens} tokens de prompt, "
            f"{usage.completion_tokens} de respuesta, costo ${usage.cost:.4f}")


def render_trace(traces: Sequence[PassTrace], console: Optional[Console] = None,
                 node: Optional[str] = None, pass_index: Optional[int] = None,
                 step: Optional[int] = None, full: bool = False) -> List[TraceRow]:
    """Muestra las entradas que pasan los filtros y devuelve esas filas."""
    console = console or Console()
    rows = filter_entries(traces, node=node, pass_index=pass_index, step=step)
    if not rows:
        console.print("Sin entradas")
        return rows

    for row in rows:
        entry = row.entry
        style = "red" if entry.failed else "cyan"
        title = f"pasada {row.pass_index} · paso {row.step} · [bold]{entry.node_id}[/bold]"
        body = Text()
        body.append("Prompt compuesto\n", style="bold")
        body.append(_preview(entry.composed, full) + "\n\n")
        body.append("Respuesta\n", style="bold")
        body.append(_preview(entry.raw_answer, full) + "\n")
        if entry.error:
            body.append(f"\nError: {entry.error}\n", style="red")
        for op in entry.ops:
            mark = "aceptada" if op.accepted else f"rechazada ({op.reason})"
            body.append(f"op {op.op.kind.value} {op.op.target}: {mark}\n", style="magenta")
        subtitle = (f"reintentos {entry.retries} · tokens {entry.usage.prompt_tokens}"
                    f"+{entry.usage.completion_tokens}")
        console.print(Panel(body, title=title, subtitle=subtitle, border_style=style))

    table = Table(title="Resumen por nodo")
    table.add_column("Pasada", justify="right")
    table.add_column("Nodo", style="cyan")
    table.add_column("Estado")
    table.add_column("Reintentos", justify="right")
    table.add_column("Tokens", justify="right")
    for row in rows:
        table.add_row(str(row.pass_index), row.entry.node_id, row.entry.status,
                      str(row.entry.retries), str(row.entry.usage.total_tokens))
    console.print(table)

    for trace in traces:
        if trace.aborted and (pass_index is None or trace.pass_index == pass_index):
            console.print(f"[red]Pasada {trace.pass_index} abortada en '{trace.aborted_at}': "
                          f"{escape(str(trace.abort_cause))}[/red]")
    console.print(totals_line(rows))
    return rows


def view_trace_file(path: Union[str, Path], console: Optional[Console] = None, **filters) -> List[TraceRow]:
    return render_trace(import_trace(path), console=console, **filters)
