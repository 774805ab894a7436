"""
Builder de grafos sin código.

BuilderSession mantiene el GraphSpec en edición con una pila de deshacer
y una marca de cambios sin guardar. Cada operación deja el spec
estructuralmente válido (sin dependencias colgantes ni ciclos) o se
rechaza. `run_builder` es el asistente interactivo que la usa.
"""
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import questionary
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from ..core.base import NodeDef
from ..core.graph import find_cycle
from ..core.spec_io import GraphSpec, ValidationReport, validate
from ..errors import CycleIntroduced, DuplicateId, PromptGraphError, UnknownDependency
from ..runtime.compose import compose_strategies
from ..runtime.hooks import default_registry

logger = logging.getLogger(__name__)

NO_HOOK = "(ninguno)"


class BuilderSession:
    def __init__(self, spec: Optional[GraphSpec] = None, path: Optional[Union[str, Path]] = None):
        self._spec = spec.copy() if spec is not None else GraphSpec()
        self._undo: List[GraphSpec] = []
        self.path = Path(path) if path else None
        self.dirty = False

    @classmethod
    def open(cls, path: Union[str, Path]) -> "BuilderSession":
        """Abre un archivo existente o empieza vacío si no existe."""
        path = Path(path)
        spec = GraphSpec.load(path) if path.exists() else GraphSpec()
        return cls(spec, path)

    @property
    def spec(self) -> GraphSpec:
        return self._spec.copy()

    @property
    def undo_depth(self) -> int:
        return len(self._undo)

    def _commit(self, candidate: GraphSpec) -> None:
        cycle = find_cycle(candidate.ids, candidate.edges())
        if cycle is not None:
            raise CycleIntroduced(cycle)
        self._undo.append(self._spec)
        self._spec = candidate
        self.dirty = True

    def _check_deps(self, node: NodeDef, spec: GraphSpec) -> None:
        for dep in node.deps:
            if dep not in spec:
                raise UnknownDependency(dep, node.id)

    def add_node(self, node: NodeDef) -> None:
        if node.id in self._spec:
            raise DuplicateId(node.id)
        self._check_deps(node, self._spec)
        candidate = self._spec.copy()
        candidate.add(node)
        self._commit(candidate)
        logger.debug("Builder: nodo '%s' agregado", node.id)

    def update_node(self, node_id: str, **changes: Any) -> NodeDef:
        node = replace(self._spec.get(node_id), **changes)
        self._check_deps(node, self._spec)
        candidate = self._spec.copy()
        candidate.replace(node)
        self._commit(candidate)
        return node

    def remove_node(self, node_id: str) -> NodeDef:
        dependents = self._spec.dependents(node_id)
        if dependents:
            raise ValueError(f"El nodo '{node_id}' tiene dependientes: {', '.join(dependents)}")
        candidate = self._spec.copy()
        removed = candidate.remove(node_id)
        self._commit(candidate)
        return removed

    def undo(self) -> bool:
        if not self._undo:
            return False
        self._spec = self._undo.pop()
        self.dirty = True
        return True

    def report(self, schema: Optional[Dict[str, Any]] = None) -> ValidationReport:
        return validate(self._spec, schema=schema)

    def save(self, path: Optional[Union[str, Path]] = None, force: bool = False,
             schema: Optional[Dict[str, Any]] = None) -> ValidationReport:
        """
        Valida y escribe el archivo canónico.

        Con hallazgos y sin `force` no se escribe nada; el reporte se
        devuelve igual para mostrarlo.
        """
        target = Path(path) if path else self.path
        if target is None:
            raise ValueError("No hay ruta de destino para guardar")
        report = self.report(schema)
        if report.ok or force:
            self._spec.save(target)
            self.path = target
            self.dirty = False
            logger.info("Grafo guardado en %s (%d nodos)", target, len(self._spec))
        return report

    def __repr__(self) -> str:
        state = "*" if self.dirty else ""
        return f"BuilderSession({self._spec!r}{state}, undo={self.undo_depth})"


class QuestionaryAsker:
    """Preguntas por terminal; devuelve None si el usuario cancela (Ctrl-C)."""

    def text(self, message: str, default: str = "") -> Optional[str]:
        return questionary.text(message, default=default).ask()

    def select(self, message: str, choices: Sequence[str]) -> Optional[str]:
        return questionary.select(message, choices=list(choices)).ask()

    def confirm(self, message: str, default: bool = False) -> Optional[bool]:
        return questionary.confirm(message, default=default).ask()


MENU = (
    "Agregar nodo",
    "Editar nodo",
    "Eliminar nodo",
    "Deshacer",
    "Ver grafo",
    "Guardar",
    "Salir",
)


class _Cancelled(Exception):
    pass


def _required(value):
    if value is None:
        raise _Cancelled()
    return value


def _split_deps(raw: str) -> List[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def show_spec(spec: GraphSpec, console: Console) -> None:
    table = Table(title=f"Grafo ({len(spec)} nodos, {len(spec.edges())} aristas)")
    table.add_column("Nodo", style="cyan")
    table.add_column("Dependencias")
    table.add_column("Hook")
    table.add_column("Compose")
    table.add_column("Modelo")
    for node in spec.nodes:
        table.add_row(node.id, ", ".join(node.deps) or "-", node.after_query or "-",
                      node.compose, node.model)
    console.print(table)


class BuilderWizard:
    """Menú del builder sobre una BuilderSession."""

    def __init__(self, session: BuilderSession, ask=None, console: Optional[Console] = None,
                 schema: Optional[Dict[str, Any]] = None):
        self.session = session
        self.ask = ask or QuestionaryAsker()
        self.console = console or Console()
        self.schema = schema

    def _ask_deps(self, node_id: str, default: str = "") -> List[str]:
        # Dependencias inexistentes: se rechazan y se vuelve a preguntar
        while True:
            deps = _split_deps(_required(self.ask.text(
                f"Dependencias de '{node_id}' (separadas por coma):", default)))
            missing = [dep for dep in deps if dep not in self.session.spec or dep == node_id]
            if not missing:
                return deps
            self.console.print(f"[red]No existen o no son válidas: {', '.join(missing)}[/red]")

    def _ask_hook(self) -> Optional[str]:
        choice = _required(self.ask.select("Hook after-query:", [NO_HOOK] + default_registry().ids()))
        return None if choice == NO_HOOK else choice

    def add_node(self) -> None:
        while True:
            node_id = _required(self.ask.text("Id del nodo:")).strip()
            if node_id and node_id not in self.session.spec:
                break
            self.console.print("[red]El id está vacío o ya existe[/red]")
        prompt = _required(self.ask.text("Prompt del nodo:"))
        deps = self._ask_deps(node_id)
        hook = self._ask_hook()
        compose = _required(self.ask.select("Estrategia de compose:", compose_strategies()))
        model = _required(self.ask.text("Perfil de modelo:", "default")).strip() or "default"
        self.session.add_node(NodeDef(node_id, prompt, tuple(deps), compose, hook, model))
        self.console.print(f"[green]Nodo '{node_id}' agregado[/green]")

    def edit_node(self) -> None:
        spec = self.session.spec
        if not len(spec):
            self.console.print("No hay nodos")
            return
        node = spec.get(_required(self.ask.select("Nodo a editar:", spec.ids)))
        prompt = _required(self.ask.text("Prompt del nodo:", node.prompt))
        deps = self._ask_deps(node.id, ", ".join(node.deps))
        hook = self._ask_hook()
        model = _required(self.ask.text("Perfil de modelo:", node.model)).strip() or "default"
        try:
            self.session.update_node(node.id, prompt=prompt, deps=tuple(deps), after_query=hook, model=model)
        except CycleIntroduced as exc:
            self.console.print(f"[red]{escape(str(exc))}[/red]")

    def remove_node(self) -> None:
        spec = self.session.spec
        if not len(spec):
            self.console.print("No hay nodos")
            return
        node_id = _required(self.ask.select("Nodo a eliminar:", spec.ids))
        try:
            self.session.remove_node(node_id)
        except ValueError as exc:
            self.console.print(f"[red]{escape(str(exc))}[/red]")

    def save(self) -> None:
        report = self.session.save(schema=self.schema)
        if report.ok:
            self.console.print(f"[green]Guardado en {self.session.path}[/green]")
            return
        for finding in report.findings:
            self.console.print(f"[yellow]{escape(str(finding))}[/yellow]")
        if self.ask.confirm("El grafo tiene hallazgos. ¿Guardar de todos modos?"):
            self.session.save(force=True, schema=self.schema)
            self.console.print(f"[yellow]Guardado con hallazgos en {self.session.path}[/yellow]")

    def run(self) -> bool:
        """Bucle del menú. Devuelve True si el archivo quedó guardado al salir."""
        actions = {
            "Agregar nodo": self.add_node,
            "Editar nodo": self.edit_node,
            "Eliminar nodo": self.remove_node,
            "Deshacer": lambda: self.console.print(
                "Deshecho" if self.session.undo() else "Nada que deshacer"),
            "Ver grafo": lambda: show_spec(self.session.spec, self.console),
            "Guardar": self.save,
        }
        try:
            while True:
                choice = _required(self.ask.select("¿Qué quieres hacer?", MENU))
                if choice == "Salir":
                    if self.session.dirty and not self.ask.confirm("Hay cambios sin guardar. ¿Salir igual?"):
                        continue
                    break
                try:
                    actions[choice]()
                except PromptGraphError as exc:
                    self.console.print(f"[red]{escape(str(exc))}[/red]")
        except _Cancelled:
            self.console.print("Builder cancelado; el archivo no se modificó")
            return False
        return not self.session.dirty


def run_builder(path: Union[str, Path], ask=None, console: Optional[Console] = None,
                schema: Optional[Dict[str, Any]] = None) -> bool:
    session = BuilderSession.open(path)
    return BuilderWizard(session, ask=ask, console=console, schema=schema).run()
