import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple, Union

from ..errors import CycleIntroduced, DuplicateId, StorageFailure, UnknownDependency, UnknownNode
from ..store.templates import find_placeholders
from .base import NodeDef
from .graph import Graph, find_cycle

logger = logging.getLogger(__name__)


class GraphSpec:
    """
    Descripción serializable de un grafo (lo que vive en el archivo JSON).

    A diferencia de `Graph`, un GraphSpec puede estar roto: dependencias
    colgantes o ciclos. Eso permite validarlo y editarlo en el builder.
    """

    def __init__(self, nodes: Optional[Iterable[NodeDef]] = None):
        self._nodes: Dict[str, NodeDef] = {}
        for node in nodes or []:
            self.add(node)

    @property
    def nodes(self) -> List[NodeDef]:
        return list(self._nodes.values())

    @property
    def ids(self) -> List[str]:
        return list(self._nodes)

    def get(self, node_id: str) -> NodeDef:
        if node_id not in self._nodes:
            raise UnknownNode(node_id)
        return self._nodes[node_id]

    def add(self, node: NodeDef) -> None:
        if node.id in self._nodes:
            raise DuplicateId(node.id)
        self._nodes[node.id] = node

    def replace(self, node: NodeDef) -> None:
        if node.id not in self._nodes:
            raise UnknownNode(node.id)
        self._nodes[node.id] = node

    def remove(self, node_id: str) -> NodeDef:
        if node_id not in self._nodes:
            raise UnknownNode(node_id)
        return self._nodes.pop(node_id)

    def edges(self) -> List[Tuple[str, str]]:
        return [(dep, node.id) for node in self._nodes.values() for dep in node.deps]

    def dependents(self, node_id: str) -> List[str]:
        return [node.id for node in self._nodes.values() if node_id in node.deps]

    def copy(self) -> "GraphSpec":
        return GraphSpec(self.nodes)

    def to_dict(self) -> Dict[str, Any]:
        return {node.id: node.to_dict() for node in self._nodes.values()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GraphSpec":
        if not isinstance(data, dict):
            raise ValueError("El archivo de grafo debe ser un mapa id -> nodo")
        return cls(NodeDef.from_dict(node_id, node) for node_id, node in data.items())

    @classmethod
    def from_json(cls, text: str) -> "GraphSpec":
        def _no_duplicates(pairs):
            seen = {}
            for key, value in pairs:
                if key in seen:
                    raise DuplicateId(key)
                seen[key] = value
            return seen
        return cls.from_dict(json.loads(text, object_pairs_hook=_no_duplicates))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GraphSpec":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageFailure(f"No se pudo leer el grafo {path}: {exc}") from exc
        return cls.from_json(text)

    def save(self, path: Union[str, Path]) -> None:
        """Escribe el archivo canónico; si falla, el archivo previo queda intacto."""
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_text(self.to_json(), encoding="utf-8")
            tmp.replace(path)
        except OSError as exc:
            tmp.unlink(missing_ok=True)
            raise StorageFailure(f"No se pudo guardar el grafo en {path}: {exc}") from exc

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._nodes

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GraphSpec) and self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return f"GraphSpec(nodes={len(self)}, edges={len(self.edges())})"


def build_graph(spec: GraphSpec, name: str = "PromptGraph", max_dynamic_nodes: int = 64) -> Graph:
    """Registra los nodos en orden topológico (el archivo puede listarlos en cualquier orden)."""
    graph = Graph(name=name, max_dynamic_nodes=max_dynamic_nodes)
    remaining = {node.id: node for node in spec.nodes}
    while remaining:
        ready = [n for n in remaining.values() if all(d in graph for d in n.deps)]
        if not ready:
            cycle = find_cycle(spec.ids, [(u, v) for u, v in spec.edges() if u in spec])
            if cycle is not None:
                raise CycleIntroduced(cycle)
            for node in remaining.values():
                for dep in node.deps:
                    if dep not in spec:
                        raise UnknownDependency(dep, node.id)
        for node in ready:
            graph.add_node(node)
            del remaining[node.id]
    return graph


def load_graph(path: Union[str, Path], max_dynamic_nodes: int = 64) -> Graph:
    return build_graph(GraphSpec.load(path), name=Path(path).stem, max_dynamic_nodes=max_dynamic_nodes)


@dataclass
class Finding:
    kind: str
    node_id: Optional[str]
    detail: str

    def __str__(self) -> str:
        where = f"[{self.node_id}] " if self.node_id else ""
        return f"{self.kind}: {where}{self.detail}"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "node": self.node_id, "detail": self.detail}


@dataclass
class ValidationReport:
    findings: List[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def kinds(self) -> List[str]:
        return [finding.kind for finding in self.findings]

    def by_kind(self, kind: str) -> List[Finding]:
        return [finding for finding in self.findings if finding.kind == kind]

    def add(self, kind: str, node_id: Optional[str], detail: str) -> None:
        self.findings.append(Finding(kind, node_id, detail))

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "findings": [f.to_dict() for f in self.findings]}

    def __len__(self) -> int:
        return len(self.findings)


def _schema_has(schema: Dict[str, Any], path: str) -> bool:
    node: Any = schema
    for part in path.split("."):
        if isinstance(node, dict) and part in node:
            node = node[part]
        else:
            return False
    return True


def validate(spec: GraphSpec,
             schema: Optional[Dict[str, Any]] = None,
             hook_exists: Optional[Callable[[str], bool]] = None,
             compose_exists: Optional[Callable[[str], bool]] = None,
             profile_exists: Optional[Callable[[str], bool]] = None) -> ValidationReport:
    """
    Diagnóstico de un grafo: ciclos, dependencias colgantes, hooks y
    estrategias de compose desconocidos y claves `$db.…$` ausentes del
    esquema. El reporte vacío significa que el grafo se puede ejecutar.

    Por defecto se consultan los registros integrados de hooks y compose.
    """
    from ..runtime.compose import has_compose
    from ..runtime.hooks import default_registry

    hook_exists = hook_exists or default_registry().has
    compose_exists = compose_exists or has_compose
    report = ValidationReport()

    for node in spec.nodes:
        for dep in node.deps:
            if dep not in spec:
                report.add("UnknownDependency", node.id, f"dependencia '{dep}' no existe")
        if node.after_query is not None and not hook_exists(node.after_query):
            report.add("UnknownHook", node.id, f"hook '{node.after_query}' no registrado")
        if not compose_exists(node.compose):
            report.add("UnknownComposeStrategy", node.id, f"compose '{node.compose}' no registrado")
        if profile_exists is not None and not profile_exists(node.model):
            report.add("UnknownProfile", node.id, f"perfil '{node.model}' no configurado")
        if schema is not None:
            for path in find_placeholders(node.prompt):
                if not _schema_has(schema, path):
                    report.add("UnresolvedTemplateKey", node.id, f"$db.{path}$ no está en el esquema")

    known_edges = [(u, v) for u, v in spec.edges() if u in spec]
    cycle = find_cycle(spec.ids, known_edges)
    if cycle is not None:
        report.add("CycleIntroduced", None, " -> ".join(cycle))

    logger.debug("Validación: %d hallazgos", len(report))
    return report
