import logging
import threading
from collections import deque
from typing import Deque, Dict, FrozenSet, Iterable, List, Optional, Set

import networkx as nx

from ..errors import (
    CycleIntroduced,
    DuplicateId,
    DynamicBudgetExceeded,
    DynamicOpRejected,
    GraphBusy,
    GraphError,
    RejectedEvaluatedEndpoint,
    RejectedEvaluatedTarget,
    RejectedUnknownEdge,
    UnknownDependency,
    UnknownNode,
)
from .base import DynamicOp, Edge, NodeDef, OpKind, OpResult

logger = logging.getLogger(__name__)


def find_cycle(nodes: Iterable[str], edges: Iterable[Edge]) -> Optional[List[str]]:
    """Devuelve un ciclo como lista de ids (cerrado: primero == último) o None."""
    digraph = nx.DiGraph()
    digraph.add_nodes_from(nodes)
    digraph.add_edges_from(edges)
    try:
        cycle = nx.find_cycle(digraph)
    except nx.NetworkXNoCycle:
        return None
    path = [u for u, _ in cycle]
    return path + [path[0]]


class Graph:
    """
    Grafo de subtareas: estructura permanente + overlay temporal de la pasada.

    Fuera de una pasada solo se puede modificar la parte permanente
    (`add_node`, `add_edge`). Durante una pasada la estructura permanente
    queda congelada y las DynamicOps escriben en el overlay, que se
    descarta completo en `end_pass()`.

    El recorrido es Kahn con frontera FIFO: la frontera inicial se ordena
    por id y los sucesores liberados se encolan también ordenados por id.
    """

    def __init__(self, name: str = "PromptGraph", max_dynamic_nodes: int = 64):
        if max_dynamic_nodes < 0:
            raise ValueError("max_dynamic_nodes no puede ser negativo")
        self._name = name
        self._max_dynamic_nodes = max_dynamic_nodes
        self._lock = threading.RLock()

        self._nodes: Dict[str, NodeDef] = {}
        self._edges: Set[Edge] = set()

        self._temp_nodes: Dict[str, NodeDef] = {}
        self._temp_edges_added: Set[Edge] = set()
        self._temp_edges_removed: Set[Edge] = set()
        self._evaluated: Set[str] = set()
        self._released: Set[str] = set()
        self._skipped: Set[str] = set()
        self._order: List[str] = []
        self._in_degree: Dict[str, int] = {}
        self._frontier: Deque[str] = deque()
        self._dynamic_added = 0
        self._in_pass = False

    # Propiedades

    @property
    def name(self) -> str:
        return self._name

    @property
    def max_dynamic_nodes(self) -> int:
        return self._max_dynamic_nodes

    @property
    def permanent_nodes(self) -> Dict[str, NodeDef]:
        return dict(self._nodes)

    @property
    def permanent_edges(self) -> FrozenSet[Edge]:
        return frozenset(self._edges)

    @property
    def temp_nodes(self) -> Dict[str, NodeDef]:
        return dict(self._temp_nodes)

    @property
    def temp_edges_added(self) -> FrozenSet[Edge]:
        return frozenset(self._temp_edges_added)

    @property
    def temp_edges_removed(self) -> FrozenSet[Edge]:
        return frozenset(self._temp_edges_removed)

    @property
    def evaluated_this_pass(self) -> FrozenSet[str]:
        return frozenset(self._evaluated)

    @property
    def skipped(self) -> FrozenSet[str]:
        return frozenset(self._skipped)

    @property
    def evaluation_order(self) -> List[str]:
        return list(self._order)

    @property
    def in_pass(self) -> bool:
        return self._in_pass

    @property
    def frontier(self) -> List[str]:
        return list(self._frontier)

    # Vista efectiva

    def node_ids(self) -> List[str]:
        return list(self._nodes) + list(self._temp_nodes)

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes or node_id in self._temp_nodes

    def node(self, node_id: str) -> NodeDef:
        node = self._nodes.get(node_id) or self._temp_nodes.get(node_id)
        if node is None:
            raise UnknownNode(node_id)
        return node

    def edges(self) -> Set[Edge]:
        return (self._edges | self._temp_edges_added) - self._temp_edges_removed

    def has_edge(self, u: str, v: str) -> bool:
        edge = (u, v)
        return (edge in self._edges or edge in self._temp_edges_added) and edge not in self._temp_edges_removed

    def successors(self, node_id: str) -> List[str]:
        return sorted(v for u, v in self.edges() if u == node_id)

    def predecessors(self, node_id: str) -> List[str]:
        return sorted(u for u, v in self.edges() if v == node_id)

    def effective_deps(self, node_id: str) -> List[str]:
        """
        Dependencias vigentes en orden de declaración.

        Las aristas añadidas en la pasada que no figuran en `deps` van al
        final ordenadas por id.
        """
        node = self.node(node_id)
        declared = [d for d in node.deps if self.has_edge(d, node_id)]
        extra = [u for u in self.predecessors(node_id) if u not in node.deps]
        return declared + extra

    def topological_order(self) -> List[str]:
        digraph = nx.DiGraph()
        digraph.add_nodes_from(sorted(self.node_ids()))
        digraph.add_edges_from(self.edges())
        return list(nx.lexicographical_topological_sort(digraph))

    def _ensure_acyclic(self, extra_edges: Iterable[Edge], extra_nodes: Iterable[str] = ()) -> None:
        edges = self.edges() | set(extra_edges)
        cycle = find_cycle(self.node_ids() + list(extra_nodes), edges)
        if cycle is not None:
            raise CycleIntroduced(cycle)

    # Estructura permanente

    def add_node(self, node: NodeDef) -> str:
        with self._lock:
            if self._in_pass:
                raise GraphBusy("add_node")
            if node.temporary:
                raise ValueError("Los nodos temporales solo se añaden con DynamicOp durante una pasada")
            if node.id in self._nodes:
                raise DuplicateId(node.id)
            for dep in node.deps:
                if dep not in self._nodes:
                    raise UnknownDependency(dep, node.id)
            new_edges = {(dep, node.id) for dep in node.deps}
            self._ensure_acyclic(new_edges, [node.id])
            self._nodes[node.id] = node
            self._edges |= new_edges
            logger.debug("Nodo '%s' registrado con deps %s", node.id, list(node.deps))
            return node.id

    def add_edge(self, u: str, v: str) -> None:
        with self._lock:
            if self._in_pass:
                raise GraphBusy("add_edge")
            for node_id in (u, v):
                if node_id not in self._nodes:
                    raise UnknownNode(node_id)
            if (u, v) in self._edges:
                return
            if u == v:
                raise CycleIntroduced([u, u])
            self._ensure_acyclic({(u, v)})
            self._edges.add((u, v))
            target = self._nodes[v]
            self._nodes[v] = NodeDef(
                id=target.id, prompt=target.prompt, deps=target.deps + (u,),
                compose=target.compose, after_query=target.after_query, model=target.model,
            )

    # Ciclo de vida de una pasada

    def begin_pass(self) -> None:
        with self._lock:
            if self._in_pass:
                raise GraphBusy("begin_pass")
            self._reset_overlay()
            self._in_pass = True
            self._in_degree = {node_id: 0 for node_id in self._nodes}
            for _, v in self._edges:
                self._in_degree[v] += 1
            self._frontier = deque(sorted(n for n, d in self._in_degree.items() if d == 0))

    def next_ready(self) -> Optional[str]:
        with self._lock:
            while self._frontier:
                node_id = self._frontier.popleft()
                if node_id not in self._skipped and node_id not in self._evaluated:
                    return node_id
            return None

    def mark_evaluated(self, node_id: str) -> None:
        with self._lock:
            self._evaluated.add(node_id)
            self._order.append(node_id)

    def release(self, node_id: str) -> List[str]:
        """Descuenta el in-degree de los sucesores; devuelve los que pasan a la frontera."""
        released = []
        with self._lock:
            self._released.add(node_id)
            for succ in self.successors(node_id):
                self._in_degree[succ] -= 1
                if self._in_degree[succ] == 0 and succ not in self._skipped and succ not in self._evaluated:
                    self._frontier.append(succ)
                    released.append(succ)
        return released

    def pending(self) -> List[str]:
        return sorted(
            n for n in self.node_ids() if n not in self._evaluated and n not in self._skipped
        )

    def end_pass(self) -> None:
        with self._lock:
            self._reset_overlay()
            self._in_pass = False

    def _reset_overlay(self) -> None:
        self._temp_nodes.clear()
        self._temp_edges_added.clear()
        self._temp_edges_removed.clear()
        self._evaluated.clear()
        self._released.clear()
        self._skipped.clear()
        self._order.clear()
        self._in_degree.clear()
        self._frontier.clear()
        self._dynamic_added = 0

    # Operaciones dinámicas

    def apply_dynamic_op(self, op: DynamicOp) -> OpResult:
        """
        Aplica una operación temporal y devuelve si fue aceptada.

        Los rechazos (salvaguardas, ciclos, ids desconocidos) dejan el grafo
        intacto. Agotar el presupuesto de nodos dinámicos no es un rechazo:
        lanza DynamicBudgetExceeded.
        """
        with self._lock:
            if not self._in_pass:
                raise GraphBusy("apply_dynamic_op fuera de")
            handlers = {
                OpKind.ADD_NODE: self._add_temp_node,
                OpKind.ADD_EDGE: self._add_temp_edge,
                OpKind.REMOVE_EDGE: self._remove_temp_edge,
                OpKind.REMOVE_NODE: self._remove_temp_node,
            }
            try:
                handlers[op.kind](op.payload)
            except DynamicBudgetExceeded:
                raise
            except GraphError as exc:
                reason = f"{type(exc).__name__}: {exc}"
                logger.warning("Operación dinámica rechazada %r: %s", op, reason)
                return OpResult(op=op, accepted=False, reason=reason)
            logger.debug("Operación dinámica aplicada %r", op)
            return OpResult(op=op, accepted=True)

    def _add_temp_node(self, node: NodeDef) -> None:
        if self.has_node(node.id):
            raise DuplicateId(node.id)
        if self._dynamic_added >= self._max_dynamic_nodes:
            raise DynamicBudgetExceeded(self._max_dynamic_nodes)
        for dep in node.deps:
            if not self.has_node(dep):
                raise UnknownDependency(dep, node.id)
            if dep in self._skipped:
                raise DynamicOpRejected(f"La dependencia '{dep}' fue retirada en esta pasada")
        # Un nodo nuevo solo recibe aristas: no puede cerrar un ciclo
        self._temp_nodes[node.id] = node
        for dep in node.deps:
            self._temp_edges_added.add((dep, node.id))
        self._in_degree[node.id] = sum(1 for dep in node.deps if dep not in self._released)
        self._dynamic_added += 1
        if self._in_degree[node.id] == 0:
            self._frontier.append(node.id)

    def _add_temp_edge(self, edge: Edge) -> None:
        u, v = edge
        for node_id in (u, v):
            if not self.has_node(node_id):
                raise UnknownNode(node_id)
        if v in self._evaluated:
            raise RejectedEvaluatedTarget(f"'{v}' ya fue evaluado en esta pasada")
        if u in self._skipped or v in self._skipped:
            raise DynamicOpRejected(f"La arista ({u}, {v}) toca un nodo retirado en esta pasada")
        if self.has_edge(u, v):
            return
        if u == v:
            raise CycleIntroduced([u, u])
        self._ensure_acyclic({(u, v)})
        if (u, v) in self._temp_edges_removed:
            self._temp_edges_removed.discard((u, v))
        else:
            self._temp_edges_added.add((u, v))
        if u not in self._released:
            self._in_degree[v] += 1
            if v in self._frontier:
                self._frontier.remove(v)

    def _detach(self, u: str, v: str) -> None:
        if (u, v) in self._temp_edges_added:
            self._temp_edges_added.discard((u, v))
        else:
            self._temp_edges_removed.add((u, v))

    def _remove_temp_edge(self, edge: Edge) -> None:
        u, v = edge
        if not self.has_edge(u, v):
            raise RejectedUnknownEdge(f"La arista ({u}, {v}) no existe")
        if u in self._evaluated or v in self._evaluated:
            raise RejectedEvaluatedEndpoint(f"La arista ({u}, {v}) toca un nodo ya evaluado")
        self._detach(u, v)
        self._in_degree[v] -= 1
        if self._in_degree[v] == 0 and v not in self._skipped:
            self._frontier.append(v)

    def _remove_temp_node(self, node_id: str) -> None:
        if not self.has_node(node_id):
            raise UnknownNode(node_id)
        if node_id in self._evaluated:
            raise RejectedEvaluatedTarget(f"'{node_id}' ya fue evaluado en esta pasada")
        if node_id in self._skipped:
            return
        for pred in self.predecessors(node_id):
            self._detach(pred, node_id)
        for succ in self.successors(node_id):
            self._detach(node_id, succ)
            self._in_degree[succ] -= 1
            if self._in_degree[succ] == 0 and succ not in self._skipped:
                self._frontier.append(succ)
        self._skipped.add(node_id)
        if node_id in self._frontier:
            self._frontier.remove(node_id)

    # Serialización

    def to_spec(self):
        from .spec_io import GraphSpec
        return GraphSpec(list(self._nodes.values()))

    def __len__(self) -> int:
        return len(self._nodes) + len(self._temp_nodes)

    def __contains__(self, node_id: str) -> bool:
        return self.has_node(node_id)

    def __repr__(self) -> str:
        return (f"Graph(name='{self._name}', nodes={len(self._nodes)}, "
                f"edges={len(self._edges)}, in_pass={self._in_pass})")
