from .base import (
    Edge,
    NodeDef,
    OpKind,
    DynamicOp,
    OpResult,
)

from .graph import Graph, find_cycle

from .spec_io import (
    GraphSpec,
    Finding,
    ValidationReport,
    build_graph,
    load_graph,
    validate,
)

# run_pass vive en core.traversal; no se importa aquí porque store.trace depende de core.base

__all__ = [
    # Estructuras del grafo
    'Edge',
    'NodeDef',
    'OpKind',
    'DynamicOp',
    'OpResult',
    'Graph',
    'find_cycle',

    # Archivo de grafo y validación
    'GraphSpec',
    'Finding',
    'ValidationReport',
    'build_graph',
    'load_graph',
    'validate',
]
