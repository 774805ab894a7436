import logging
from typing import Dict, Optional

from ..errors import DynamicBudgetExceeded, NodeEvaluationFailed, StalledTraversal
from ..store.trace import PassTrace, TraceEntry
from .graph import Graph

logger = logging.getLogger(__name__)


def _failed_entry(node_id: str, exc: BaseException) -> TraceEntry:
    partial = getattr(exc, "evaluation", None)
    entry = TraceEntry(node_id=node_id, status="failed", error=f"{type(exc).__name__}: {exc}")
    if partial is not None:
        entry.composed = partial.composed.rendered_text if partial.composed else None
        entry.raw_answer = partial.last_answer
        entry.attempts = partial.attempts
        entry.retries = partial.retries_used
        entry.usage = partial.usage
    return entry


def run_pass(graph: Graph, runtime, database, pass_index: int = 0,
             step: Optional[int] = None) -> PassTrace:
    """
    Una pasada completa en orden de Kahn sobre el grafo efectivo.

    Tras evaluar un nodo se marca como evaluado, se aplican sus DynamicOps
    (los rechazos quedan en la traza) y recién entonces se liberan sus
    sucesores. Pase lo que pase, el overlay temporal se revierte al final.
    Un fallo de nodo aborta la pasada con NodeEvaluationFailed; la traza
    parcial queda en el atributo `trace` de la excepción.
    """
    trace = PassTrace(pass_index=pass_index, step=step)
    outputs: Dict[str, object] = {}
    graph.begin_pass()
    try:
        while True:
            node_id = graph.next_ready()
            if node_id is None:
                break
            node = graph.node(node_id)
            dep_outputs = [outputs[d] for d in graph.effective_deps(node_id) if d in outputs]
            try:
                evaluation = runtime.evaluate_node(
                    node, graph, database, dep_outputs, pass_index=pass_index, step=step,
                )
            except Exception as exc:
                trace.add(_failed_entry(node_id, exc))
                raise NodeEvaluationFailed(node_id, exc) from exc

            graph.mark_evaluated(node_id)
            results = []
            for op in evaluation.ops:
                try:
                    results.append(graph.apply_dynamic_op(op))
                except DynamicBudgetExceeded as exc:
                    raise NodeEvaluationFailed(node_id, exc) from exc

            output = evaluation.output
            outputs[node_id] = output
            trace.add(TraceEntry(
                node_id=node_id,
                composed=evaluation.composed.rendered_text,
                raw_answer=output.raw_answer,
                parsed=output.parsed,
                retries=output.retries_used,
                attempts=evaluation.attempts,
                usage=evaluation.usage,
                ops=results,
            ))
            graph.release(node_id)

        pending = graph.pending()
        if pending:
            raise StalledTraversal(pending)
    except NodeEvaluationFailed as exc:
        trace.abort(exc.node_id, exc.cause)
        exc.trace = trace
        logger.error("Pasada %d abortada en el nodo '%s': %s", pass_index, exc.node_id, exc.cause)
        raise
    finally:
        graph.end_pass()

    logger.info("Pasada %d completa: %d nodos, %d tokens", pass_index, len(trace), trace.total_tokens)
    return trace
