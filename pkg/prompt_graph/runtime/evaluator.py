import logging
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Union

from ..config import Settings
from ..core.base import DynamicOp, NodeDef
from ..errors import AfterQueryError, AfterQueryExhausted
from ..models.backend import BackendRouter, CallInfo, Message, ModelBackend, Usage
from .compose import ComposedPrompt, NodeOutput, get_compose
from .hooks import HookContext, HookRegistry, default_registry

logger = logging.getLogger(__name__)

CORRECTIVE_TEMPLATE = (
    "Your previous answer was invalid: {message}. "
    "Answer again following the required format."
)


@dataclass
class NodeEvaluation:
    node_id: str
    composed: Optional[ComposedPrompt] = None
    output: Optional[NodeOutput] = None
    ops: List[DynamicOp] = field(default_factory=list)
    attempts: int = 0
    usage: Usage = field(default_factory=Usage)
    attempt_messages: List[List[Message]] = field(default_factory=list)
    last_answer: Optional[str] = None
    last_error: Optional[str] = None

    @property
    def retries_used(self) -> int:
        return max(0, self.attempts - 1)


def as_router(backend: Union[BackendRouter, ModelBackend]) -> BackendRouter:
    if isinstance(backend, BackendRouter):
        return backend
    return BackendRouter({backend.profile.id: backend}, backend.profile.id)


class NodeRuntime:
    """
    Evalúa un nodo: compose, consulta al modelo y hook after-query con reintentos.

    Cada intento fallido añade al historial la respuesta del modelo y un
    turno correctivo con el mensaje del hook. Las escrituras del hook solo
    llegan a la base de datos cuando el hook termina bien.
    """

    def __init__(self, backend: Union[BackendRouter, ModelBackend],
                 settings: Optional[Settings] = None,
                 registry: Optional[HookRegistry] = None,
                 actions: Sequence[str] = ()):
        self._router = as_router(backend)
        self._settings = settings or Settings()
        self._registry = registry or default_registry()
        self._actions = tuple(actions)

    @property
    def router(self) -> BackendRouter:
        return self._router

    @property
    def settings(self) -> Settings:
        return self._settings

    @property
    def registry(self) -> HookRegistry:
        return self._registry

    @property
    def actions(self):
        return self._actions

    @actions.setter
    def actions(self, value: Sequence[str]) -> None:
        self._actions = tuple(value)

    def evaluate_node(self, node: NodeDef, graph: Any, database,
                      dep_outputs: Sequence[NodeOutput] = (),
                      pass_index: int = 0, step: Optional[int] = None) -> NodeEvaluation:
        evaluation = NodeEvaluation(node.id)
        try:
            self._evaluate(node, graph, database, dep_outputs, pass_index, step, evaluation)
        except Exception as exc:
            exc.evaluation = evaluation
            raise
        return evaluation

    def _evaluate(self, node, graph, database, dep_outputs, pass_index, step,
                  evaluation: NodeEvaluation) -> None:
        limits = self._settings.limits
        hook = self._registry.get(node.after_query) if node.after_query else None
        composed = get_compose(node.compose)(node, dep_outputs, database, limits)
        evaluation.composed = composed
        logger.debug("Nodo '%s' compuesto (%d segmentos)", node.id, len(composed.segments))

        messages = composed.messages()
        call = CallInfo(node_id=node.id, pass_index=pass_index)
        for attempt in range(1, limits.max_retries + 1):
            evaluation.attempts = attempt
            evaluation.attempt_messages.append(list(messages))
            answer, usage = self._router.complete(messages, profile_id=node.model, call=call)
            evaluation.usage = evaluation.usage + usage
            evaluation.last_answer = answer

            if hook is None:
                evaluation.output = NodeOutput(node.id, answer, answer, attempt - 1, evaluation.usage)
                return

            staged = database.stage()
            ctx = HookContext(
                node=node, graph=graph, database=staged, settings=self._settings,
                pass_index=pass_index, step=step, actions=self._actions,
            )
            try:
                result = hook.run(answer, ctx)
            except AfterQueryError as exc:
                staged.discard()
                evaluation.last_error = exc.message
                logger.debug("Nodo '%s' intento %d inválido: %s", node.id, attempt, exc.message)
                messages = messages + [
                    {"role": "assistant", "content": answer},
                    {"role": "user", "content": CORRECTIVE_TEMPLATE.format(message=exc.message)},
                ]
                continue

            staged.commit()
            evaluation.ops = list(result.ops)
            evaluation.output = NodeOutput(node.id, answer, result.parsed, attempt - 1, evaluation.usage)
            logger.debug("Nodo '%s' parseado tras %d intento(s)", node.id, attempt)
            return

        raise AfterQueryExhausted(node.id, evaluation.last_error or "", limits.max_retries)
