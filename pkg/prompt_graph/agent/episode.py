import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..config import Settings
from ..core.graph import Graph
from ..core.traversal import run_pass
from ..errors import EpisodeError, NodeEvaluationFailed, PromptGraphError
from ..models.backend import Usage
from ..runtime.evaluator import NodeRuntime
from ..runtime.hooks import HookRegistry
from ..store.database import Database
from ..store.history import StepSummary, append_step, load_history
from ..store.templates import render_value
from ..store.trace import PassTrace, export_trace, record_trace
from .knowledge import KnowledgeState
from .patterns import ActionCommand, active_skill

logger = logging.getLogger(__name__)


@dataclass
class EpisodeResult:
    steps: int = 0
    total_reward: float = 0.0
    achievements: List[str] = field(default_factory=list)
    knowledge: KnowledgeState = field(default_factory=KnowledgeState)
    traces: List[PassTrace] = field(default_factory=list)
    actions: List[ActionCommand] = field(default_factory=list)
    history: List[StepSummary] = field(default_factory=list)
    done: bool = False
    failure: Optional[str] = None

    @property
    def usage(self) -> Usage:
        total = Usage()
        for trace in self.traces:
            total = total + trace.usage
        return total

    @property
    def model_calls(self) -> int:
        return sum(entry.attempts for trace in self.traces for entry in trace.entries)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "steps": self.steps,
            "total_reward": self.total_reward,
            "achievements": list(self.achievements),
            "knowledge": self.knowledge.to_dict(),
            "actions": [action.to_dict() for action in self.actions],
            "history": [summary.to_dict() for summary in self.history],
            "passes": [trace.to_dict() for trace in self.traces],
            "usage": self.usage.to_dict(),
            "done": self.done,
            "failure": self.failure,
        }

    def __repr__(self) -> str:
        return (f"EpisodeResult(steps={self.steps}, reward={self.total_reward}, "
                f"kb={len(self.knowledge.kb)}, tokens={self.usage.total_tokens})")


def _node_text(trace: PassTrace, node_id: Optional[str]) -> str:
    entry = trace.entry(node_id) if node_id else None
    if entry is None or entry.failed:
        return ""
    return render_value(entry.parsed)


def _write_observation(database: Database, observation: str, previous: str, step: int,
                       last_action: str) -> None:
    database.set("environment.observation", observation)
    database.set("environment.previous_observation", previous)
    database.set("environment.step", step)
    database.set("environment.last_action", last_action)


def run_episode(graph: Graph, env, backend, database: Optional[Database] = None,
                settings: Optional[Settings] = None, seed: int = 0,
                max_steps: Optional[int] = None, registry: Optional[HookRegistry] = None,
                trace_path: Optional[Union[str, Path]] = None) -> EpisodeResult:
    """
    Bucle de episodio: una pasada del grafo por paso del entorno.

    En cada paso T se escriben la observación y el manual en la base de
    datos, se recorre el grafo, se toma el ActionCommand del nodo de acción
    y se aplica con sus repeticiones. El resumen del paso (observación,
    plan, acción y skill activo) se agrega al historial.

    Si un nodo falla, NodeEvaluationFailed se propaga con el resultado
    parcial en `partial_result`; los errores del entorno se envuelven en
    EpisodeError.
    """
    settings = settings or Settings()
    agent = settings.agent
    limits = settings.limits
    max_steps = limits.max_steps if max_steps is None else max_steps
    if max_steps < 0:
        raise ValueError("max_steps no puede ser negativo")
    database = database if database is not None else Database()
    result = EpisodeResult()
    if trace_path is not None:
        export_trace([], trace_path)
    if max_steps == 0:
        result.knowledge = KnowledgeState.from_database(database)
        return result

    runtime = NodeRuntime(backend, settings=settings, registry=registry, actions=env.actions)
    database.set("instruction_manual", env.manual)
    database.set("allowed_actions", ", ".join(env.actions))

    def _finish() -> EpisodeResult:
        result.knowledge = KnowledgeState.from_database(database)
        result.history = load_history(database)
        return result

    try:
        observation = env.reset(seed)
    except (PromptGraphError, OSError) as exc:
        raise EpisodeError(f"El entorno falló al reiniciar: {exc}", _finish(), exc) from exc

    previous, last_action = "", ""
    for step in range(1, max_steps + 1):
        _write_observation(database, observation, previous, step, last_action)

        try:
            trace = run_pass(graph, runtime, database, pass_index=step, step=step)
        except NodeEvaluationFailed as exc:
            partial = getattr(exc, "trace", None)
            if partial is not None:
                result.traces.append(partial)
                if trace_path is not None:
                    record_trace(partial, trace_path)
            result.failure = f"{exc.node_id}: {exc.cause}"
            exc.partial_result = _finish()
            raise
        result.traces.append(trace)
        if trace_path is not None:
            record_trace(trace, trace_path)

        entry = trace.entry(agent.action_node)
        if entry is None or not isinstance(entry.parsed, dict):
            result.failure = f"el nodo de acción '{agent.action_node}' no produjo un comando"
            raise EpisodeError(result.failure, _finish())
        command = ActionCommand.from_dict(entry.parsed)
        skill = active_skill(database)

        try:
            outcome = env.step(command.action, command.repeats)
        except (PromptGraphError, OSError) as exc:
            result.failure = f"entorno: {exc}"
            raise EpisodeError(f"El entorno falló en el paso {step}: {exc}", _finish(), exc) from exc

        info = outcome.info
        result.steps = step
        result.actions.append(command)
        result.total_reward += outcome.reward
        result.achievements = list(info.get("achievements", result.achievements))
        result.done = outcome.done

        append_step(database, StepSummary(
            step=step,
            s_obs="\n".join(filter(None, (_node_text(trace, n) for n in agent.obs_summary_nodes))),
            s_plan=_node_text(trace, agent.plan_summary_node),
            s_action={
                "action": command.action,
                "repeats": command.repeats,
                "applied": info.get("applied", command.repeats),
                "failed": bool(info.get("failed", False)),
                "message": info.get("message", ""),
                "reward": outcome.reward,
            },
            skill=skill,
        ), cap=limits.history_cap)

        knowledge = KnowledgeState.from_database(database)
        if not knowledge.is_consistent:
            result.failure = "hay items a la vez en 'kb' y en 'unknown'"
            raise EpisodeError(result.failure, _finish())

        logger.info("Paso %d: %s -> recompensa %.1f (%s)", step, command, outcome.reward,
                    info.get("message", ""))
        previous, last_action = observation, str(command)
        observation = outcome.observation
        if outcome.done:
            break

    return _finish()
