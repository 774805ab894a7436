import logging
import re
from dataclasses import dataclass, fields
from typing import Any, Dict, List, Optional, Sequence

from ..config import GATE_UPDATE_FIELDS, AgentSettings
from ..core.base import DynamicOp, NodeDef
from ..errors import (
    MisconfiguredNodeSet,
    NonPositiveRepeats,
    SchemaViolation,
    UnknownAction,
    UnparseableAnswer,
)
from ..runtime.compose import ACTIVE_SKILL_KEY
from ..runtime.parsing import parse_yes_no
from ..store.history import format_history, load_history, skill_history

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GateDecision:
    unexpected_encounters: bool = False
    mistake: bool = False
    correction_planned: bool = False
    confused: bool = False
    top_subgoal_completed: bool = False
    top_subgoal_changed: bool = False
    replan: bool = False

    def __post_init__(self):
        for f in fields(self):
            if not isinstance(getattr(self, f.name), bool):
                raise ValueError(f"El campo '{f.name}' de GateDecision debe ser booleano")

    @classmethod
    def from_answer(cls, answer: Any) -> "GateDecision":
        if not isinstance(answer, dict):
            raise SchemaViolation("La respuesta del gate debe ser un mapa")
        values = {}
        for f in fields(cls):
            if f.name not in answer:
                raise SchemaViolation(f"Falta el campo '{f.name}' en la respuesta del gate")
            try:
                values[f.name] = parse_yes_no(answer[f.name])
            except UnparseableAnswer as exc:
                raise SchemaViolation(f"'{f.name}': {exc.message}") from exc
        return cls(**values)

    def should_skip(self, skip_fields: Sequence[str] = GATE_UPDATE_FIELDS) -> bool:
        return not any(getattr(self, name) for name in skip_fields)

    def to_dict(self) -> Dict[str, bool]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def gate_branch(decision: GateDecision, graph, settings: AgentSettings) -> List[DynamicOp]:
    """
    Sin ningún indicio de actualización, retira planner y KB de esta pasada.

    Sus salidas anteriores siguen en la base de datos; solo se evita
    volver a consultarlos.
    """
    targets = list(settings.planner_nodes) + list(settings.kb_nodes)
    for node_id in targets:
        if not graph.has_node(node_id):
            raise MisconfiguredNodeSet(node_id)
    if not decision.should_skip(settings.skip_fields):
        return []
    logger.debug("Gate: se omiten %s", targets)
    return [DynamicOp.remove_node(node_id) for node_id in targets]


def conditional_branch(answer: Any, node_yes: NodeDef, node_no: NodeDef,
                       after: Optional[str] = None) -> DynamicOp:
    """add_node de la rama que corresponde a la respuesta, colgada de `after`."""
    chosen = node_yes if parse_yes_no(answer) else node_no
    if after is not None and after not in chosen.deps:
        chosen = NodeDef(
            id=chosen.id, prompt=chosen.prompt, deps=(after,) + chosen.deps,
            compose=chosen.compose, after_query=chosen.after_query, model=chosen.model,
        )
    return DynamicOp.add_node(chosen)


def feedback_due(database, skill: str, step: int, every: int = 3) -> bool:
    """
    True si los pasos con `skill` activo (contando `step`) son múltiplo de `every`.

    Se asume que `skill` es el skill activo en `step`; el historial puede
    incluir o no ese paso.
    """
    steps = {s.step for s in load_history(database) if s.skill == skill and s.step <= step}
    steps.add(step)
    return len(steps) % every == 0


def active_skill(database) -> Optional[str]:
    return database.get(ACTIVE_SKILL_KEY, None) or None


def build_feedback_context(database, skill: str) -> str:
    return format_history(skill_history(database, skill))


_ACTION_CLEAN_RE = re.compile(r"[^a-z0-9_]")
_REPEATS_RE = re.compile(r"\s*(-?\d+)(?:\s*(?:times|steps?|step\(s\)))?\s*\.?\s*", re.I)


def normalize_action_name(raw: Any) -> str:
    text = str(raw).strip().strip("`'\".").lower()
    text = re.sub(r"[\s\-]+", "_", text)
    return _ACTION_CLEAN_RE.sub("", text)


@dataclass(frozen=True)
class ActionCommand:
    action: str
    repeats: int = 1
    hazard: bool = False

    def __post_init__(self):
        if self.repeats < 1:
            raise NonPositiveRepeats(self.repeats)

    def to_dict(self) -> Dict[str, Any]:
        return {"action": self.action, "repeats": self.repeats, "hazard": self.hazard}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ActionCommand":
        return cls(action=data["action"], repeats=int(data.get("repeats", 1)), hazard=bool(data.get("hazard", False)))

    def __str__(self) -> str:
        return f"{self.action} {self.repeats} step(s)"


def _parse_repeats(raw: Any) -> int:
    if isinstance(raw, bool):
        raise SchemaViolation(f"repeats inválido: {raw!r}")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, float):
        if not raw.is_integer():
            raise SchemaViolation(f"repeats debe ser entero: {raw!r}")
        return int(raw)
    match = _REPEATS_RE.fullmatch(str(raw))
    if match is None:
        raise SchemaViolation(f"repeats no es un número entero: {raw!r}")
    return int(match.group(1))


def emit_action(answer: Any, actions: Sequence[str], max_repeats: int = 9) -> ActionCommand:
    if not isinstance(answer, dict) or "action" not in answer:
        raise SchemaViolation("Se esperaba un mapa con 'action', 'repeats' y 'hazard'")
    name = normalize_action_name(answer["action"])
    if name not in actions:
        raise UnknownAction(name)
    repeats = _parse_repeats(answer.get("repeats", 1))
    if repeats < 1:
        raise NonPositiveRepeats(repeats)
    hazard_raw = answer.get("hazard", "no")
    try:
        hazard = parse_yes_no(hazard_raw)
    except UnparseableAnswer as exc:
        raise SchemaViolation(f"'hazard': {exc.message}") from exc
    command = ActionCommand(action=name, repeats=min(repeats, max_repeats), hazard=hazard)
    if hazard:
        logger.info("Acción %s emitida con riesgo señalado", command)
    return command
