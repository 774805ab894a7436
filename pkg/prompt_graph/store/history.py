import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ..errors import DatabaseShapeError, UnknownSkill
from .templates import render_value

logger = logging.getLogger(__name__)

HISTORY_KEY = "history"

# Categorías del análisis de acciones por skill
ACTION_CATEGORIES = {
    "Move": ("move_",),
    "Do": ("do",),
    "Craft": ("place_", "make_"),
}


@dataclass
class StepSummary:
    """Resumen de un paso: observación, plan y acción resumidos + skill activo."""
    step: int
    s_obs: str = ""
    s_plan: str = ""
    s_action: Dict[str, Any] = field(default_factory=dict)
    skill: Optional[str] = None

    def to_context(self) -> str:
        return (
            f"Step {self.step}:\n"
            f"Observation: {self.s_obs}\n"
            f"Plan: {self.s_plan}\n"
            f"Action: {render_value(self.s_action)}"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "step": self.step,
            "s_obs": self.s_obs,
            "s_plan": self.s_plan,
            "s_action": dict(self.s_action),
            "skill": self.skill,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StepSummary":
        return cls(
            step=int(data["step"]),
            s_obs=data.get("s_obs", ""),
            s_plan=data.get("s_plan", ""),
            s_action=dict(data.get("s_action") or {}),
            skill=data.get("skill"),
        )


def load_history(database) -> List[StepSummary]:
    return [StepSummary.from_dict(item) for item in database.get(HISTORY_KEY, [])]


def append_step(database, summary: StepSummary, cap: int = 1000) -> None:
    history = database.get(HISTORY_KEY, [])
    if history and summary.step <= history[-1]["step"]:
        raise DatabaseShapeError(
            f"Los pasos del historial deben ser crecientes: {summary.step} <= {history[-1]['step']}"
        )
    database.append(HISTORY_KEY, summary.to_dict(), cap=cap)


def patch_step_action(database, step: int, s_action: Dict[str, Any]) -> bool:
    """Completa el resumen de acción de un paso ya registrado (merge de claves)."""
    history = database.get(HISTORY_KEY, [])
    for index in range(len(history) - 1, -1, -1):
        if history[index]["step"] == step:
            updated = list(history)
            merged = {**history[index].get("s_action", {}), **s_action}
            updated[index] = {**history[index], "s_action": merged}
            database.set(HISTORY_KEY, updated)
            return True
    return False


def window_history(database, window: int = 25) -> List[StepSummary]:
    if window < 1:
        raise ValueError("La ventana de historial debe ser al menos 1")
    history = load_history(database)
    return history[-window:]


def skill_history(database, skill: str) -> List[StepSummary]:
    if skill not in database.get("skills", {}):
        raise UnknownSkill(skill)
    return [summary for summary in load_history(database) if summary.skill == skill]


def format_history(summaries: List[StepSummary]) -> str:
    return "\n\n".join(summary.to_context() for summary in summaries)


def action_category(action: str) -> str:
    for category, prefixes in ACTION_CATEGORIES.items():
        if any(action == p or (p.endswith("_") and action.startswith(p)) for p in prefixes):
            return category
    return "Other"


def action_category_counts(summaries: List[StepSummary]) -> Dict[str, Dict[str, int]]:
    """
    Conteo de acciones por skill y categoría (Move / Do / Craft / Other).

    Cada paso cuenta sus repeticiones: un `do` repetido 3 veces suma 3.
    """
    counts: Dict[str, Counter] = {}
    for summary in summaries:
        action = summary.s_action.get("action")
        if not action:
            continue
        skill = summary.skill or "none"
        repeats = int(summary.s_action.get("repeats", 1) or 1)
        counts.setdefault(skill, Counter())[action_category(action)] += repeats
    return {skill: dict(counter) for skill, counter in counts.items()}
