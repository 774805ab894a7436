import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

logger = logging.getLogger(__name__)

ASSETS_DIR = Path(__file__).parent / "assets"

GATE_UPDATE_FIELDS = (
    "unexpected_encounters",
    "mistake",
    "confused",
    "top_subgoal_completed",
    "top_subgoal_changed",
    "replan",
)


@dataclass
class RuntimeLimits:
    max_retries: int = 3
    strict_templates: bool = False
    max_dynamic_nodes: int = 64
    max_repeats: int = 9
    history_window: int = 25
    history_cap: int = 1000
    max_steps: int = 50

    def __post_init__(self):
        if self.max_retries < 1:
            raise ValueError("max_retries debe ser al menos 1")
        if self.max_dynamic_nodes < 0:
            raise ValueError("max_dynamic_nodes no puede ser negativo")
        if self.max_repeats < 1:
            raise ValueError("max_repeats debe ser al menos 1")
        if self.history_window < 1:
            raise ValueError("history_window debe ser al menos 1")
        if self.history_cap < 1:
            raise ValueError("history_cap debe ser al menos 1")
        if self.max_steps < 0:
            raise ValueError("max_steps no puede ser negativo")

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class BranchRule:
    """Rama condicional sí/no: el hook `yes_no_branch` añade uno de los dos nodos."""
    yes_id: str
    yes_prompt: str
    no_id: str
    no_prompt: str
    before: List[str] = field(default_factory=list)


@dataclass
class AgentSettings:
    gate_node: str = "gate"
    planner_nodes: List[str] = field(default_factory=list)
    kb_nodes: List[str] = field(default_factory=list)
    skip_fields: Tuple[str, ...] = GATE_UPDATE_FIELDS
    obs_summary_nodes: List[str] = field(default_factory=list)
    plan_summary_node: Optional[str] = None
    action_summary_node: Optional[str] = None
    action_node: str = "actor-final"
    feedback_node: str = "feedback"
    feedback_prompt: str = ""
    feedback_every: int = 3
    branches: Dict[str, BranchRule] = field(default_factory=dict)

    def __post_init__(self):
        self.skip_fields = tuple(self.skip_fields)
        if self.feedback_every < 1:
            raise ValueError("feedback_every debe ser al menos 1")
        unknown = set(self.skip_fields) - set(GATE_UPDATE_FIELDS) - {"correction_planned"}
        if unknown:
            raise ValueError(f"Campos de gate desconocidos: {sorted(unknown)}")
        self.branches = {
            node_id: rule if isinstance(rule, BranchRule) else BranchRule(**rule)
            for node_id, rule in self.branches.items()
        }


@dataclass
class Settings:
    limits: RuntimeLimits = field(default_factory=RuntimeLimits)
    agent: AgentSettings = field(default_factory=AgentSettings)


def _build(cls, data: Optional[Dict[str, Any]], section: str):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ValueError(f"Claves desconocidas en la sección '{section}': {sorted(extra)}")
    return cls(**data)


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    # Sin ruta se usan los valores por defecto de la configuración empaquetada
    path = Path(path) if path else ASSETS_DIR / "config" / "agent.yaml"
    with open(path, encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}

    extra = set(raw) - {"limits", "agent"}
    if extra:
        raise ValueError(f"Secciones desconocidas en {path}: {sorted(extra)}")

    settings = Settings(
        limits=_build(RuntimeLimits, raw.get("limits"), "limits"),
        agent=_build(AgentSettings, raw.get("agent"), "agent"),
    )
    logger.debug("Configuración cargada desde %s", path)
    return settings
