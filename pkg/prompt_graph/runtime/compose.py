import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence

from ..config import RuntimeLimits
from ..core.base import NodeDef
from ..errors import UnknownComposeStrategy
from ..models.backend import Message, Usage
from ..store.history import format_history, skill_history, window_history
from ..store.templates import leading_placeholders, render_value, resolve_template

logger = logging.getLogger(__name__)

SEPARATOR = "\n\n"
ACTIVE_SKILL_KEY = "active_skill"


class SegmentSource(Enum):
    DB = "db"
    DEPENDENCY = "dependency"
    OWN_PROMPT = "own_prompt"


@dataclass(frozen=True)
class Segment:
    source: SegmentSource
    text: str
    ref: Optional[str] = None


@dataclass
class NodeOutput:
    node_id: str
    raw_answer: str
    parsed: Any
    retries_used: int = 0
    usage: Usage = field(default_factory=Usage)

    @property
    def text(self) -> str:
        return render_value(self.parsed)


@dataclass
class ComposedPrompt:
    node_id: str
    segments: List[Segment] = field(default_factory=list)
    system: Optional[str] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def rendered_text(self) -> str:
        return SEPARATOR.join(segment.text for segment in self.segments)

    @property
    def sources(self) -> List[SegmentSource]:
        return [segment.source for segment in self.segments]

    def messages(self) -> List[Message]:
        messages: List[Message] = []
        if self.system:
            messages.append({"role": "system", "content": self.system})
        messages.append({"role": "user", "content": self.rendered_text})
        return messages

    def prepend(self, segment: Segment) -> "ComposedPrompt":
        return ComposedPrompt(self.node_id, [segment] + self.segments, self.system, self.warnings)


def dependency_segment(output: NodeOutput) -> Segment:
    return Segment(
        SegmentSource.DEPENDENCY,
        f"Output of subtask '{output.node_id}':\n{output.text}",
        ref=output.node_id,
    )


def compose_default(node: NodeDef, dep_outputs: Sequence[NodeOutput], database,
                    strict: bool = False) -> ComposedPrompt:
    """
    Base de datos, luego dependencias, luego el prompt propio.

    El material de base de datos son las líneas iniciales del prompt que
    contienen solo un placeholder; los placeholders dentro del texto se
    sustituyen en su sitio. Una dependencia retirada en la pasada no
    aparece en `dep_outputs` y simplemente se omite.
    """
    composed = ComposedPrompt(node.id)
    paths, own = leading_placeholders(node.prompt)
    for path in paths:
        value = resolve_template(f"$db.{path}$", database, strict=strict, warnings=composed.warnings)
        composed.segments.append(Segment(SegmentSource.DB, f"{path}:\n{value}", ref=path))
    for output in dep_outputs:
        composed.segments.append(dependency_segment(output))
    own = own.strip("\n") if paths else own
    if own or not paths:
        text = resolve_template(own, database, strict=strict, warnings=composed.warnings)
        composed.segments.append(Segment(SegmentSource.OWN_PROMPT, text))
    return composed


ComposeFn = Callable[[NodeDef, Sequence[NodeOutput], Any, RuntimeLimits], ComposedPrompt]


def _compose_default(node, dep_outputs, database, limits: RuntimeLimits) -> ComposedPrompt:
    return compose_default(node, dep_outputs, database, strict=limits.strict_templates)


def _compose_history_window(node, dep_outputs, database, limits: RuntimeLimits) -> ComposedPrompt:
    composed = compose_default(node, dep_outputs, database, strict=limits.strict_templates)
    window = window_history(database, limits.history_window)
    if not window:
        return composed
    header = f"Gameplay history (last {len(window)} steps):\n"
    return composed.prepend(Segment(SegmentSource.DB, header + format_history(window), ref="history"))


def _compose_skill_feedback(node, dep_outputs, database, limits: RuntimeLimits) -> ComposedPrompt:
    composed = compose_default(node, dep_outputs, database, strict=limits.strict_templates)
    skill = database.get(ACTIVE_SKILL_KEY, None)
    if not skill:
        return composed
    steps = skill_history(database, skill)
    if not steps:
        return composed
    header = f"Steps under skill '{skill}':\n"
    return composed.prepend(Segment(SegmentSource.DB, header + format_history(steps), ref=f"skills.{skill}"))


_COMPOSE: Dict[str, ComposeFn] = {
    "default": _compose_default,
    "history_window": _compose_history_window,
    "skill_feedback": _compose_skill_feedback,
}


def register_compose(name: str, fn: ComposeFn) -> None:
    """Registra una estrategia de compose (por ejemplo una con recuperación RAG)."""
    if not name:
        raise ValueError("El nombre de la estrategia no puede estar vacío")
    _COMPOSE[name] = fn


def has_compose(name: str) -> bool:
    return name in _COMPOSE


def get_compose(name: str) -> ComposeFn:
    fn = _COMPOSE.get(name)
    if fn is None:
        raise UnknownComposeStrategy(name)
    return fn


def compose_strategies() -> List[str]:
    return sorted(_COMPOSE)
