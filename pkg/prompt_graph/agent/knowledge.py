import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from ..errors import SchemaViolation, UnparseableAnswer
from ..runtime.parsing import parse_yes_no

logger = logging.getLogger(__name__)

KB_COMMIT_FLAGS = ("discovered", "general", "unknown", "concrete_and_precise", "solid")
UNKNOWN_FILTER_FLAGS = ("novel", "relevant")


def _flag(record: Dict[str, Any], name: str, default: bool) -> bool:
    if name not in record:
        return default
    try:
        return parse_yes_no(record[name])
    except UnparseableAnswer as exc:
        raise SchemaViolation(f"El campo '{name}' debe ser yes/no: {exc.message}") from exc


def _items(answer: Any) -> List[Tuple[str, Dict[str, Any]]]:
    if not isinstance(answer, dict):
        raise SchemaViolation("Se esperaba un mapa nombre -> respuestas")
    items = []
    for name, record in answer.items():
        if not isinstance(record, dict):
            raise SchemaViolation(f"El item '{name}' debe ser un mapa de respuestas")
        items.append((str(name), record))
    return items


@dataclass
class KnowledgeState:
    """Lista de información desconocida y base de conocimiento."""
    unknown: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    kb: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for name, value in self.kb.items():
            if not isinstance(value, str) or not value.strip():
                raise ValueError(f"La entrada '{name}' de la base de conocimiento está vacía")

    @property
    def is_consistent(self) -> bool:
        return not (set(self.kb) & set(self.unknown))

    @classmethod
    def from_database(cls, database) -> "KnowledgeState":
        return cls(unknown=dict(database.get("unknown", {})), kb=dict(database.get("kb", {})))

    def to_database(self, database) -> None:
        database.set("unknown", dict(self.unknown))
        database.set("kb", dict(self.kb))

    def to_dict(self) -> Dict[str, Any]:
        return {"unknown": dict(self.unknown), "kb": dict(self.kb)}


def kb_commit(answer: Any, state: KnowledgeState) -> KnowledgeState:
    """
    Pasa a la KB los items con los cinco flags en yes.

    El valor es `discovery_short`. Una entrada existente de la KB nunca se
    sobreescribe; el resto de los items queda como estaba.
    """
    unknown = dict(state.unknown)
    kb = dict(state.kb)
    for name, record in _items(answer):
        if not all(_flag(record, flag, False) for flag in KB_COMMIT_FLAGS):
            continue
        value = str(record.get("discovery_short") or "").strip()
        if not value or value.upper() in ("NA", "N/A"):
            continue
        if name in kb:
            continue
        kb[name] = value
        unknown.pop(name, None)
        logger.info("KB: '%s' = %s", name, value)
    return KnowledgeState(unknown=unknown, kb=kb)


def unknown_merge(answer: Any, state: KnowledgeState) -> KnowledgeState:
    unknown = dict(state.unknown)
    for name, record in _items(answer):
        if not all(_flag(record, flag, True) for flag in UNKNOWN_FILTER_FLAGS):
            continue
        if name in state.kb or name in unknown:
            continue
        unknown[name] = dict(record)
    return KnowledgeState(unknown=unknown, kb=dict(state.kb))


@dataclass
class SkillEntry:
    name: str
    description: str = ""
    parameters: Any = ""
    guide: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValueError("El skill necesita un nombre")

    def to_dict(self) -> Dict[str, Any]:
        return {"description": self.description, "parameters": self.parameters, "guide": self.guide}

    @classmethod
    def from_dict(cls, name: str, data: Any) -> "SkillEntry":
        if isinstance(data, str):
            return cls(name=name, description=data)
        if isinstance(data, list):
            padded = list(data) + ["", "", ""]
            return cls(name=name, description=str(padded[0]), parameters=padded[1], guide=str(padded[2]))
        if isinstance(data, dict):
            return cls(name=name, description=str(data.get("description", "")),
                       parameters=data.get("parameters", ""), guide=str(data.get("guide", "")))
        raise SchemaViolation(f"Formato de skill inválido para '{name}'")

    @classmethod
    def from_answer(cls, answer: Any) -> "SkillEntry":
        if not isinstance(answer, dict) or len(answer) != 1:
            raise SchemaViolation("Se esperaba un único skill {nombre: [descripción, parámetros, guía]}")
        name, data = next(iter(answer.items()))
        return cls.from_dict(str(name), data)


def select_skill(library: Dict[str, Any], entry: SkillEntry) -> Tuple[Dict[str, Any], SkillEntry, bool]:
    """Recupera por nombre exacto o crea el skill. Devuelve (biblioteca, skill, creado)."""
    if entry.name in library:
        return dict(library), SkillEntry.from_dict(entry.name, library[entry.name]), False
    updated = dict(library)
    updated[entry.name] = entry.to_dict()
    return updated, entry, True
