import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..errors import AmbiguousScriptMatch, StorageFailure, UnmatchedScriptCall
from .backend import BackendProfile, CallInfo, Message, ModelBackend, Usage

logger = logging.getLogger(__name__)


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class ScriptRule:
    """
    Regla del guion: restricciones opcionales -> respuesta fija.

    `ordinal` cuenta las llamadas del mismo nodo dentro de la misma pasada
    (1 = primer intento, 2 = primer reintento, ...).
    """
    response: str
    node: Optional[str] = None
    pass_index: Optional[int] = None
    ordinal: Optional[int] = None
    contains: Optional[str] = None

    @property
    def specificity(self) -> int:
        return sum(c is not None for c in (self.node, self.pass_index, self.ordinal, self.contains))

    def matches(self, call: CallInfo, ordinal: int, text: str) -> bool:
        if self.node is not None and self.node != call.node_id:
            return False
        if self.pass_index is not None and self.pass_index != call.pass_index:
            return False
        if self.ordinal is not None and self.ordinal != ordinal:
            return False
        if self.contains is not None and self.contains not in text:
            return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {}
        if self.node is not None:
            data["node"] = self.node
        if self.pass_index is not None:
            data["pass"] = self.pass_index
        if self.ordinal is not None:
            data["ordinal"] = self.ordinal
        if self.contains is not None:
            data["contains"] = self.contains
        data["response"] = self.response
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScriptRule":
        response = data["response"]
        if not isinstance(response, str):
            response = json.dumps(response, ensure_ascii=False)
        return cls(
            response=response,
            node=data.get("node"),
            pass_index=data.get("pass"),
            ordinal=data.get("ordinal"),
            contains=data.get("contains"),
        )


class Script:
    def __init__(self, rules: List[ScriptRule], name: str = "script"):
        self._rules = list(rules)
        self._name = name

    @property
    def rules(self) -> List[ScriptRule]:
        return list(self._rules)

    @property
    def name(self) -> str:
        return self._name

    def match(self, call: CallInfo, ordinal: int, text: str) -> ScriptRule:
        """La regla más específica gana; un empate en el máximo es ambiguo."""
        candidates = [rule for rule in self._rules if rule.matches(call, ordinal, text)]
        if not candidates:
            raise UnmatchedScriptCall(
                f"Ninguna regla del guion '{self._name}' cubre la llamada "
                f"(nodo={call.node_id}, pasada={call.pass_index}, ordinal={ordinal})"
            )
        best = max(rule.specificity for rule in candidates)
        winners = [rule for rule in candidates if rule.specificity == best]
        if len(winners) > 1:
            raise AmbiguousScriptMatch(
                f"{len(winners)} reglas empatan para nodo={call.node_id}, "
                f"pasada={call.pass_index}, ordinal={ordinal}"
            )
        return winners[0]

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self._name, "rules": [rule.to_dict() for rule in self._rules]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Script":
        return cls([ScriptRule.from_dict(r) for r in data.get("rules", [])], name=data.get("name", "script"))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Script":
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except OSError as exc:
            raise StorageFailure(f"No se pudo leer el guion {path}: {exc}") from exc
        return cls.from_dict(data)

    def __len__(self) -> int:
        return len(self._rules)


class ScriptedBackend(ModelBackend):
    """Modelo determinista: cada llamada se resuelve contra el guion."""

    def __init__(self, profile: BackendProfile, script: Script):
        super().__init__(profile)
        self._script = script
        self._ordinals: Dict[Tuple[Optional[str], Optional[int]], int] = defaultdict(int)
        self._log: List[Dict[str, Any]] = []

    @property
    def script(self) -> Script:
        return self._script

    @property
    def call_log(self) -> List[Dict[str, Any]]:
        return list(self._log)

    def reset(self) -> None:
        self._ordinals.clear()
        self._log.clear()
        self.reset_stats()

    def _complete(self, messages: List[Message], call: CallInfo) -> Tuple[str, Usage]:
        key = (call.node_id, call.pass_index)
        self._ordinals[key] += 1
        ordinal = self._ordinals[key]
        text = "\n".join(message["content"] for message in messages)

        rule = self._script.match(call, ordinal, text)
        self._log.append({"node": call.node_id, "pass": call.pass_index, "ordinal": ordinal})
        logger.debug("Guion: nodo=%s pasada=%s ordinal=%d", call.node_id, call.pass_index, ordinal)
        usage = Usage(prompt_tokens=estimate_tokens(text), completion_tokens=estimate_tokens(rule.response))
        return rule.response, usage
