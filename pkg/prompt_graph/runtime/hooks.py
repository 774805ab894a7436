import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

from ..config import Settings
from ..core.base import DynamicOp, NodeDef
from ..errors import UnknownHook
from .parsing import BlockShape, parse_structured_block, parse_yes_no

logger = logging.getLogger(__name__)


@dataclass
class HookContext:
    """Lo que un hook puede ver: el nodo, el grafo (solo lectura) y la base en stage."""
    node: NodeDef
    graph: Any
    database: Any
    settings: Settings
    pass_index: int = 0
    step: Optional[int] = None
    actions: Sequence[str] = ()


@dataclass
class HookResult:
    parsed: Any
    ops: List[DynamicOp] = field(default_factory=list)


class AfterQueryHook(ABC):
    """
    Post-procesado de la respuesta del modelo.

    `run()` devuelve la salida parseada (y opcionalmente DynamicOps) o lanza
    un AfterQueryError cuyo mensaje se le devuelve al modelo en el
    reintento. Las escrituras a `ctx.database` quedan en stage hasta que
    el hook termina bien.
    """

    hook_id: str = ""
    contract: str = ""
    db_effect: str = "ninguno"

    @abstractmethod
    def run(self, answer: str, ctx: HookContext) -> HookResult:
        pass

    def describe(self) -> Dict[str, str]:
        return {"id": self.hook_id, "contract": self.contract, "db_effect": self.db_effect}

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(id='{self.hook_id}')"


class FunctionHook(AfterQueryHook):
    def __init__(self, hook_id: str, fn: Callable[[str, HookContext], Any],
                 contract: str = "", db_effect: str = "ninguno"):
        if not hook_id:
            raise ValueError("El id del hook no puede estar vacío")
        self.hook_id = hook_id
        self.contract = contract
        self.db_effect = db_effect
        self._fn = fn

    def run(self, answer: str, ctx: HookContext) -> HookResult:
        result = self._fn(answer, ctx)
        return result if isinstance(result, HookResult) else HookResult(parsed=result)


class HookRegistry:
    def __init__(self, hooks: Optional[Sequence[AfterQueryHook]] = None):
        self._hooks: Dict[str, AfterQueryHook] = {}
        for hook in hooks or []:
            self.register(hook)

    def register(self, hook: AfterQueryHook) -> AfterQueryHook:
        self._hooks[hook.hook_id] = hook
        return hook

    def hook(self, hook_id: str, contract: str = "", db_effect: str = "ninguno"):
        """Decorador: registra una función `fn(answer, ctx)` como hook."""
        def _decorator(fn):
            self.register(FunctionHook(hook_id, fn, contract, db_effect))
            return fn
        return _decorator

    def get(self, hook_id: str) -> AfterQueryHook:
        hook = self._hooks.get(hook_id)
        if hook is None:
            raise UnknownHook(hook_id)
        return hook

    def has(self, hook_id: str) -> bool:
        return hook_id in self._hooks

    def ids(self) -> List[str]:
        return sorted(self._hooks)

    def copy(self) -> "HookRegistry":
        return HookRegistry(list(self._hooks.values()))

    def __contains__(self, hook_id: str) -> bool:
        return self.has(hook_id)

    def __len__(self) -> int:
        return len(self._hooks)


def _pass_through(answer: str, ctx: HookContext) -> str:
    return answer


def _parse_map(answer: str, ctx: HookContext) -> dict:
    return parse_structured_block(answer, BlockShape.MAP)


def _parse_yes_no(answer: str, ctx: HookContext) -> bool:
    return parse_yes_no(answer)


_DEFAULT: Optional[HookRegistry] = None


def default_registry() -> HookRegistry:
    """Registro compartido con todos los hooks integrados."""
    global _DEFAULT
    if _DEFAULT is None:
        registry = HookRegistry()
        registry.register(FunctionHook("pass_through", _pass_through, "texto libre"))
        registry.register(FunctionHook("parse_map", _parse_map, "un mapa JSON"))
        registry.register(FunctionHook("parse_yes_no", _parse_yes_no, "token yes/no"))
        from ..agent.builtin_hooks import register_builtin_hooks
        register_builtin_hooks(registry)
        _DEFAULT = registry
    return _DEFAULT
