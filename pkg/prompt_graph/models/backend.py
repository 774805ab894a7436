import logging
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from ..config import ASSETS_DIR
from ..errors import UnknownModelRate, UnknownProfile
from .pricing import PriceTable, estimate_cost

logger = logging.getLogger(__name__)

Message = Dict[str, str]

BASE_URL_ENV = "PROMPT_GRAPH_BASE_URL"


class ProfileKind(Enum):
    SCRIPTED = "scripted"
    HTTP = "http"


@dataclass
class RetryPolicy:
    max_attempts: int = 3
    backoff_initial: float = 0.5
    backoff_max: float = 8.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts debe ser al menos 1")
        if self.backoff_initial < 0 or self.backoff_max < 0:
            raise ValueError("Los tiempos de espera no pueden ser negativos")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "max_attempts": self.max_attempts,
            "backoff_initial": self.backoff_initial,
            "backoff_max": self.backoff_max,
        }


@dataclass
class BackendProfile:
    id: str
    kind: ProfileKind = ProfileKind.SCRIPTED
    endpoint: Optional[str] = None
    model: str = "scripted"
    temperature: float = 0.0
    max_tokens: int = 512
    timeout: float = 30.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    requests_per_minute: Optional[int] = None
    description: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = ProfileKind(self.kind)
        if isinstance(self.retry, dict):
            self.retry = RetryPolicy(**self.retry)
        if self.temperature < 0:
            raise ValueError("La temperatura no puede ser negativa")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens debe ser positivo")
        if self.timeout <= 0:
            raise ValueError("El timeout debe ser positivo")
        if self.kind is ProfileKind.HTTP and not self.endpoint:
            raise ValueError(f"El perfil http '{self.id}' necesita un endpoint")
        if self.description is None:
            self.description = self._generate_description()

    def _generate_description(self) -> str:
        parts = [self.kind.value.upper(), self.model]
        if self.endpoint:
            parts.append(self.endpoint)
        parts.append(f"T={self.temperature}")
        if self.requests_per_minute:
            parts.append(f"{self.requests_per_minute} req/min")
        return " - ".join(parts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "endpoint": self.endpoint,
            "model": self.model,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "timeout": self.timeout,
            "retry": self.retry.to_dict(),
            "requests_per_minute": self.requests_per_minute,
            "description": self.description,
        }

    def __repr__(self) -> str:
        return f"BackendProfile(id='{self.id}', kind={self.kind.value}, model='{self.model}')"


@dataclass
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    cost: float = 0.0

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0 or self.cost < 0:
            raise ValueError("Los conteos de uso no pueden ser negativos")

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def __add__(self, other: "Usage") -> "Usage":
        return Usage(
            prompt_tokens=self.prompt_tokens + other.prompt_tokens,
            completion_tokens=self.completion_tokens + other.completion_tokens,
            cost=self.cost + other.cost,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "cost": self.cost,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Usage":
        return cls(
            prompt_tokens=int(data.get("prompt_tokens", 0)),
            completion_tokens=int(data.get("completion_tokens", 0)),
            cost=float(data.get("cost", 0.0)),
        )


@dataclass(frozen=True)
class CallInfo:
    """Contexto de una llamada: qué nodo pregunta y en qué pasada."""
    node_id: Optional[str] = None
    pass_index: Optional[int] = None


@dataclass
class BackendStats:
    calls: int = 0
    retries: int = 0
    failures: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    @property
    def failure_rate(self) -> float:
        if self.calls == 0:
            return 0.0
        return self.failures / self.calls

    def record(self, usage: Usage) -> None:
        self.prompt_tokens += usage.prompt_tokens
        self.completion_tokens += usage.completion_tokens

    def to_dict(self) -> Dict[str, Any]:
        return {
            "calls": self.calls,
            "retries": self.retries,
            "failures": self.failures,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "total_tokens": self.total_tokens,
            "failure_rate": self.failure_rate,
        }


class ModelBackend(ABC):
    """
    Interfaz común de los modelos.

    `complete()` valida los mensajes, delega en `_complete()` y lleva las
    estadísticas; las subclases solo implementan la llamada concreta.
    """

    def __init__(self, profile: BackendProfile):
        self._profile = profile
        self._stats = BackendStats()

    @property
    def profile(self) -> BackendProfile:
        return self._profile

    @property
    def stats(self) -> BackendStats:
        return self._stats

    def complete(self, messages: List[Message],
                 call: Optional[CallInfo] = None) -> Tuple[str, Usage]:
        if not messages:
            raise ValueError("La lista de mensajes no puede estar vacía")
        self._stats.calls += 1
        try:
            text, usage = self._complete(messages, call or CallInfo())
        except Exception:
            self._stats.failures += 1
            raise
        self._stats.record(usage)
        return text, usage

    def reset_stats(self) -> None:
        self._stats = BackendStats()

    @abstractmethod
    def _complete(self, messages: List[Message], call: CallInfo) -> Tuple[str, Usage]:
        pass

    def close(self) -> None:
        pass

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(profile='{self._profile.id}', calls={self._stats.calls})"


class BackendRouter:
    """
    Resuelve el perfil de cada nodo ("default" o un id) y anota el costo.

    Un modelo sin tarifa en la tabla de precios cuesta 0 y deja un aviso.
    """

    def __init__(self, backends: Dict[str, ModelBackend], default_profile: str,
                 prices: Optional[PriceTable] = None):
        if default_profile not in backends:
            raise UnknownProfile(default_profile)
        self._backends = dict(backends)
        self._default = default_profile
        self._prices = prices or PriceTable()
        self._warned: set = set()

    @property
    def default_profile(self) -> str:
        return self._default

    @property
    def profiles(self) -> List[str]:
        return list(self._backends)

    @property
    def prices(self) -> PriceTable:
        return self._prices

    def resolve(self, profile_id: str = "default") -> ModelBackend:
        key = self._default if profile_id == "default" else profile_id
        backend = self._backends.get(key)
        if backend is None:
            raise UnknownProfile(profile_id)
        return backend

    def has_profile(self, profile_id: str) -> bool:
        return profile_id == "default" or profile_id in self._backends

    def complete(self, messages: List[Message], profile_id: str = "default",
                 call: Optional[CallInfo] = None) -> Tuple[str, Usage]:
        backend = self.resolve(profile_id)
        text, usage = backend.complete(messages, call=call)
        model = backend.profile.model
        try:
            cost = estimate_cost(usage, self._prices, model)
        except UnknownModelRate:
            if model not in self._warned:
                logger.warning("Modelo '%s' sin tarifa; se registra costo 0", model)
                self._warned.add(model)
            cost = 0.0
        return text, Usage(usage.prompt_tokens, usage.completion_tokens, cost)

    def stats(self) -> Dict[str, Dict[str, Any]]:
        return {profile_id: backend.stats.to_dict() for profile_id, backend in self._backends.items()}

    def total_calls(self) -> int:
        return sum(backend.stats.calls for backend in self._backends.values())

    def close(self) -> None:
        for backend in self._backends.values():
            backend.close()


def create_backend(profile: BackendProfile, **kwargs) -> ModelBackend:
    from .http_client import HTTPBackend
    from .scripted import ScriptedBackend

    backend_classes = {
        ProfileKind.SCRIPTED: ScriptedBackend,
        ProfileKind.HTTP: HTTPBackend,
    }
    backend_class = backend_classes.get(profile.kind)
    if backend_class is None:
        raise ValueError(f"Tipo de perfil desconocido: {profile.kind}")
    return backend_class(profile, **kwargs)


def load_backend_config(path: Optional[Union[str, Path]] = None,
                        script: Any = None,
                        default_profile: Optional[str] = None) -> BackendRouter:
    """
    Construye el router a partir del YAML de backends.

    `script` (ruta o Script) alimenta los perfiles scripted. La variable
    PROMPT_GRAPH_BASE_URL sustituye el endpoint de todos los perfiles http.
    """
    from .scripted import Script

    path = Path(path) if path else ASSETS_DIR / "config" / "backends.yaml"
    with open(path, encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}

    base_url = os.environ.get(BASE_URL_ENV)
    if script is not None and not isinstance(script, Script):
        script = Script.load(script)

    backends: Dict[str, ModelBackend] = {}
    for profile_id, data in (raw.get("profiles") or {}).items():
        data = dict(data or {})
        if base_url and data.get("kind") == ProfileKind.HTTP.value:
            data["endpoint"] = base_url
        profile = BackendProfile(id=profile_id, **data)
        if profile.kind is ProfileKind.SCRIPTED:
            backends[profile_id] = create_backend(profile, script=script or Script([]))
        else:
            backends[profile_id] = create_backend(profile)

    prices = PriceTable.from_dict(raw.get("prices") or {})
    chosen = default_profile or raw.get("default_profile")
    if not chosen:
        raise ValueError(f"{path} no define default_profile")
    logger.debug("Backends cargados desde %s: %s", path, list(backends))
    return BackendRouter(backends, chosen, prices)
