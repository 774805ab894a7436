import shlex
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Tuple


@dataclass
class StepResult:
    observation: str
    reward: float = 0.0
    done: bool = False
    info: Dict[str, Any] = field(default_factory=dict)

    def __iter__(self) -> Iterator[Any]:
        return iter((self.observation, self.reward, self.done, self.info))

    def to_dict(self) -> Dict[str, Any]:
        return {"observation": self.observation, "reward": self.reward, "done": self.done, "info": self.info}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StepResult":
        return cls(data["observation"], float(data.get("reward", 0.0)), bool(data.get("done", False)),
                   dict(data.get("info") or {}))


class Environment(ABC):
    """
    Contrato de adaptador de entorno.

    reset(seed) -> texto de observación; step(acción, repeticiones) ->
    StepResult; conjunto de acciones declarado y manual de instrucciones.
    """

    name: str = "environment"

    @property
    @abstractmethod
    def actions(self) -> List[str]:
        pass

    @property
    @abstractmethod
    def manual(self) -> str:
        pass

    @abstractmethod
    def reset(self, seed: int = 0) -> str:
        pass

    @abstractmethod
    def step(self, action: str, repeats: int = 1) -> StepResult:
        pass

    def close(self) -> None:
        pass

    def __enter__(self) -> "Environment":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(actions={len(self.actions)})"


def create_environment(spec: str, **kwargs) -> Environment:
    """
    "miniforage" crea el entorno en proceso; "stdio:<comando>" lanza un
    proceso que habla el protocolo de tramas por stdin/stdout.
    """
    from .miniforage import MiniForage
    from .stdio import StdioEnvironment

    kind, _, arg = spec.partition(":")
    environments = {
        "miniforage": lambda: MiniForage(**kwargs),
        "stdio": lambda: StdioEnvironment(shlex.split(arg), **kwargs),
    }
    factory = environments.get(kind)
    if factory is None:
        raise ValueError(f"Entorno desconocido: {spec}")
    if kind == "stdio" and not arg:
        raise ValueError("El entorno stdio necesita un comando: stdio:<comando>")
    return factory()
