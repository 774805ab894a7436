from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

Edge = Tuple[str, str]


@dataclass(frozen=True)
class NodeDef:
    id: str
    prompt: str
    deps: Tuple[str, ...] = ()
    compose: str = "default"
    after_query: Optional[str] = None
    model: str = "default"
    temporary: bool = False

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("El id del nodo no puede estar vacío")
        object.__setattr__(self, "deps", tuple(self.deps))
        if len(set(self.deps)) != len(self.deps):
            raise ValueError(f"El nodo '{self.id}' declara dependencias duplicadas")
        if self.id in self.deps:
            raise ValueError(f"El nodo '{self.id}' no puede depender de sí mismo")

    def as_temporary(self) -> "NodeDef":
        return self if self.temporary else replace(self, temporary=True)

    def to_dict(self) -> Dict[str, Any]:
        # Formato del archivo de grafo: solo los campos opcionales no triviales
        data: Dict[str, Any] = {"prompt": self.prompt, "dep": list(self.deps)}
        if self.compose != "default":
            data["compose"] = self.compose
        if self.after_query is not None:
            data["after_query"] = self.after_query
        if self.model != "default":
            data["model"] = self.model
        return data

    @classmethod
    def from_dict(cls, node_id: str, data: Dict[str, Any]) -> "NodeDef":
        extra = set(data) - {"prompt", "dep", "compose", "after_query", "model"}
        if extra:
            raise ValueError(f"Campos desconocidos en el nodo '{node_id}': {sorted(extra)}")
        if "prompt" not in data:
            raise ValueError(f"El nodo '{node_id}' no tiene prompt")
        return cls(
            id=node_id,
            prompt=data["prompt"],
            deps=tuple(data.get("dep", [])),
            compose=data.get("compose", "default"),
            after_query=data.get("after_query"),
            model=data.get("model", "default"),
        )


class OpKind(Enum):
    ADD_NODE = "add_node"
    ADD_EDGE = "add_edge"
    REMOVE_EDGE = "remove_edge"
    REMOVE_NODE = "remove_node"


@dataclass(frozen=True)
class DynamicOp:
    kind: OpKind
    payload: Union[NodeDef, Edge, str]

    def __post_init__(self):
        if self.kind is OpKind.ADD_NODE:
            if not isinstance(self.payload, NodeDef):
                raise ValueError("add_node requiere un NodeDef como payload")
            object.__setattr__(self, "payload", self.payload.as_temporary())
        elif self.kind is OpKind.REMOVE_NODE:
            if not isinstance(self.payload, str):
                raise ValueError("remove_node requiere el id del nodo como payload")
        else:
            if not (isinstance(self.payload, tuple) and len(self.payload) == 2):
                raise ValueError(f"{self.kind.value} requiere un par (u, v) como payload")

    @classmethod
    def add_node(cls, node: NodeDef) -> "DynamicOp":
        return cls(OpKind.ADD_NODE, node)

    @classmethod
    def add_edge(cls, u: str, v: str) -> "DynamicOp":
        return cls(OpKind.ADD_EDGE, (u, v))

    @classmethod
    def remove_edge(cls, u: str, v: str) -> "DynamicOp":
        return cls(OpKind.REMOVE_EDGE, (u, v))

    @classmethod
    def remove_node(cls, node_id: str) -> "DynamicOp":
        return cls(OpKind.REMOVE_NODE, node_id)

    @property
    def target(self) -> str:
        if isinstance(self.payload, NodeDef):
            return self.payload.id
        if isinstance(self.payload, str):
            return self.payload
        return self.payload[1]

    def to_dict(self) -> Dict[str, Any]:
        if isinstance(self.payload, NodeDef):
            payload: Any = {"id": self.payload.id, **self.payload.to_dict()}
        elif isinstance(self.payload, str):
            payload = self.payload
        else:
            payload = list(self.payload)
        return {"kind": self.kind.value, "payload": payload}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DynamicOp":
        kind = OpKind(data["kind"])
        payload = data["payload"]
        if kind is OpKind.ADD_NODE:
            payload = dict(payload)
            node_id = payload.pop("id")
            return cls(kind, NodeDef.from_dict(node_id, payload))
        if kind is OpKind.REMOVE_NODE:
            return cls(kind, payload)
        return cls(kind, (payload[0], payload[1]))

    def __repr__(self) -> str:
        if isinstance(self.payload, NodeDef):
            return f"DynamicOp(add_node {self.payload.id} <- {list(self.payload.deps)})"
        return f"DynamicOp({self.kind.value} {self.payload})"


@dataclass
class OpResult:
    op: DynamicOp
    accepted: bool
    reason: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {**self.op.to_dict(), "accepted": self.accepted, "reason": self.reason}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OpResult":
        return cls(op=DynamicOp.from_dict(data), accepted=data["accepted"], reason=data.get("reason"))
