from typing import Any, List, Optional


class PromptGraphError(Exception):
    """Error base de todo el motor."""


# Grafo

class GraphError(PromptGraphError):
    pass


class DuplicateId(GraphError):
    def __init__(self, node_id: str):
        super().__init__(f"Ya existe un nodo con el id '{node_id}'")
        self.node_id = node_id


class UnknownDependency(GraphError):
    def __init__(self, dep: str, node_id: Optional[str] = None):
        where = f" (declarada por '{node_id}')" if node_id else ""
        super().__init__(f"Dependencia desconocida '{dep}'{where}")
        self.dep = dep
        self.node_id = node_id


class UnknownNode(GraphError):
    def __init__(self, node_id: str):
        super().__init__(f"Nodo desconocido '{node_id}'")
        self.node_id = node_id


class CycleIntroduced(GraphError):
    def __init__(self, path: List[str]):
        super().__init__("La operación introduce un ciclo: " + " -> ".join(path))
        self.path = list(path)


class GraphBusy(GraphError):
    def __init__(self, action: str):
        super().__init__(f"No se puede '{action}' el grafo permanente durante una pasada")


class DynamicOpRejected(GraphError):
    """Operación dinámica rechazada por las salvaguardas; el grafo no cambia."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class RejectedEvaluatedTarget(DynamicOpRejected):
    pass


class RejectedEvaluatedEndpoint(DynamicOpRejected):
    pass


class RejectedUnknownEdge(DynamicOpRejected):
    pass


class DynamicBudgetExceeded(GraphError):
    def __init__(self, budget: int):
        super().__init__(f"Se agotó el presupuesto de {budget} nodos dinámicos por pasada")
        self.budget = budget


class NodeEvaluationFailed(GraphError):
    def __init__(self, node_id: str, cause: BaseException):
        super().__init__(f"Falló la evaluación del nodo '{node_id}': {cause}")
        self.node_id = node_id
        self.cause = cause


class StalledTraversal(GraphError):
    def __init__(self, pending: List[str]):
        super().__init__("Frontera vacía con nodos pendientes: " + ", ".join(sorted(pending)))
        self.pending = list(pending)


# Runtime de nodos

class AfterQueryError(PromptGraphError):
    """Error reintentable: el mensaje se le devuelve al modelo."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class NoBlockFound(AfterQueryError):
    pass


class ShapeMismatch(AfterQueryError):
    pass


class SchemaViolation(AfterQueryError):
    pass


class UnparseableAnswer(AfterQueryError):
    pass


class AfterQueryExhausted(PromptGraphError):
    def __init__(self, node_id: str, last_message: str, attempts: int):
        super().__init__(
            f"El nodo '{node_id}' agotó {attempts} intentos; último error: {last_message}"
        )
        self.node_id = node_id
        self.last_message = last_message
        self.attempts = attempts


class UnknownHook(PromptGraphError):
    def __init__(self, hook_id: str):
        super().__init__(f"Hook desconocido '{hook_id}'")
        self.hook_id = hook_id


class UnknownComposeStrategy(PromptGraphError):
    def __init__(self, strategy: str):
        super().__init__(f"Estrategia de compose desconocida '{strategy}'")
        self.strategy = strategy


# Base de datos y trazas

class UnresolvedTemplateKey(PromptGraphError):
    def __init__(self, path: str):
        super().__init__(f"Clave de plantilla sin resolver: $db.{path}$")
        self.path = path


class DatabaseShapeError(PromptGraphError, ValueError):
    pass


class UnknownSkill(PromptGraphError):
    def __init__(self, skill: str):
        super().__init__(f"Skill desconocido '{skill}'")
        self.skill = skill


class StorageFailure(PromptGraphError):
    pass


class CorruptTrace(PromptGraphError):
    pass


# Backends de modelo

class BackendError(PromptGraphError):
    def __init__(self, status: Optional[int], body: Any = ""):
        super().__init__(f"Error del backend (status={status}): {str(body)[:200]}")
        self.status = status
        self.body = body


class BackendTimeout(BackendError):
    def __init__(self, body: Any = "timeout"):
        super().__init__(None, body)


class MissingCredentials(BackendError):
    def __init__(self, variable: str):
        PromptGraphError.__init__(self, f"Falta la credencial en la variable de entorno {variable}")
        self.status = None
        self.body = ""
        self.variable = variable


class UnknownModelRate(PromptGraphError):
    def __init__(self, model: str):
        super().__init__(f"No hay tarifa configurada para el modelo '{model}'")
        self.model = model


class UnknownProfile(PromptGraphError):
    def __init__(self, profile_id: str):
        super().__init__(f"Perfil de backend desconocido '{profile_id}'")
        self.profile_id = profile_id


class UnmatchedScriptCall(PromptGraphError):
    pass


class AmbiguousScriptMatch(PromptGraphError):
    pass


# Agente y entorno

class MisconfiguredNodeSet(PromptGraphError):
    def __init__(self, node_id: str):
        super().__init__(f"El conjunto de nodos configurado nombra un nodo ausente: '{node_id}'")
        self.node_id = node_id


class UnknownAction(PromptGraphError):
    def __init__(self, action: str):
        super().__init__(f"Acción desconocida '{action}'")
        self.action = action


class NonPositiveRepeats(PromptGraphError):
    def __init__(self, repeats: Any):
        super().__init__(f"El número de repeticiones debe ser positivo, se recibió {repeats!r}")
        self.repeats = repeats


class EpisodeError(PromptGraphError):
    def __init__(self, message: str, partial_result: Any = None, cause: Optional[BaseException] = None):
        super().__init__(message)
        self.partial_result = partial_result
        self.cause = cause
