import copy
import json
import logging
import threading
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Set, Tuple, Union

from ..errors import DatabaseShapeError, StorageFailure

logger = logging.getLogger(__name__)

_MISSING = object()

# Subárboles reservados y su forma declarada
RESERVED_SHAPES: Dict[str, type] = {
    "instruction_manual": str,
    "subgoals": dict,
    "action_summary": dict,
    "skills": dict,
    "kb": dict,
    "unknown": dict,
    "history": list,
}


def split_path(path: str) -> List[str]:
    if not isinstance(path, str) or not path:
        raise ValueError("La ruta de la base de datos no puede estar vacía")
    parts = path.split(".")
    if any(not part for part in parts):
        raise ValueError(f"Ruta inválida '{path}': segmentos vacíos")
    return parts


def _check_shape(key: str, value: Any) -> None:
    expected = RESERVED_SHAPES.get(key)
    if expected is not None and not isinstance(value, expected):
        raise DatabaseShapeError(
            f"El subárbol reservado '{key}' debe ser {expected.__name__}, "
            f"se recibió {type(value).__name__}"
        )


class Database:
    """
    Base de datos jerárquica compartida por todos los nodos.

    Las claves se direccionan con rutas separadas por puntos
    (``subgoals.subgoal``) que son las mismas que usan los placeholders
    ``$db.ruta$`` de los prompts. Todas las escrituras pasan por un único
    lock; las lecturas de un nodo se hacen sobre una vista en stage.
    """

    def __init__(self, data: Optional[Dict[str, Any]] = None):
        self._root: Dict[str, Any] = copy.deepcopy(data) if data else {}
        self._lock = threading.RLock()
        for key, value in self._root.items():
            _check_shape(key, value)

    def _walk(self, parts: List[str]) -> Any:
        node: Any = self._root
        for part in parts:
            if isinstance(node, dict) and part in node:
                node = node[part]
            elif isinstance(node, list) and part.isdigit() and int(part) < len(node):
                node = node[int(part)]
            else:
                return _MISSING
        return node

    def get(self, path: str, default: Any = _MISSING) -> Any:
        value = self._walk(split_path(path))
        if value is _MISSING:
            if default is _MISSING:
                raise KeyError(path)
            return default
        return value

    def has(self, path: str) -> bool:
        return self._walk(split_path(path)) is not _MISSING

    def set(self, path: str, value: Any) -> None:
        parts = split_path(path)
        with self._lock:
            if len(parts) == 1:
                _check_shape(parts[0], value)
            node = self._root
            for depth, part in enumerate(parts[:-1]):
                child = node.get(part)
                if child is None:
                    if depth == 0 and RESERVED_SHAPES.get(part, dict) is not dict:
                        raise DatabaseShapeError(f"El subárbol reservado '{part}' no admite claves")
                    child = node[part] = {}
                elif not isinstance(child, dict):
                    raise DatabaseShapeError(
                        f"No se puede escribir '{path}': '{part}' no es un mapa"
                    )
                node = child
            node[parts[-1]] = copy.deepcopy(value)

    def delete(self, path: str) -> bool:
        parts = split_path(path)
        with self._lock:
            parent = self._walk(parts[:-1]) if len(parts) > 1 else self._root
            if isinstance(parent, dict) and parts[-1] in parent:
                del parent[parts[-1]]
                return True
            return False

    def append(self, path: str, value: Any, cap: Optional[int] = None) -> None:
        """Agrega al final de una lista; con `cap` se descartan los más antiguos."""
        with self._lock:
            current = self.get(path, [])
            if not isinstance(current, list):
                raise DatabaseShapeError(f"'{path}' no es una lista")
            current = current + [copy.deepcopy(value)]
            if cap is not None and len(current) > cap:
                current = current[len(current) - cap:]
            self.set(path, current)

    def keys(self, path: Optional[str] = None) -> List[str]:
        node = self._root if path is None else self.get(path, {})
        return list(node.keys()) if isinstance(node, dict) else []

    def iter_paths(self) -> Iterator[str]:
        """Recorre todas las rutas (mapas anidados incluidos)."""
        def _iter(node: Any, prefix: str) -> Iterator[str]:
            if isinstance(node, dict):
                for key, value in node.items():
                    path = f"{prefix}.{key}" if prefix else key
                    yield path
                    yield from _iter(value, path)
        yield from _iter(self._root, "")

    def snapshot(self) -> Dict[str, Any]:
        with self._lock:
            return copy.deepcopy(self._root)

    def stage(self) -> "StagedWrites":
        return StagedWrites(self)

    def apply(self, writes: List[Tuple[str, str, Any]]) -> None:
        with self._lock:
            for op, path, value in writes:
                if op == "set":
                    self.set(path, value)
                elif op == "delete":
                    self.delete(path)
                elif op == "append":
                    self.append(path, value[0], cap=value[1])

    def to_dict(self) -> Dict[str, Any]:
        return self.snapshot()

    def save(self, path: Union[str, Path]) -> None:
        try:
            with open(path, "w", encoding="utf-8") as f:
                json.dump(self.snapshot(), f, indent=2, ensure_ascii=False)
                f.write("\n")
        except OSError as exc:
            raise StorageFailure(f"No se pudo guardar la base de datos en {path}: {exc}") from exc

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Database":
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except OSError as exc:
            raise StorageFailure(f"No se pudo leer la base de datos {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise DatabaseShapeError(f"La instantánea {path} debe ser un mapa")
        return cls(data)

    def __contains__(self, path: str) -> bool:
        return self.has(path)

    def __repr__(self) -> str:
        return f"Database(keys={self.keys()})"


class StagedWrites:
    """
    Escrituras pendientes sobre la base de datos.

    Solo se copian los subárboles de primer nivel que el hook escribe;
    el resto se lee directamente de la base. Las lecturas ven las
    escrituras en stage y nada llega a la base original hasta
    `commit()`. Un hook que falla simplemente descarta el stage.
    """

    def __init__(self, base: Database):
        self._base = base
        self._overlay = Database()
        self._touched: Set[str] = set()
        self._writes: List[Tuple[str, str, Any]] = []
        self._committed = False

    def _source(self, path: str) -> Database:
        return self._overlay if split_path(path)[0] in self._touched else self._base

    def _touch(self, path: str) -> None:
        top = split_path(path)[0]
        if top in self._touched:
            return
        if self._base.has(top):
            self._overlay.set(top, self._base.get(top))
        self._touched.add(top)

    def get(self, path: str, default: Any = _MISSING) -> Any:
        return self._source(path).get(path, default)

    def has(self, path: str) -> bool:
        return self._source(path).has(path)

    def set(self, path: str, value: Any) -> None:
        self._touch(path)
        self._overlay.set(path, value)
        self._writes.append(("set", path, copy.deepcopy(value)))

    def delete(self, path: str) -> None:
        self._touch(path)
        self._overlay.delete(path)
        self._writes.append(("delete", path, None))

    def append(self, path: str, value: Any, cap: Optional[int] = None) -> None:
        self._touch(path)
        self._overlay.append(path, value, cap=cap)
        self._writes.append(("append", path, (copy.deepcopy(value), cap)))

    @property
    def pending(self) -> int:
        return len(self._writes)

    @property
    def copied_keys(self) -> List[str]:
        return sorted(self._touched)

    def commit(self) -> None:
        if self._committed:
            return
        self._base.apply(self._writes)
        self._committed = True
        logger.debug("Commit de %d escrituras en stage", len(self._writes))

    def discard(self) -> None:
        self._writes.clear()


if __name__ == "__main__":
    print("=== Demostración de la base de datos ===\n")
    db = Database({"subgoals": {"subgoal": "Move toward tree"}})
    print(f"1. subgoals.subgoal = {db.get('subgoals.subgoal')!r}")

    staged = db.stage()
    staged.set("kb.Wood_Quantity_for_Table", "2 wood for table")
    print(f"2. En stage: {staged.get('kb')}; en la base: {db.get('kb', None)}")
    staged.commit()
    print(f"3. Tras el commit: {db.get('kb')}")
