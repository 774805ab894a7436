import ast
import json
import re
from enum import Enum
from typing import Any, Iterator, List, Optional, Sequence, Union

from ..errors import NoBlockFound, ShapeMismatch, UnparseableAnswer

FENCE_RE = re.compile(r"```[A-Za-z0-9_+\-]*[ \t]*\n?(.*?)```", re.S)
# Token al inicio, admite una etiqueta corta ("Answer: yes") y énfasis markdown
YES_NO_RE = re.compile(r"\s*(?:[A-Za-z][A-Za-z ]{0,19}:\s*)?[*_\"'`]*(yes|no|true|false)\b", re.I)
TRAILING_COMMA_RE = re.compile(r",(\s*[}\]])")
LABEL_RE = re.compile(r"^\s*(?:[-*]\s*)?\**\s*([A-Za-z][\w \-]*?)\s*\**\s*:\s*(.*)$")

_decoder = json.JSONDecoder()


class BlockShape(Enum):
    MAP = "map"
    LIST = "list"
    YES_NO = "yes_no"
    LABELED = "labeled"


def parse_yes_no(value: Any) -> bool:
    """Interpreta yes/no (o true/false) por prefijo: "yes, porque..." es yes."""
    if isinstance(value, bool):
        return value
    if not isinstance(value, str):
        raise UnparseableAnswer(f"Se esperaba yes/no, se recibió {value!r}")
    match = YES_NO_RE.match(value)
    if match is None:
        raise UnparseableAnswer(f"Respuesta fuera del vocabulario yes/no: {value.strip()[:60]!r}")
    return match.group(1).lower() in ("yes", "true")


def _strip_comments(fragment: str) -> str:
    # Quita comentarios `#` fuera de cadenas
    out = []
    quote = None
    escaped = False
    skipping = False
    for char in fragment:
        if skipping:
            if char == "\n":
                skipping = False
                out.append(char)
            continue
        if quote:
            out.append(char)
            if escaped:
                escaped = False
            elif char == "\\":
                escaped = True
            elif char == quote:
                quote = None
            continue
        if char in "\"'":
            quote = char
        elif char == "#":
            skipping = True
            continue
        out.append(char)
    return "".join(out)


def _balanced_end(text: str, start: int) -> Optional[int]:
    """Índice justo después del bloque {..} o [..] que abre en `start`."""
    pairs = {"{": "}", "[": "]"}
    stack = []
    quote = None
    escaped = False
    comment = False
    for index in range(start, len(text)):
        char = text[index]
        if comment:
            comment = char != "\n"
            continue
        if quote:
            if escaped:
                escaped = False
            elif char == "\\":
                escaped = True
            elif char == quote:
                quote = None
            continue
        if char == "#":
            comment = True
        elif char in "\"'":
            quote = char
        elif char in pairs:
            stack.append(pairs[char])
        elif char in "}]":
            if not stack or stack.pop() != char:
                return None
            if not stack:
                return index + 1
    return None


def _normalize(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set)):
        return [_normalize(v) for v in value]
    return value


def load_lenient(fragment: str) -> Any:
    """
    JSON estricto primero; luego sin comentarios ni comas finales; por
    último como literal de Python (comillas simples, True/False).
    """
    fragment = fragment.strip()
    try:
        return _normalize(json.loads(fragment))
    except ValueError:
        pass
    cleaned = TRAILING_COMMA_RE.sub(r"\1", _strip_comments(fragment)).strip()
    try:
        return _normalize(json.loads(cleaned))
    except ValueError:
        pass
    try:
        return _normalize(ast.literal_eval(cleaned))
    except (ValueError, SyntaxError, TypeError, MemoryError, RecursionError) as exc:
        raise ValueError(str(exc)) from exc


def _blocks_in(text: str) -> Iterator[str]:
    index = 0
    while index < len(text):
        if text[index] in "{[":
            end = _balanced_end(text, index)
            if end is not None:
                yield text[index:end]
                index = end
                continue
        index += 1


def iter_structured_blocks(text: str) -> Iterator[Any]:
    """Bloques bien formados en orden: primero los cercados con ```, luego los sueltos."""
    fenced = [m.group(1) for m in FENCE_RE.finditer(text)]
    for body in fenced:
        try:
            yield load_lenient(body)
            continue
        except ValueError:
            pass
        for block in _blocks_in(body):
            try:
                yield load_lenient(block)
            except ValueError:
                continue
    bare = FENCE_RE.sub("", text)
    for block in _blocks_in(bare):
        try:
            yield load_lenient(block)
        except ValueError:
            continue


def parse_labeled_fields(text: str, fields: Sequence[str]) -> dict:
    wanted = {f.lower(): f for f in fields}
    found = {}
    for line in text.splitlines():
        match = LABEL_RE.match(line)
        if match is None:
            continue
        label = match.group(1).strip().lower()
        if label in wanted and wanted[label] not in found:
            found[wanted[label]] = match.group(2).strip()
    if not found:
        raise NoBlockFound(f"No se encontraron los campos {list(fields)}")
    missing = [f for f in fields if f not in found]
    if missing:
        raise ShapeMismatch(f"Faltan los campos {missing}")
    return found


def parse_structured_block(text: str, expected_shape: Union[BlockShape, str],
                           fields: Optional[Sequence[str]] = None) -> Any:
    """
    Extrae el primer bloque estructurado de la respuesta con la forma pedida.

    Formas: map, list, yes_no (token yes/no) y labeled (líneas "Campo: valor"
    o un mapa que contenga esos campos). Los errores son reintentables y
    su mensaje se le devuelve al modelo.
    """
    shape = BlockShape(expected_shape)
    if shape is BlockShape.YES_NO:
        return parse_yes_no(FENCE_RE.sub(lambda m: m.group(1), text))

    if shape is BlockShape.LABELED:
        if not fields:
            raise ValueError("La forma labeled necesita la lista de campos")
        for block in iter_structured_blocks(text):
            if isinstance(block, dict) and all(f in block for f in fields):
                return {f: block[f] for f in fields}
        return parse_labeled_fields(text, fields)

    expected = dict if shape is BlockShape.MAP else list
    seen: List[str] = []
    for block in iter_structured_blocks(text):
        if isinstance(block, expected):
            return block
        seen.append(type(block).__name__)
    if seen:
        raise ShapeMismatch(
            f"Se esperaba un bloque {shape.value} y se encontró {', '.join(seen)}"
        )
    raise NoBlockFound(f"No hay ningún bloque {shape.value} bien formado en la respuesta")
