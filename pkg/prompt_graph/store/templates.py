import json
import logging
import re
from typing import Any, List, Optional

from ..errors import UnresolvedTemplateKey

logger = logging.getLogger(__name__)

# `$$` es un `$` literal; cualquier otro `$` que no abra `$db.` se deja tal cual
PLACEHOLDER_RE = re.compile(r"\$\$|\$db\.([A-Za-z0-9_\-]+(?:\.[A-Za-z0-9_\-]+)*)\$")


def render_value(value: Any) -> str:
    """Texto canónico de un valor de la base de datos dentro de un prompt."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.15g}"
    if isinstance(value, str):
        return value
    return json.dumps(value, ensure_ascii=False, separators=(",", ":"), sort_keys=True, default=str)


def find_placeholders(text: str) -> List[str]:
    return [m.group(1) for m in PLACEHOLDER_RE.finditer(text) if m.group(1)]


def resolve_template(text: str, database: Any, strict: bool = False,
                     warnings: Optional[List[str]] = None) -> str:
    """
    Sustituye cada `$db.ruta$` por el valor canónico de la base de datos.

    Cada placeholder se resuelve de forma independiente. En modo estricto
    una ruta ausente lanza UnresolvedTemplateKey; en modo permisivo se
    sustituye por "" y se anota un aviso.
    """
    def _replace(match: "re.Match[str]") -> str:
        path = match.group(1)
        if path is None:
            return "$"
        if database.has(path):
            return render_value(database.get(path))
        if strict:
            raise UnresolvedTemplateKey(path)
        logger.warning("Placeholder $db.%s$ sin valor; se sustituye por ''", path)
        if warnings is not None:
            warnings.append(path)
        return ""

    return PLACEHOLDER_RE.sub(_replace, text)


def leading_placeholders(prompt: str):
    """
    Separa las líneas iniciales que son solo un placeholder del resto del prompt.

    Devuelve (rutas, resto). Esas rutas son el material de base de datos
    que el compose por defecto coloca antes de las dependencias.
    """
    lines = prompt.split("\n")
    paths: List[str] = []
    index = 0
    while index < len(lines):
        stripped = lines[index].strip()
        if not stripped:
            if paths:
                index += 1
                continue
            break
        match = PLACEHOLDER_RE.fullmatch(stripped)
        if match is None or match.group(1) is None:
            break
        paths.append(match.group(1))
        index += 1
    if not paths:
        return [], prompt
    return paths, "\n".join(lines[index:])
