"""
Protocolo de tramas por stdin/stdout para entornos externos.

Cada trama es un entero de 4 bytes big-endian con la longitud, seguido
del cuerpo JSON en UTF-8. Petición: {"op": "reset"|"step"|"describe"|"close", ...}.
Respuesta: {"ok": true, ...} o {"ok": false, "error": <clase>, "message": <texto>}.
"""
import json
import logging
import struct
import subprocess
from typing import Any, BinaryIO, Dict, List, Optional, Sequence

from ..errors import NonPositiveRepeats, PromptGraphError, UnknownAction
from .base import Environment, StepResult

logger = logging.getLogger(__name__)

HEADER = struct.Struct(">I")
MAX_FRAME = 16 * 1024 * 1024


class ProtocolError(PromptGraphError):
    pass


def write_frame(stream: BinaryIO, message: Dict[str, Any]) -> None:
    body = json.dumps(message, ensure_ascii=False, sort_keys=True).encode("utf-8")
    stream.write(HEADER.pack(len(body)) + body)
    stream.flush()


def _read_exact(stream: BinaryIO, size: int) -> bytes:
    chunks = []
    remaining = size
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(stream: BinaryIO) -> Optional[Dict[str, Any]]:
    """Lee una trama; None si el flujo terminó limpio antes de la cabecera."""
    header = _read_exact(stream, HEADER.size)
    if not header:
        return None
    if len(header) < HEADER.size:
        raise ProtocolError("Cabecera de trama incompleta")
    (length,) = HEADER.unpack(header)
    if length > MAX_FRAME:
        raise ProtocolError(f"Trama demasiado grande: {length} bytes")
    body = _read_exact(stream, length)
    if len(body) < length:
        raise ProtocolError("Cuerpo de trama incompleto")
    try:
        message = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"Trama con JSON inválido: {exc}") from exc
    if not isinstance(message, dict):
        raise ProtocolError("La trama debe contener un objeto JSON")
    return message


def _handle(env: Environment, request: Dict[str, Any]) -> Dict[str, Any]:
    op = request.get("op")
    if op == "reset":
        return {"ok": True, "observation": env.reset(int(request.get("seed", 0)))}
    if op == "step":
        result = env.step(str(request["action"]), int(request.get("repeats", 1)))
        return {"ok": True, **result.to_dict()}
    if op == "describe":
        return {"ok": True, "actions": list(env.actions), "manual": env.manual}
    if op == "close":
        return {"ok": True}
    raise ProtocolError(f"Operación desconocida: {op!r}")


def serve(env: Environment, stdin: BinaryIO, stdout: BinaryIO) -> int:
    """Atiende peticiones hasta 'close' o fin de la entrada. Devuelve las peticiones atendidas."""
    served = 0
    while True:
        try:
            request = read_frame(stdin)
        except ProtocolError as exc:
            write_frame(stdout, {"ok": False, "error": "ProtocolError", "message": str(exc)})
            break
        if request is None:
            break
        try:
            reply = _handle(env, request)
        except (PromptGraphError, KeyError, ValueError, RuntimeError) as exc:
            reply = {"ok": False, "error": exc.__class__.__name__, "message": str(exc)}
        write_frame(stdout, reply)
        served += 1
        if request.get("op") == "close":
            break
    env.close()
    return served


_REMOTE_ERRORS = {
    "UnknownAction": lambda request: UnknownAction(request.get("action", "")),
    "NonPositiveRepeats": lambda request: NonPositiveRepeats(request.get("repeats")),
}


class StdioEnvironment(Environment):
    """Cliente del protocolo: lanza el proceso y le habla por sus tuberías."""

    name = "stdio"

    def __init__(self, command: Sequence[str], timeout: float = 10.0):
        if not command:
            raise ValueError("El entorno stdio necesita un comando")
        self.command = list(command)
        self.timeout = timeout
        self._process = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
        )
        self._described: Optional[Dict[str, Any]] = None
        logger.debug("Entorno stdio lanzado: %s", " ".join(self.command))

    def _request(self, message: Dict[str, Any]) -> Dict[str, Any]:
        if self._process.poll() is not None:
            raise ProtocolError(f"El proceso del entorno terminó (código {self._process.returncode})")
        write_frame(self._process.stdin, message)
        reply = read_frame(self._process.stdout)
        if reply is None:
            raise ProtocolError("El entorno cerró la conexión sin responder")
        if not reply.get("ok", False):
            error, text = reply.get("error", ""), reply.get("message", "")
            factory = _REMOTE_ERRORS.get(error)
            if factory is not None:
                raise factory(message)
            raise ProtocolError(f"{error}: {text}")
        return reply

    def _describe(self) -> Dict[str, Any]:
        if self._described is None:
            self._described = self._request({"op": "describe"})
        return self._described

    @property
    def actions(self) -> List[str]:
        return list(self._describe()["actions"])

    @property
    def manual(self) -> str:
        return str(self._describe()["manual"])

    def reset(self, seed: int = 0) -> str:
        return self._request({"op": "reset", "seed": seed})["observation"]

    def step(self, action: str, repeats: int = 1) -> StepResult:
        reply = self._request({"op": "step", "action": action, "repeats": repeats})
        return StepResult.from_dict(reply)

    def close(self) -> None:
        if self._process.poll() is None:
            try:
                self._request({"op": "close"})
            except (ProtocolError, OSError):
                pass
            self._process.stdin.close()
            try:
                self._process.wait(timeout=self.timeout)
            except subprocess.TimeoutExpired:
                self._process.kill()
                self._process.wait()
        self._process.stdout.close()
