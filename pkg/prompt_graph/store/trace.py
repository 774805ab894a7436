"""
Trazas de pasadas en formato JSONL.

Cada línea es un registro independiente:

    {"kind": "entry", "pass": 3, "step": 3, "node": "gate", "composed": "...",
     "raw_answer": "...", "parsed": {...}, "retries": 0, "attempts": 1,
     "usage": {"prompt_tokens": 120, "completion_tokens": 40, "cost": 0.0},
     "ops": [{"kind": "remove_node", "payload": "subgoals", "accepted": true, "reason": null}],
     "status": "ok", "error": null}

    {"kind": "abort", "pass": 3, "step": 3, "node": "kb-add", "cause": "..."}

Al importar, los registros se agrupan por pasada en orden de aparición.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from ..core.base import OpResult
from ..errors import CorruptTrace, StorageFailure
from ..models.backend import Usage

logger = logging.getLogger(__name__)


@dataclass
class TraceEntry:
    node_id: str
    composed: Optional[str] = None
    raw_answer: Optional[str] = None
    parsed: Any = None
    retries: int = 0
    attempts: int = 0
    usage: Usage = field(default_factory=Usage)
    ops: List[OpResult] = field(default_factory=list)
    status: str = "ok"
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.status != "ok"

    def to_record(self, pass_index: int, step: Optional[int]) -> Dict[str, Any]:
        return {
            "kind": "entry",
            "pass": pass_index,
            "step": step,
            "node": self.node_id,
            "composed": self.composed,
            "raw_answer": self.raw_answer,
            "parsed": self.parsed,
            "retries": self.retries,
            "attempts": self.attempts,
            "usage": self.usage.to_dict(),
            "ops": [op.to_dict() for op in self.ops],
            "status": self.status,
            "error": self.error,
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "TraceEntry":
        return cls(
            node_id=record["node"],
            composed=record.get("composed"),
            raw_answer=record.get("raw_answer"),
            parsed=record.get("parsed"),
            retries=int(record.get("retries", 0)),
            attempts=int(record.get("attempts", 0)),
            usage=Usage.from_dict(record.get("usage") or {}),
            ops=[OpResult.from_dict(op) for op in record.get("ops", [])],
            status=record.get("status", "ok"),
            error=record.get("error"),
        )


@dataclass
class PassTrace:
    pass_index: int = 0
    step: Optional[int] = None
    entries: List[TraceEntry] = field(default_factory=list)
    aborted_at: Optional[str] = None
    abort_cause: Optional[str] = None

    @property
    def order(self) -> List[str]:
        return [entry.node_id for entry in self.entries if not entry.failed]

    @property
    def usage(self) -> Usage:
        total = Usage()
        for entry in self.entries:
            total = total + entry.usage
        return total

    @property
    def total_tokens(self) -> int:
        return self.usage.total_tokens

    @property
    def total_cost(self) -> float:
        return self.usage.cost

    @property
    def aborted(self) -> bool:
        return self.aborted_at is not None

    def add(self, entry: TraceEntry) -> None:
        self.entries.append(entry)

    def abort(self, node_id: str, cause: BaseException) -> None:
        self.aborted_at = node_id
        self.abort_cause = str(cause)

    def entry(self, node_id: str) -> Optional[TraceEntry]:
        for entry in self.entries:
            if entry.node_id == node_id:
                return entry
        return None

    def to_records(self) -> List[Dict[str, Any]]:
        records = [entry.to_record(self.pass_index, self.step) for entry in self.entries]
        if self.aborted:
            records.append({
                "kind": "abort",
                "pass": self.pass_index,
                "step": self.step,
                "node": self.aborted_at,
                "cause": self.abort_cause,
            })
        return records

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pass": self.pass_index,
            "step": self.step,
            "nodes": len(self.entries),
            "prompt_tokens": self.usage.prompt_tokens,
            "completion_tokens": self.usage.completion_tokens,
            "total_tokens": self.total_tokens,
            "cost": self.total_cost,
            "aborted_at": self.aborted_at,
        }

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        state = f", aborted_at='{self.aborted_at}'" if self.aborted else ""
        return f"PassTrace(pass={self.pass_index}, entries={len(self.entries)}, tokens={self.total_tokens}{state})"


def _dumps(record: Dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True, default=str)


def record_trace(trace: PassTrace, path: Union[str, Path]) -> int:
    """Agrega una pasada al final del archivo; devuelve los registros escritos."""
    records = trace.to_records()
    try:
        with open(path, "a", encoding="utf-8") as f:
            for record in records:
                f.write(_dumps(record) + "\n")
    except OSError as exc:
        raise StorageFailure(f"No se pudo escribir la traza en {path}: {exc}") from exc
    return len(records)


def export_trace(traces: Iterable[PassTrace], path: Union[str, Path]) -> int:
    try:
        Path(path).write_text("", encoding="utf-8")
    except OSError as exc:
        raise StorageFailure(f"No se pudo crear la traza {path}: {exc}") from exc
    written = 0
    for trace in traces:
        written += record_trace(trace, path)
    logger.debug("Traza exportada a %s (%d registros)", path, written)
    return written


def parse_records(lines: Iterable[str]) -> List[PassTrace]:
    traces: List[PassTrace] = []
    by_pass: Dict[int, PassTrace] = {}
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            kind = record["kind"]
            pass_index = int(record["pass"])
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptTrace(f"Línea {number} de la traza inválida: {exc}") from exc

        trace = by_pass.get(pass_index)
        if trace is None:
            trace = by_pass[pass_index] = PassTrace(pass_index=pass_index, step=record.get("step"))
            traces.append(trace)

        try:
            if kind == "entry":
                trace.add(TraceEntry.from_record(record))
            elif kind == "abort":
                trace.aborted_at = record["node"]
                trace.abort_cause = record.get("cause")
            else:
                raise CorruptTrace(f"Línea {number}: tipo de registro desconocido '{kind}'")
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptTrace(f"Línea {number} de la traza inválida: {exc}") from exc
    return traces


def import_trace(path: Union[str, Path]) -> List[PassTrace]:
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as exc:
        raise StorageFailure(f"No se pudo leer la traza {path}: {exc}") from exc
    return parse_records(lines)
