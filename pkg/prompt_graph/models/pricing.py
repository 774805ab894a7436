from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

from ..errors import UnknownModelRate


@dataclass
class PriceTable:
    """Tarifas por cada 1000 tokens: modelo -> (entrada, salida)."""
    rates: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    currency: str = "USD"

    def __post_init__(self):
        for model, (rate_in, rate_out) in self.rates.items():
            if rate_in < 0 or rate_out < 0:
                raise ValueError(f"Las tarifas del modelo '{model}' no pueden ser negativas")

    def rate(self, model: str) -> Tuple[float, float]:
        if model not in self.rates:
            raise UnknownModelRate(model)
        return self.rates[model]

    def to_dict(self) -> Dict[str, Any]:
        return {model: {"input": r[0], "output": r[1]} for model, r in self.rates.items()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any], currency: str = "USD") -> "PriceTable":
        rates = {}
        for model, entry in data.items():
            if isinstance(entry, dict):
                rates[model] = (float(entry.get("input", 0.0)), float(entry.get("output", 0.0)))
            else:
                rates[model] = (float(entry[0]), float(entry[1]))
        return cls(rates=rates, currency=currency)


def estimate_cost(usage, price_table: PriceTable, model: str) -> float:
    rate_in, rate_out = price_table.rate(model)
    return (usage.prompt_tokens * rate_in + usage.completion_tokens * rate_out) / 1000.0
