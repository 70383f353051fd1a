"""Bound entries shared by the upper, lower and witness machinery."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

METHODS = (
    "tiling-cover",
    "rogers-formula",
    "subset",
    "chain",
    "lattice",
    "witness-family",
    "witness-random",
    "lattice-witness",
)


@dataclass(frozen=True)
class BoundEntry:
    """One bound on C_n(U, V).

    ``exact`` holds the rational value when the construction produced one;
    ``value`` is always its float image. Witness entries carry their
    quadrature error in ``error``; their usable value is ``value - error``.
    """

    value: float
    direction: str
    method: str
    certified: bool
    audit: dict = field(default_factory=dict, compare=False)
    exact: Fraction | None = None
    error: float = 0.0

    def __post_init__(self):
        if self.direction not in ("lower", "upper"):
            raise ValueError(f"bad direction {self.direction!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def usable(self) -> float:
        """Conservative value: witnesses are discounted by their error bar."""
        return self.value - self.error if self.direction == "lower" else self.value + self.error

    def to_json(self) -> dict[str, Any]:
        d = {
            "value": self.value,
            "direction": self.direction,
            "method": self.method,
            "certified": self.certified,
            "error": self.error,
            "exact": None if self.exact is None else f"{self.exact.numerator}/{self.exact.denominator}",
            "audit": _jsonable(self.audit),
        }
        return d


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return obj.item()
    return obj


def from_exact(q: Fraction | None, fallback: float) -> tuple[float, Fraction | None]:
    if q is None:
        return float(fallback), None
    return float(q), q
