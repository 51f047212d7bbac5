"""Classification verdicts: boolean results that carry their evidence."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class ClassificationVerdict:
    """Outcome of a finite-horizon property check.

    A false verdict always carries a concrete witness (the offending
    window, index, or measured density); params record everything needed
    to recompute the verdict.
    """

    property_name: str
    verdict: bool
    witness: dict[str, Any] | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.verdict and self.witness is None:
            raise ValueError(f"false verdict for {self.property_name!r} requires a witness")

    def __bool__(self) -> bool:
        return self.verdict

    def to_dict(self) -> dict[str, Any]:
        return {
            "property": self.property_name,
            "verdict": self.verdict,
            "witness": self.witness,
            "params": dict(self.params),
        }
