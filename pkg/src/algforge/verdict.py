"""Result object returned by every structural check."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check: ``ok`` plus, on failure, a concrete witness."""

    ok: bool
    witness: Any = None
    note: str = ""
    details: dict = field(default_factory=dict, compare=False)

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def passed(cls, note: str = "", **details: Any) -> "Verdict":
        return cls(True, None, note, details)

    @classmethod
    def failed(cls, witness: Any, note: str = "", **details: Any) -> "Verdict":
        return cls(False, witness, note, details)

    def describe(self) -> str:
        head = "pass" if self.ok else "fail"
        parts = [head]
        if self.note:
            parts.append(self.note)
        if self.witness is not None:
            parts.append(f"witness: {self.witness}")
        return "; ".join(parts)
