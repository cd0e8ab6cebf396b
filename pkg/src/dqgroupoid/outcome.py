from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Outcome:
    """Result of one verification: ``ok`` plus an exact witness on failure."""

    ok: bool
    witness: str | None = None
    note: str = ""

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def passed(cls, note: str = "") -> "Outcome":
        return cls(True, None, note)

    @classmethod
    def failed(cls, witness: str, note: str = "") -> "Outcome":
        return cls(False, witness, note)


def first_failure(outcomes) -> Outcome:
    """Combine outcomes: the first failure wins, otherwise notes are joined."""
    notes = []
    for o in outcomes:
        if not o.ok:
            return o
        if o.note:
            notes.append(o.note)
    return Outcome.passed("; ".join(notes))
