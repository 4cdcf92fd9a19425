"""Core claim and label vocabulary shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum


class Stance(IntEnum):
    """Binary verification label. FALSE < TRUE gives a deterministic iteration order."""

    FALSE = 0
    TRUE = 1

    @property
    def word(self) -> str:
        return "true" if self is Stance.TRUE else "false"

    @property
    def opposite(self) -> "Stance":
        return Stance.FALSE if self is Stance.TRUE else Stance.TRUE

    @property
    def prob_index(self) -> int:
        """Index of this label in probability vectors, which are ordered [true, false]."""
        return 0 if self is Stance.TRUE else 1

    @classmethod
    def from_word(cls, word: str) -> "Stance":
        w = word.strip().lower()
        if w == "true":
            return cls.TRUE
        if w == "false":
            return cls.FALSE
        raise ValueError(f"not a stance word: {word!r}")


@dataclass(frozen=True)
class Claim:
    """A statement to verify, with optional gold annotations.

    ``gold_evidence`` entries are (page title, paragraph index) pairs; titles are
    matched after normalization, so any casing/underscore variant is accepted.
    """

    text: str
    id: str = ""
    gold_label: Stance | None = None
    gold_evidence: tuple[tuple[str, int], ...] = field(default=())
    hops: int | None = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("claim text must be non-empty")
        object.__setattr__(self, "gold_evidence", tuple((t, int(i)) for t, i in self.gold_evidence))
