"""Shared record types for participants, cues and associations."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Tuple

# Administered cue list, alphabetical.
DEFAULT_CUES: Tuple[str, ...] = (
    "art",
    "biology",
    "chemistry",
    "complex",
    "life",
    "mathematics",
    "physics",
    "school",
    "system",
    "university",
)

ASSOCIATIONS_PER_CUE = 3
RATING_MIN = 1
RATING_MAX = 5
NEUTRAL_RATING = 3


class Source(str, Enum):
    HUMAN = "human"
    SIMULATED = "simulated"

    @classmethod
    def parse(cls, value: str) -> "Source":
        return cls(str(value).strip().lower())


class Group(str, Enum):
    TRAINEE = "trainee"
    EXPERT = "expert"
    ACADEMIC = "academic"

    @classmethod
    def parse(cls, value: str) -> "Group":
        return cls(str(value).strip().lower())


def is_valid_rating(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and RATING_MIN <= value <= RATING_MAX


@dataclass(frozen=True)
class AssociationEntry:
    text: str
    rating: Optional[int] = None

    @property
    def is_blank(self) -> bool:
        return not self.text.strip()


@dataclass(frozen=True)
class CueResponse:
    cue: str
    cue_rating: Optional[int] = None
    associations: Tuple[AssociationEntry, ...] = ()

    def __post_init__(self):
        if len(self.associations) > ASSOCIATIONS_PER_CUE:
            raise ValueError(f"cue {self.cue!r} has {len(self.associations)} associations, at most {ASSOCIATIONS_PER_CUE} allowed")
        if self.cue_rating is not None and not is_valid_rating(self.cue_rating):
            raise ValueError(f"cue {self.cue!r} rating {self.cue_rating!r} outside [1, 5]")
        for entry in self.associations:
            if entry.rating is not None and not is_valid_rating(entry.rating):
                raise ValueError(f"association {entry.text!r} rating {entry.rating!r} outside [1, 5]")

    @property
    def filled(self) -> int:
        """Number of non-blank association texts."""
        return sum(1 for entry in self.associations if not entry.is_blank)


@dataclass(frozen=True)
class ParticipantRecord:
    participant_id: str
    source: Source
    group: Group
    responses: Tuple[CueResponse, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.participant_id:
            raise ValueError("participant_id must be non-empty")
        cues = [r.cue for r in self.responses]
        if len(cues) != len(set(cues)):
            raise ValueError(f"participant {self.participant_id!r} has duplicate cues")

    def response_for(self, cue: str) -> Optional[CueResponse]:
        for response in self.responses:
            if response.cue == cue:
                return response
        return None

    def iter_associations(self) -> Iterator[Tuple[str, int, AssociationEntry]]:
        """Yield (cue, position, entry) for every association slot present."""
        for response in self.responses:
            for position, entry in enumerate(response.associations):
                yield response.cue, position, entry
