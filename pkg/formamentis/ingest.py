"""Read raw study data into validated participant records.

Two input shapes are supported:

- long-format delimiter-separated exports, one row per association slot
  (see ``ColumnMapping``);
- transcripts in the answer-line grammar, one participant per file::

    "cue word"="rating"="association 1"="rating"="association 2"="rating"="association 3"="rating"

Quotes are optional, straight or typographic, and surrounding whitespace is
ignored. Anything else is rejected with the offending line number.
"""

from __future__ import annotations

import hashlib
import io
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from .errors import (
    BadGroup,
    BadPosition,
    BadRating,
    DuplicateCue,
    InputNotFound,
    MalformedLine,
    MissingColumn,
    UnknownCue,
    UnreadableInput,
    ValidationError,
    WrongFieldCount,
)
from .models import (
    ASSOCIATIONS_PER_CUE,
    DEFAULT_CUES,
    AssociationEntry,
    CueResponse,
    Group,
    ParticipantRecord,
    Source,
)

logger = logging.getLogger(__name__)

TRANSCRIPT_FIELDS = 2 + 2 * ASSOCIATIONS_PER_CUE

_RATING_RE = re.compile(r"^[0-9]+$")
_QUOTE_PAIRS = {'"': '"', "“": "”", "”": "”", "'": "'", "‘": "’", "’": "’"}
_QUOTE_CHARS = set(_QUOTE_PAIRS) | set(_QUOTE_PAIRS.values())
_DOUBLE_QUOTES = {'"', "“", "”"}


@dataclass(frozen=True)
class ColumnMapping:
    """Column names of a long-format export.

    ``source`` may be None when the file carries no source column; every row
    then gets the ``default_source`` passed to ``parse_tabular``.
    """

    participant_id: str = "participant_id"
    group: str = "group"
    source: Optional[str] = "source"
    cue: str = "cue"
    cue_rating: str = "cue_rating"
    position: str = "position"
    association: str = "association"
    rating: str = "rating"
    delimiter: str = ","

    def required(self) -> List[str]:
        cols = [self.participant_id, self.group, self.cue, self.cue_rating, self.position, self.association, self.rating]
        if self.source:
            cols.append(self.source)
        return cols

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, object]]) -> "ColumnMapping":
        if not data:
            return cls()
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


# ---------------------------
# Rating helpers
# ---------------------------

def _parse_rating(raw: str) -> Optional[int]:
    """Blank -> None; an integer in [1, 5] -> int; anything else -> ValueError."""
    value = raw.strip()
    if not value:
        return None
    if not _RATING_RE.match(value):
        raise ValueError("not an integer")
    rating = int(value)
    if not 1 <= rating <= 5:
        raise ValueError("outside [1, 5]")
    return rating


def _assemble(
    participant_id: str,
    source: Source,
    group: Group,
    cue_ratings: Dict[str, Optional[int]],
    slots: Dict[str, Dict[int, AssociationEntry]],
    cues: Sequence[str],
) -> ParticipantRecord:
    responses = []
    for cue in cues:
        positions = slots.get(cue, {})
        associations: Tuple[AssociationEntry, ...] = ()
        if positions:
            # gaps inside the slot range stay as blank entries
            last = max(positions)
            associations = tuple(positions.get(p, AssociationEntry("")) for p in range(last + 1))
        # trailing blank, unrated slots are not kept
        while associations and associations[-1].is_blank and associations[-1].rating is None:
            associations = associations[:-1]
        responses.append(CueResponse(cue=cue, cue_rating=cue_ratings.get(cue), associations=associations))
    return ParticipantRecord(participant_id=participant_id, source=source, group=group, responses=tuple(responses))


# ---------------------------
# Tabular exports
# ---------------------------

def parse_tabular(
    data: bytes,
    schema: Optional[ColumnMapping] = None,
    cues: Sequence[str] = DEFAULT_CUES,
    default_source: Source = Source.HUMAN,
    name: str = "<tabular>",
) -> List[ParticipantRecord]:
    """Parse a UTF-8 long-format export into one record per participant.

    Records are returned in order of first appearance. ``name`` labels
    errors for undecodable or structurally broken files.
    """
    schema = schema or ColumnMapping()
    try:
        frame = pd.read_csv(
            io.BytesIO(data),
            sep=schema.delimiter,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
            skipinitialspace=False,
        )
    except UnicodeDecodeError as e:
        raise UnreadableInput(name, f"not valid UTF-8 ({e.reason} at byte {e.start})")
    except pd.errors.EmptyDataError:
        raise UnreadableInput(name, "file is empty")
    except pd.errors.ParserError as e:
        raise UnreadableInput(name, str(e).strip())
    frame = frame.fillna("")
    frame.columns = [str(c).strip() for c in frame.columns]
    for column in schema.required():
        if column not in frame.columns:
            raise MissingColumn(column)

    cue_set = set(cues)
    order: List[str] = []
    meta: Dict[str, Tuple[Source, Group]] = {}
    cue_ratings: Dict[str, Dict[str, Optional[int]]] = {}
    slots: Dict[str, Dict[str, Dict[int, AssociationEntry]]] = {}

    for index, row in enumerate(frame.to_dict(orient="records")):
        line = index + 2  # header is line 1
        pid = row[schema.participant_id].strip()
        if not pid:
            raise BadGroup(line, row[schema.participant_id], field="participant_id")
        try:
            group = Group.parse(row[schema.group])
        except ValueError:
            raise BadGroup(line, row[schema.group])
        source = default_source
        if schema.source:
            try:
                source = Source.parse(row[schema.source])
            except ValueError:
                raise BadGroup(line, row[schema.source], field="source")

        cue = row[schema.cue].strip().lower()
        if cue not in cue_set:
            raise UnknownCue(row[schema.cue], lineno=line)

        raw_position = row[schema.position].strip()
        if raw_position not in {str(p) for p in range(1, ASSOCIATIONS_PER_CUE + 1)}:
            raise BadPosition(line, raw_position)
        position = int(raw_position) - 1

        try:
            cue_rating = _parse_rating(row[schema.cue_rating])
        except ValueError as e:
            raise BadRating(line, row[schema.cue_rating], str(e))
        try:
            rating = _parse_rating(row[schema.rating])
        except ValueError as e:
            raise BadRating(line, row[schema.rating], str(e))

        if pid not in meta:
            order.append(pid)
            meta[pid] = (source, group)
            cue_ratings[pid] = {}
            slots[pid] = {}
        elif meta[pid] != (source, group):
            raise BadGroup(line, row[schema.group], field="group (conflicts with earlier rows)")

        known = cue_ratings[pid].get(cue)
        if cue_rating is not None:
            if known is not None and known != cue_rating:
                raise BadRating(line, row[schema.cue_rating], "conflicts with an earlier rating of the same cue")
            cue_ratings[pid][cue] = cue_rating

        cue_slots = slots[pid].setdefault(cue, {})
        if position in cue_slots:
            raise DuplicateCue(pid, cue, position + 1)
        cue_slots[position] = AssociationEntry(text=row[schema.association].strip(), rating=rating)

    records = [_assemble(pid, *meta[pid], cue_ratings[pid], slots[pid], cues) for pid in order]
    logger.info("Parsed %d participants from %d tabular rows", len(records), len(frame))
    return records


# ---------------------------
# Transcripts
# ---------------------------

def _unquote(token: str, lineno: int) -> str:
    value = token.strip()
    if not value:
        return ""
    first, last = value[0], value[-1]
    if first in _QUOTE_PAIRS:
        if len(value) < 2 or last != _QUOTE_PAIRS[first]:
            raise MalformedLine(lineno, f"unbalanced quote in {token.strip()!r}")
        value = value[1:-1].strip()
    elif last in _QUOTE_CHARS:
        raise MalformedLine(lineno, f"unbalanced quote in {token.strip()!r}")
    if any(ch in _DOUBLE_QUOTES for ch in value):
        raise MalformedLine(lineno, f"stray quote inside {token.strip()!r}")
    return value


def transcript_id(text: str) -> str:
    return "transcript-" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def parse_transcript(
    text: str,
    source_tag: Source,
    group_tag: Group,
    participant_id: Optional[str] = None,
    cues: Sequence[str] = DEFAULT_CUES,
) -> ParticipantRecord:
    """Parse one participant's answer lines.

    Blank lines are skipped. Cues without a line are kept with no associations
    so they count as blank slots downstream.
    """
    cue_set = set(cues)
    cue_ratings: Dict[str, Optional[int]] = {}
    slots: Dict[str, Dict[int, AssociationEntry]] = {}

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("=")
        if len(fields) != TRANSCRIPT_FIELDS:
            raise WrongFieldCount(lineno, len(fields), TRANSCRIPT_FIELDS)
        values = [_unquote(f, lineno) for f in fields]

        cue = values[0].lower()
        if not cue:
            raise MalformedLine(lineno, "empty cue word")
        if cue not in cue_set:
            raise UnknownCue(values[0], lineno=lineno)
        if cue in slots:
            raise DuplicateCue(participant_id or "<transcript>", cue)

        ratings: List[Optional[int]] = []
        for raw in values[1::2]:
            try:
                ratings.append(_parse_rating(raw))
            except ValueError as e:
                raise MalformedLine(lineno, f"bad rating {raw!r} ({e})")

        cue_ratings[cue] = ratings[0]
        slots[cue] = {
            i: AssociationEntry(text=values[2 + 2 * i], rating=ratings[1 + i])
            for i in range(ASSOCIATIONS_PER_CUE)
        }

    missing = [c for c in cues if c not in slots]
    if missing:
        logger.warning("Transcript %s has no line for cues: %s", participant_id or "<unnamed>", ", ".join(missing))

    pid = participant_id or transcript_id(text)
    return _assemble(pid, source_tag, group_tag, cue_ratings, slots, cues)


def render_transcript(record: ParticipantRecord) -> str:
    """Render a record in the answer-line grammar, one line per response.

    Responses with neither associations nor a cue rating get no line; shorter
    responses are padded with blank slots, which parse_transcript drops again.
    """
    lines = []
    for response in record.responses:
        if not response.associations and response.cue_rating is None:
            continue
        entries = list(response.associations)
        entries += [AssociationEntry("")] * (ASSOCIATIONS_PER_CUE - len(entries))
        tokens = [response.cue, _rating_token(response.cue_rating)]
        for entry in entries:
            tokens += [entry.text, _rating_token(entry.rating)]
        for token in tokens:
            if "=" in token or "\n" in token or any(ch in _DOUBLE_QUOTES for ch in token) or token[:1] in _QUOTE_CHARS or token[-1:] in _QUOTE_CHARS:
                raise ValueError(f"cannot render token {token!r} in the answer-line grammar")
        lines.append("=".join(f'"{t}"' for t in tokens))
    return "\n".join(lines) + "\n"


def _rating_token(rating: Optional[int]) -> str:
    return "" if rating is None else str(rating)


# ---------------------------
# Exclusion rule
# ---------------------------

def blank_fraction(record: ParticipantRecord, cues: Sequence[str] = DEFAULT_CUES) -> float:
    """Blank association slots over 3 x |cues|; ratings never count."""
    expected = ASSOCIATIONS_PER_CUE * len(cues)
    if expected == 0:
        return 0.0
    cue_set = set(cues)
    filled = sum(r.filled for r in record.responses if r.cue in cue_set)
    return (expected - filled) / expected


def exclude_sparse_participants(
    records: Sequence[ParticipantRecord],
    max_blank_fraction: float = 0.25,
    cues: Sequence[str] = DEFAULT_CUES,
) -> Tuple[List[ParticipantRecord], List[ParticipantRecord]]:
    """Split records into (kept, dropped); dropped iff blank fraction > threshold."""
    if not 0.0 <= max_blank_fraction <= 1.0:
        raise ValueError(f"max_blank_fraction must be in [0, 1], got {max_blank_fraction}")
    kept: List[ParticipantRecord] = []
    dropped: List[ParticipantRecord] = []
    for record in records:
        if blank_fraction(record, cues) > max_blank_fraction:
            dropped.append(record)
        else:
            kept.append(record)
    if dropped:
        logger.info("Excluded %d of %d participants (blank fraction > %.2f)", len(dropped), len(records), max_blank_fraction)
    return kept, dropped


# ---------------------------
# File loading
# ---------------------------

def read_tabular_file(
    path: Path,
    schema: Optional[ColumnMapping] = None,
    cues: Sequence[str] = DEFAULT_CUES,
    default_source: Source = Source.HUMAN,
) -> List[ParticipantRecord]:
    if not path.is_file():
        raise InputNotFound(str(path))
    return parse_tabular(path.read_bytes(), schema, cues, default_source, name=str(path))


def read_transcript_dir(
    path: Path,
    source_tag: Source,
    group_tag: Group,
    cues: Sequence[str] = DEFAULT_CUES,
) -> List[ParticipantRecord]:
    """One participant per ``*.txt`` file; participant id is the file stem."""
    if path.is_file():
        files = [path]
    elif path.is_dir():
        files = sorted(path.glob("*.txt"))
    else:
        raise InputNotFound(str(path))
    records = []
    for file in files:
        try:
            text = file.read_text(encoding="utf-8")
        except UnicodeDecodeError as e:
            raise UnreadableInput(str(file), f"not valid UTF-8 ({e.reason} at byte {e.start})")
        records.append(parse_transcript(text, source_tag, group_tag, participant_id=file.stem, cues=cues))
    logger.info("Parsed %d transcripts from %s", len(records), path)
    return records


def load_inputs(config) -> List[ParticipantRecord]:
    """Read every input named by a RunConfig, in configured order.

    Participant ids must be unique across all inputs.
    """
    records: List[ParticipantRecord] = []
    for spec in config.inputs:
        if spec.format == "transcript":
            batch = read_transcript_dir(spec.path, spec.source, spec.group, config.cues)
        else:
            batch = read_tabular_file(spec.path, config.columns, config.cues, spec.source)
        records.extend(batch)

    seen: Dict[str, int] = {}
    for record in records:
        seen[record.participant_id] = seen.get(record.participant_id, 0) + 1
    duplicates = sorted(pid for pid, count in seen.items() if count > 1)
    if duplicates:
        raise ValidationError(
            f"participant ids repeated across inputs: {', '.join(duplicates[:5])}",
            participants=duplicates[:20],
        )
    return records
