"""Association preprocessing: case folding, lemma mapping, singularization,
junk removal and the idiosyncrasy filter.

Every association slot produces one provenance entry, so a normalized cohort
can be rebuilt from the raw records and its log alone.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import EmptyCohort, InputNotFound, InvalidLemmaMap
from .models import AssociationEntry, ParticipantRecord

logger = logging.getLogger(__name__)

REMOVED = None

# provenance reasons
UNCHANGED = "unchanged"
BLANK = "removed:blank"
NON_LETTER = "removed:non_letter"
SINGLE_LETTER = "removed:single_letter"
IDIOSYNCRATIC = "removed:idiosyncratic"


@dataclass(frozen=True)
class LemmaMap:
    """raw form -> base form. Base forms map to themselves or are absent."""

    entries: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        normalized = {k.strip().lower(): v.strip().lower() for k, v in dict(self.entries).items()}
        for raw, base in normalized.items():
            if not raw or not base:
                raise InvalidLemmaMap("lemma map entries must be non-empty")
            if normalized.get(base, base) != base:
                raise InvalidLemmaMap(
                    f"lemma map is not idempotent: {raw!r} -> {base!r} -> {normalized[base]!r}",
                    raw=raw,
                    base=base,
                )
        object.__setattr__(self, "entries", normalized)
        object.__setattr__(self, "_bases", frozenset(normalized.values()))

    def lookup(self, word: str) -> str:
        return self.entries.get(word, word)

    def __contains__(self, word: str) -> bool:
        return word in self.entries or word in self._bases

    @classmethod
    def parse(cls, text: str) -> "LemmaMap":
        """One ``raw<TAB>base`` pair per line; ``#`` starts a comment."""
        entries: Dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            content = line.split("#", 1)[0].strip()
            if not content:
                continue
            parts = [p.strip() for p in content.split("\t")]
            parts = [p for p in parts if p]
            if len(parts) != 2:
                raise InvalidLemmaMap(f"Line {lineno}: expected 'raw<TAB>base'", lineno=lineno)
            entries[parts[0]] = parts[1]
        return cls(entries)

    @classmethod
    def load(cls, path: Optional[Path]) -> "LemmaMap":
        if path is None:
            return cls()
        if not path.is_file():
            raise InputNotFound(str(path))
        return cls.parse(path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ProvenanceEntry:
    participant_id: str
    cue: str
    position: int
    raw: str
    normalized: Optional[str]
    reason: str
    # 0 = normalization (raw slot positions); n = n-th filter pass (positions after pass n-1)
    stage: int = 0


@dataclass(frozen=True)
class NormalizedCohort:
    records: Tuple[ParticipantRecord, ...]
    provenance_log: Tuple[ProvenanceEntry, ...] = ()
    min_participants: int = 1

    @property
    def participant_count(self) -> int:
        return len(self.records)

    def association_count(self) -> int:
        return sum(1 for r in self.records for _ in r.iter_associations())


# ---------------------------
# Word pipeline
# ---------------------------

def _fold(text: str, lemma_map: LemmaMap) -> str:
    return lemma_map.lookup(text.strip().lower())


def _singularize(word: str, vocabulary: Set[str], lemma_map: LemmaMap) -> str:
    """Strip a trailing "s" while the stripped form is attested; repeat to a fixed point."""
    while word.endswith("s") and len(word) > 1:
        stem = word[:-1]
        if stem in vocabulary or stem in lemma_map:
            word = lemma_map.lookup(stem)
        else:
            break
    return word


def normalize_word(raw: str, vocabulary: Set[str], lemma_map: LemmaMap) -> Tuple[Optional[str], str]:
    """Return (normalized text or REMOVED, reason)."""
    trimmed = raw.strip()
    if not trimmed:
        return REMOVED, BLANK
    steps = ["trim"] if trimmed != raw else []
    lowered = trimmed.lower()
    if lowered != trimmed:
        steps.append("lowercase")
    mapped = lemma_map.lookup(lowered)
    if mapped != lowered:
        steps.append("lemma")
    singular = _singularize(mapped, vocabulary, lemma_map)
    if singular != mapped:
        steps.append("plural")
    if not singular.isalpha():
        return REMOVED, NON_LETTER
    if len(singular) < 2:
        return REMOVED, SINGLE_LETTER
    return singular, "+".join(steps) or UNCHANGED


def _vocabulary(records: Iterable[ParticipantRecord], lemma_map: LemmaMap) -> Set[str]:
    words: Set[str] = set()
    for record in records:
        for response in record.responses:
            words.add(_fold(response.cue, lemma_map))
            for entry in response.associations:
                if not entry.is_blank:
                    words.add(_fold(entry.text, lemma_map))
    return words


def _rebuild(record: ParticipantRecord, texts: Mapping[Tuple[str, int], Optional[str]]) -> ParticipantRecord:
    responses = []
    for response in record.responses:
        kept = []
        for position, entry in enumerate(response.associations):
            text = texts.get((response.cue, position), entry.text)
            if text is not REMOVED:
                kept.append(AssociationEntry(text=text, rating=entry.rating))
        responses.append(replace(response, associations=tuple(kept)))
    return replace(record, responses=tuple(responses))


def normalize_cohort(records: Sequence[ParticipantRecord], lemma_map: Optional[LemmaMap] = None) -> NormalizedCohort:
    """trim -> lowercase -> lemma lookup -> plural rule -> junk filter, per association.

    Removed slots disappear from the records; every slot is logged.
    """
    lemma_map = lemma_map or LemmaMap()
    vocabulary = _vocabulary(records, lemma_map)
    cache: Dict[str, Tuple[Optional[str], str]] = {}
    log: List[ProvenanceEntry] = []
    normalized: List[ParticipantRecord] = []
    removed = 0

    for record in records:
        texts: Dict[Tuple[str, int], Optional[str]] = {}
        for cue, position, entry in record.iter_associations():
            if entry.text not in cache:
                cache[entry.text] = normalize_word(entry.text, vocabulary, lemma_map)
            text, reason = cache[entry.text]
            texts[(cue, position)] = text
            removed += text is REMOVED
            log.append(ProvenanceEntry(record.participant_id, cue, position, entry.text, text, reason))
        normalized.append(_rebuild(record, texts))

    logger.info("Normalized %d association slots, removed %d", len(log), removed)
    return NormalizedCohort(records=tuple(normalized), provenance_log=tuple(log))


def filter_idiosyncratic(cohort: NormalizedCohort, min_participants: int = 2) -> NormalizedCohort:
    """Keep (cue, word) pairs produced by at least ``min_participants`` distinct participants."""
    if min_participants < 1:
        raise ValueError(f"min_participants must be >= 1, got {min_participants}")

    producers: Dict[Tuple[str, str], Set[str]] = defaultdict(set)
    for record in cohort.records:
        for cue, _, entry in record.iter_associations():
            producers[(cue, entry.text)].add(record.participant_id)

    survivors = {pair for pair, who in producers.items() if len(who) >= min_participants}
    if not survivors:
        raise EmptyCohort(
            f"No association is shared by {min_participants} participants",
            min_participants=min_participants,
        )

    log = list(cohort.provenance_log)
    stage = max((e.stage for e in log), default=0) + 1
    filtered: List[ParticipantRecord] = []
    for record in cohort.records:
        responses = []
        for response in record.responses:
            kept = []
            for position, entry in enumerate(response.associations):
                if (response.cue, entry.text) in survivors:
                    kept.append(entry)
                else:
                    log.append(
                        ProvenanceEntry(record.participant_id, response.cue, position, entry.text, REMOVED, IDIOSYNCRATIC, stage)
                    )
            responses.append(replace(response, associations=tuple(kept)))
        filtered.append(replace(record, responses=tuple(responses)))

    dropped = len(log) - len(cohort.provenance_log)
    logger.info(
        "Idiosyncrasy filter (>= %d participants): kept %d (cue, word) pairs, removed %d slots",
        min_participants,
        len(survivors),
        dropped,
    )
    return NormalizedCohort(
        records=tuple(filtered),
        provenance_log=tuple(log),
        min_participants=max(min_participants, cohort.min_participants),
    )


def replay_provenance(raw_records: Sequence[ParticipantRecord], log: Sequence[ProvenanceEntry]) -> Tuple[ParticipantRecord, ...]:
    """Rebuild a cohort's records from raw records and its provenance log.

    Each stage addresses slot positions as they stood after the previous
    stage, so stages are applied in order.
    """
    records = list(raw_records)
    stages: Dict[int, List[ProvenanceEntry]] = defaultdict(list)
    for entry in log:
        stages[entry.stage].append(entry)

    for stage in sorted(stages):
        batch = stages[stage]
        by_participant: Dict[str, Dict[Tuple[str, int], Optional[str]]] = defaultdict(dict)
        for entry in batch:
            by_participant[entry.participant_id][(entry.cue, entry.position)] = entry.normalized
        records = [_rebuild(r, by_participant.get(r.participant_id, {})) for r in records]
    return tuple(records)


def cohort_words(cohort: NormalizedCohort) -> List[str]:
    """Sorted cue and association words of a cohort."""
    words: Set[str] = set()
    for record in cohort.records:
        for response in record.responses:
            words.add(response.cue)
            words.update(entry.text for entry in response.associations)
    return sorted(words)
