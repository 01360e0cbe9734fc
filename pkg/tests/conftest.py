from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from formamentis.ingest import parse_tabular
from formamentis.models import DEFAULT_CUES, AssociationEntry, CueResponse, Group, ParticipantRecord, Source
from formamentis.normalize import NormalizedCohort

FIXTURES = Path(__file__).parent / "fixtures"

# Five candidate answers per cue; overlaps between cues close triangles in the projection.
CUE_WORDS = {
    "art": ["beauty", "color", "music", "creativity", "painting"],
    "biology": ["cell", "life", "nature", "evolution", "chemistry"],
    "chemistry": ["molecule", "reaction", "lab", "atom", "biology"],
    "complex": ["difficult", "system", "network", "structure", "mathematics"],
    "life": ["nature", "family", "love", "death", "biology"],
    "mathematics": ["number", "equation", "logic", "physics", "difficult"],
    "physics": ["atom", "energy", "equation", "mathematics", "universe"],
    "school": ["teacher", "exam", "study", "friends", "university"],
    "system": ["network", "structure", "complex", "order", "computer"],
    "university": ["study", "exam", "research", "lab", "school"],
}
POSITIVE_WORDS = {"beauty", "music", "creativity", "love", "nature", "friends", "family", "life", "art", "universe", "research"}
NEGATIVE_WORDS = {"exam", "difficult", "death"}

COLUMNS = ["participant_id", "group", "source", "cue", "cue_rating", "position", "association", "rating"]


def _rating(rng: np.random.Generator, word: str) -> int:
    if word in POSITIVE_WORDS:
        return int(rng.integers(4, 6))
    if word in NEGATIVE_WORDS:
        return int(rng.integers(1, 3))
    return int(rng.integers(2, 5))


def cohort_rows(
    n: int = 12,
    seed: int = 7,
    group: str = "trainee",
    source: str = "human",
    prefix: str = "p",
    blank_ratings: bool = False,
) -> pd.DataFrame:
    """Synthetic long-format export.

    p01 leaves one slot blank, p02 gives an idiosyncratic answer, p03 writes
    "Cells" and p04 writes "3d".
    """
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        pid = f"{prefix}{i + 1:02d}"
        for cue in DEFAULT_CUES:
            picks = rng.choice(len(CUE_WORDS[cue]), size=3, replace=False)
            cue_rating = _rating(rng, cue)
            for position, k in enumerate(picks, start=1):
                word = CUE_WORDS[cue][k]
                if i == 0 and cue == "art" and position == 3:
                    word = ""
                elif i == 1 and cue == "art" and position == 3:
                    word = "zeppelin"
                elif i == 2 and cue == "biology" and position == 1:
                    word = "Cells"
                elif i == 3 and cue == "art" and position == 2:
                    word = "3d"
                rating = _rating(rng, word.lower())
                rows.append(
                    {
                        "participant_id": pid,
                        "group": group,
                        "source": source,
                        "cue": cue,
                        "cue_rating": "" if blank_ratings else str(cue_rating),
                        "position": str(position),
                        "association": word,
                        "rating": "" if blank_ratings else str(rating),
                    }
                )
    return pd.DataFrame(rows, columns=COLUMNS)


@pytest.fixture
def cohort_csv(tmp_path):
    path = tmp_path / "cohort.csv"
    cohort_rows().to_csv(path, index=False, lineterminator="\n")
    return path


@pytest.fixture
def cohort_export():
    """cohort_export(**kwargs) -> UTF-8 bytes of cohort_rows(**kwargs)."""

    def _export(**kwargs):
        return cohort_rows(**kwargs).to_csv(index=False, lineterminator="\n").encode("utf-8")

    return _export


@pytest.fixture
def blank_ratings_csv(tmp_path):
    path = tmp_path / "blank_ratings.csv"
    cohort_rows(blank_ratings=True).to_csv(path, index=False, lineterminator="\n")
    return path


@pytest.fixture
def golden_transcript():
    return (FIXTURES / "golden_transcript.txt").read_text(encoding="utf-8")


@pytest.fixture
def lemma_map_path():
    return FIXTURES / "lemma_map.tsv"


@pytest.fixture
def make_record():
    """make_record("p1", {"art": ["beauty", ("color", 4)]}, cue_ratings={"art": 5})."""

    def _make(pid, answers, cue_ratings=None, group=Group.TRAINEE, source=Source.HUMAN):
        cue_ratings = cue_ratings or {}
        responses = []
        for cue, items in answers.items():
            entries = []
            for item in items:
                text, rating = item if isinstance(item, tuple) else (item, None)
                entries.append(AssociationEntry(text=text, rating=rating))
            responses.append(CueResponse(cue=cue, cue_rating=cue_ratings.get(cue), associations=tuple(entries)))
        return ParticipantRecord(participant_id=pid, source=source, group=group, responses=tuple(responses))

    return _make


@pytest.fixture
def make_cohort():
    def _make(records):
        return NormalizedCohort(records=tuple(records))

    return _make


@pytest.fixture
def cohort_records():
    data = cohort_rows().to_csv(index=False, lineterminator="\n").encode("utf-8")
    return parse_tabular(data)
