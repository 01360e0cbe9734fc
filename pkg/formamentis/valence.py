"""Statistical valence labels.

A word's ratings are compared with the pooled ratings of every other word in
the cohort by a two-group Kruskal-Wallis test. Significant words are
Positive or Negative depending on which side has the higher mean rank.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import chi2, rankdata, tiecorrect

from .errors import EmptyCohort, EmptyGroup
from .models import NEUTRAL_RATING, is_valid_rating
from .normalize import NormalizedCohort

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.1
DEFAULT_MIN_N = 3

IMPUTE = "impute"
EXCLUDE = "exclude"
BLANK_POLICIES = (IMPUTE, EXCLUDE)


class Valence(str, Enum):
    POSITIVE = "positive"
    NEUTRAL = "neutral"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class RatingSample:
    word: str
    ratings: Tuple[int, ...]

    def __post_init__(self):
        if not self.ratings:
            raise EmptyGroup(f"no ratings for {self.word!r}", word=self.word)
        bad = [r for r in self.ratings if not is_valid_rating(r)]
        if bad:
            raise ValueError(f"ratings for {self.word!r} outside [1, 5]: {bad}")


@dataclass(frozen=True)
class ValenceLabel:
    word: str
    label: Valence
    h_statistic: float
    p_value: float
    n_word: int
    n_rest: int

    @classmethod
    def neutral(cls, word: str, n_word: int = 0, n_rest: int = 0) -> "ValenceLabel":
        return cls(word, Valence.NEUTRAL, 0.0, 1.0, n_word, n_rest)

    def to_dict(self) -> Dict[str, object]:
        return {
            "word": self.word,
            "label": self.label.value,
            "h": self.h_statistic,
            "p": self.p_value,
            "n_word": self.n_word,
            "n_rest": self.n_rest,
        }


def _ranks(a: Sequence[float], b: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    pooled = np.concatenate([np.asarray(a, dtype=float), np.asarray(b, dtype=float)])
    ranks = rankdata(pooled)
    return ranks, pooled


def kruskal_wallis_two_group(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    """Tie-corrected Kruskal-Wallis H for two samples, chi-square p with 1 dof.

    All pooled values tied -> (0.0, 1.0).
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptyGroup("both samples need at least one value", n_a=len(a), n_b=len(b))
    ranks, _ = _ranks(a, b)
    correction = tiecorrect(ranks)
    if correction == 0:
        return 0.0, 1.0
    n = len(ranks)
    n_a = len(a)
    centre = (n + 1) / 2.0
    spread = n_a * (ranks[:n_a].mean() - centre) ** 2 + (n - n_a) * (ranks[n_a:].mean() - centre) ** 2
    h = 12.0 / (n * (n + 1)) * spread / correction
    p = float(chi2.sf(h, 1))
    return float(h), min(1.0, max(0.0, p))


def mean_ranks(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    ranks, _ = _ranks(a, b)
    return float(ranks[: len(a)].mean()), float(ranks[len(a):].mean())


def label_ratings(
    word: str,
    ratings: Sequence[float],
    rest: Sequence[float],
    alpha: float = DEFAULT_ALPHA,
    min_n: int = DEFAULT_MIN_N,
) -> ValenceLabel:
    """Label a word from plain real-valued samples."""
    if len(rest) == 0:
        raise EmptyGroup(f"no ratings outside {word!r}", word=word)
    if len(ratings) < min_n:
        return ValenceLabel.neutral(word, len(ratings), len(rest))
    h, p = kruskal_wallis_two_group(ratings, rest)
    label = Valence.NEUTRAL
    if p < alpha:
        word_rank, rest_rank = mean_ranks(ratings, rest)
        if word_rank > rest_rank:
            label = Valence.POSITIVE
        elif word_rank < rest_rank:
            label = Valence.NEGATIVE
    return ValenceLabel(word, label, h, p, len(ratings), len(rest))


def label_word(
    word: RatingSample,
    rest: Sequence[float],
    alpha: float = DEFAULT_ALPHA,
    min_n: int = DEFAULT_MIN_N,
) -> ValenceLabel:
    return label_ratings(word.word, word.ratings, rest, alpha=alpha, min_n=min_n)


def collect_ratings(cohort: NormalizedCohort, blank_policy: str = IMPUTE) -> Dict[str, List[int]]:
    """word -> ratings, pooling cue ratings and association ratings.

    Words present without any usable rating map to an empty list.
    """
    if blank_policy not in BLANK_POLICIES:
        raise ValueError(f"blank_policy must be one of {BLANK_POLICIES}, got {blank_policy!r}")
    ratings: Dict[str, List[int]] = defaultdict(list)

    def add(word: str, rating):
        bucket = ratings[word]
        if rating is not None:
            bucket.append(rating)
        elif blank_policy == IMPUTE:
            bucket.append(NEUTRAL_RATING)

    for record in cohort.records:
        for response in record.responses:
            add(response.cue, response.cue_rating)
            for entry in response.associations:
                add(entry.text, entry.rating)
    return dict(ratings)


def label_cohort(
    cohort: NormalizedCohort,
    alpha: float = DEFAULT_ALPHA,
    min_n: int = DEFAULT_MIN_N,
    blank_policy: str = IMPUTE,
) -> Dict[str, ValenceLabel]:
    """Label every cue and association word of a cohort, keyed and ordered by word."""
    if not cohort.records:
        raise EmptyCohort("cannot label an empty cohort")
    ratings = collect_ratings(cohort, blank_policy)
    total = sum(len(v) for v in ratings.values())
    pooled = np.concatenate([np.asarray(ratings[w], dtype=float) for w in sorted(ratings)]) if total else np.array([])

    labels: Dict[str, ValenceLabel] = {}
    offset = 0
    for word in sorted(ratings):
        own = ratings[word]
        rest = np.concatenate([pooled[:offset], pooled[offset + len(own):]])
        offset += len(own)
        if not own or len(rest) == 0:
            labels[word] = ValenceLabel.neutral(word, len(own), len(rest))
            continue
        labels[word] = label_ratings(word, own, rest, alpha=alpha, min_n=min_n)

    counts = {v: sum(1 for l in labels.values() if l.label is v) for v in Valence}
    logger.info(
        "Labelled %d words: %d positive, %d neutral, %d negative",
        len(labels),
        counts[Valence.POSITIVE],
        counts[Valence.NEUTRAL],
        counts[Valence.NEGATIVE],
    )
    return labels


def write_label_report(labels: Mapping[str, ValenceLabel], path: Path, delimiter: str = ",") -> Path:
    """word, label, h, p, n_word, n_rest; floats at 6 significant digits."""
    rows = [labels[w].to_dict() for w in sorted(labels)]
    frame = pd.DataFrame(rows, columns=["word", "label", "h", "p", "n_word", "n_rest"])
    for column in ("h", "p"):
        frame[column] = frame[column].map(lambda x: format(float(x), ".6g"))
    frame.to_csv(path, sep=delimiter, index=False, lineterminator="\n")
    return path
