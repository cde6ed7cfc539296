"""Unigram language model: relative corpus frequency with a fixed OOV floor."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import ValidationError
from .records import Hypothesis, HypothesisList

DEFAULT_OOV_FLOOR = 1e-9


@dataclass(frozen=True)
class UnigramModel:
    counts: Mapping[str, int]
    total_tokens: int
    oov_floor: float = DEFAULT_OOV_FLOOR
    _probs: Mapping[str, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        counts = MappingProxyType(dict(self.counts))
        object.__setattr__(self, "counts", counts)
        object.__setattr__(
            self, "_probs",
            MappingProxyType({w: n / self.total_tokens for w, n in counts.items()}),
        )

    @property
    def probs(self) -> Mapping[str, float]:
        return self._probs

    def prob(self, word: str) -> float:
        return self._probs.get(word, self.oov_floor)

    def __contains__(self, word: str) -> bool:
        return word in self._probs

    def __len__(self) -> int:
        return len(self._probs)


def merge_counts(corpora: Iterable[Mapping[str, int]]) -> dict[str, int]:
    """Sum word counts over several corpora."""
    total: Counter = Counter()
    for counts in corpora:
        total.update(counts)
    return dict(total)


def build_ulm(counts: Mapping[str, int], oov_floor: float = DEFAULT_OOV_FLOOR) -> UnigramModel:
    if not counts:
        raise ValidationError("cannot build a unigram model from empty counts")
    bad = [w for w, n in counts.items() if n < 1]
    if bad:
        raise ValidationError(f"counts must be >= 1; offending words: {bad[:5]}")
    total = sum(counts.values())
    smallest = min(counts.values()) / total
    if not 0.0 < oov_floor < smallest:
        raise ValidationError(
            f"oov_floor {oov_floor!r} must lie in (0, {smallest!r}), the smallest in-vocabulary probability"
        )
    return UnigramModel(counts, total, oov_floor)


def ulm_rerank(hyps: HypothesisList, model: UnigramModel) -> HypothesisList:
    """Multiply each baseline score by the word's unigram probability and re-sort."""
    rescored = [Hypothesis(h.word, h.score * model.prob(h.word), h.score) for h in hyps.hypotheses]
    return HypothesisList.sorted(hyps.image_id, rescored, hyps.gold)
