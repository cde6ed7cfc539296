"""Core record types: hypothesis lists, visual contexts, embeddings, lexicons."""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .errors import ValidationError


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def match_key(word: str, case_sensitive: bool = False) -> str:
    """Key used when two words are compared for equality during evaluation."""
    word = nfc(word)
    return word if case_sensitive else word.casefold()


class Hypothesis(NamedTuple):
    word: str
    score: float
    # score before the most recent rescoring, kept for audit
    baseline: float | None = None


@dataclass(frozen=True)
class HypothesisList:
    """The k-best candidate words produced by a recognizer for one word image."""

    image_id: str
    hypotheses: tuple[Hypothesis, ...]
    gold: str | None = None

    def __post_init__(self):
        hyps = tuple(Hypothesis(*h) for h in self.hypotheses)
        if not hyps:
            raise ValidationError(f"{self.image_id!r}: empty hypothesis list")
        for h in hyps:
            if not isinstance(h.word, str) or not h.word:
                raise ValidationError(f"{self.image_id!r}: empty candidate word")
            if not (math.isfinite(h.score) and 0.0 < h.score <= 1.0):
                raise ValidationError(
                    f"{self.image_id!r}: score {h.score!r} for {h.word!r} outside (0, 1]"
                )
        if any(a.score < b.score for a, b in zip(hyps, hyps[1:])):
            raise ValidationError(f"{self.image_id!r}: hypotheses not sorted by score")
        object.__setattr__(self, "hypotheses", hyps)

    @classmethod
    def sorted(cls, image_id: str, hypotheses: Iterable, gold: str | None = None) -> HypothesisList:
        """Build a list, stably re-sorting candidates by descending score."""
        hyps = sorted((Hypothesis(*h) for h in hypotheses), key=lambda h: -h.score)
        return cls(image_id, tuple(hyps), gold)

    @property
    def words(self) -> list[str]:
        return [h.word for h in self.hypotheses]

    @property
    def top(self) -> Hypothesis:
        return self.hypotheses[0]

    def truncate(self, k: int) -> HypothesisList:
        if k < 1:
            raise ValidationError(f"k must be positive, got {k}")
        if len(self.hypotheses) <= k:
            return self
        return HypothesisList(self.image_id, self.hypotheses[:k], self.gold)

    def __len__(self) -> int:
        return len(self.hypotheses)


class DetectedObject(NamedTuple):
    label: str
    confidence: float


@dataclass(frozen=True)
class VisualContext:
    """Object labels an image classifier assigned to the whole image."""

    image_id: str
    objects: tuple[DetectedObject, ...] = ()

    def __post_init__(self):
        objs = tuple(DetectedObject(*o) for o in self.objects)
        seen = set()
        for o in objs:
            if not isinstance(o.label, str) or not o.label:
                raise ValidationError(f"{self.image_id!r}: empty object label")
            if o.label in seen:
                raise ValidationError(f"{self.image_id!r}: duplicate object label {o.label!r}")
            seen.add(o.label)
            if not (math.isfinite(o.confidence) and 0.0 <= o.confidence <= 1.0):
                raise ValidationError(
                    f"{self.image_id!r}: confidence {o.confidence!r} for {o.label!r} outside [0, 1]"
                )
        if any(a.confidence < b.confidence for a, b in zip(objs, objs[1:])):
            raise ValidationError(f"{self.image_id!r}: objects not sorted by confidence")
        object.__setattr__(self, "objects", objs)

    @property
    def top(self) -> DetectedObject | None:
        return self.objects[0] if self.objects else None


class EmbeddingSpace:
    """Read-only word -> vector table of a fixed dimension.

    Vectors are stored as rows of one float64 matrix; ``duplicates`` counts
    words dropped on load because an earlier row already defined them.
    """

    def __init__(self, table: Mapping[str, Iterable[float]], dimension: int | None = None,
                 duplicates: int = 0):
        words = list(table)
        if not words:
            raise ValidationError("embedding table is empty")
        if dimension is None:
            dimension = len(np.asarray(table[words[0]]))
        if dimension < 1:
            raise ValidationError(f"dimension must be positive, got {dimension}")
        matrix = np.zeros((len(words), dimension), dtype=np.float64)
        for i, w in enumerate(words):
            row = np.asarray(table[w], dtype=np.float64)
            if row.shape != (dimension,):
                raise ValidationError(f"vector for {w!r} has shape {row.shape}, expected ({dimension},)")
            matrix[i] = row
        if not np.all(np.isfinite(matrix)):
            raise ValidationError("embedding contains non-finite components")
        norms = np.linalg.norm(matrix, axis=1)
        if not np.any(norms > 0):
            raise ValidationError("every embedding vector has zero norm")
        matrix.setflags(write=False)
        norms.setflags(write=False)
        self.dimension = dimension
        self.words = tuple(words)
        self.vectors = matrix
        self.norms = norms
        self.duplicates = duplicates
        self._index = {w: i for i, w in enumerate(words)}

    @property
    def zero_norm(self) -> tuple[str, ...]:
        return tuple(w for w, n in zip(self.words, self.norms) if n == 0.0)

    @property
    def table(self) -> dict[str, np.ndarray]:
        return {w: self.vectors[i] for w, i in self._index.items()}

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[self._index[word]]

    def get(self, word: str) -> np.ndarray | None:
        i = self._index.get(word)
        return None if i is None else self.vectors[i]

    def usable(self, word: str) -> bool:
        """True when ``word`` has a nonzero vector, i.e. a defined cosine."""
        i = self._index.get(word)
        return i is not None and self.norms[i] > 0.0

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[str]:
        return iter(self.words)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingSpace):
            return NotImplemented
        return (self.dimension == other.dimension and self.words == other.words
                and np.array_equal(self.vectors, other.vectors))

    def __repr__(self) -> str:
        return f"EmbeddingSpace(words={len(self)}, dimension={self.dimension})"


@dataclass(frozen=True)
class Dictionary:
    """Reference lexicon, used only to select the ``dict`` evaluation subset."""

    entries: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.entries:
            raise ValidationError("dictionary is empty")
        object.__setattr__(self, "entries", frozenset(nfc(e) for e in self.entries))

    def keys(self, case_sensitive: bool = False) -> frozenset[str]:
        if case_sensitive:
            return self.entries
        return frozenset(e.casefold() for e in self.entries)

    def __contains__(self, word: str) -> bool:
        return nfc(word) in self.entries

    def __len__(self) -> int:
        return len(self.entries)
