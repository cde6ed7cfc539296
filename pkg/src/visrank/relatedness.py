"""Word/object relatedness and its conversion into re-ranking factors.

Three conversions are provided:

* :func:`swe_prob` turns an embedding cosine into a conditional probability
  by raising the word's unigram probability to a similarity-dependent power.
* :func:`tdp_prob` reads the conditional probability off co-occurrence
  counts gathered from annotated training images.
* :func:`twe_prob` maps a cosine through ``tanh`` and divides by the object
  confidence. The result is an unnormalized score and can exceed 1.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .errors import DomainError, ValidationError
from .records import VisualContext

DEFAULT_TDP_EPSILON = 1e-6


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DomainError(f"cosine of vectors with shapes {u.shape} and {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DomainError("cosine undefined for a zero-norm vector")
    return float(min(1.0, max(-1.0, np.dot(u, v) / (nu * nv))))


def swe_prob(sim: float, p_w: float, p_c: float) -> float:
    """P(w)^alpha with alpha = ((1 - sim) / (1 + sim)) ** (1 - P(c)).

    ``sim = -1`` is rejected: the base of alpha diverges there.
    """
    return p_w ** _swe_exponent(sim, p_w, p_c)


def swe_log_prob(sim: float, p_w: float, p_c: float) -> float:
    """Natural log of :func:`swe_prob`; finite even where the probability underflows."""
    return _swe_exponent(sim, p_w, p_c) * math.log(p_w)


def _swe_exponent(sim: float, p_w: float, p_c: float) -> float:
    if not -1.0 <= sim <= 1.0:
        raise DomainError(f"similarity {sim!r} outside [-1, 1]")
    if sim == -1.0:
        raise DomainError("similarity -1 makes the exponent base unbounded")
    if not 0.0 < p_w <= 1.0:
        raise DomainError(f"word probability {p_w!r} outside (0, 1]")
    if not 0.0 < p_c <= 1.0:
        raise DomainError(f"object probability {p_c!r} outside (0, 1]")
    return ((1.0 - sim) / (1.0 + sim)) ** (1.0 - p_c)


def twe_prob(sim: float, p_c: float) -> float:
    if not math.isfinite(sim):
        raise DomainError(f"similarity {sim!r} is not finite")
    if not 0.0 < p_c <= 1.0:
        raise DomainError(f"object probability {p_c!r} outside (0, 1]")
    return (math.tanh(sim) + 1.0) / (2.0 * p_c)


@dataclass(frozen=True)
class CooccurrenceTable:
    """Per-object image counts and (word, object) pair counts.

    ``skipped`` records how many annotations :func:`build_cooccurrence`
    dropped; it is bookkeeping and takes no part in equality.
    """

    pair_counts: Mapping[tuple[str, str], int] = field(default_factory=dict)
    ctx_counts: Mapping[str, int] = field(default_factory=dict)
    smoothing_epsilon: float = DEFAULT_TDP_EPSILON
    skipped: int = field(default=0, compare=False)

    def __post_init__(self):
        pairs = dict(self.pair_counts)
        ctxs = dict(self.ctx_counts)
        for key, n in [*pairs.items(), *ctxs.items()]:
            if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
                raise ValidationError(f"count for {key!r} must be a nonnegative integer, got {n!r}")
        for (w, c), n in pairs.items():
            if n > 0 and ctxs.get(c, 0) < n:
                raise ValidationError(
                    f"pair ({w!r}, {c!r}) count {n} exceeds object count {ctxs.get(c, 0)}"
                )
        if not (math.isfinite(self.smoothing_epsilon) and self.smoothing_epsilon >= 0.0):
            raise ValidationError(f"smoothing epsilon must be >= 0, got {self.smoothing_epsilon!r}")
        object.__setattr__(self, "pair_counts", MappingProxyType({k: int(v) for k, v in pairs.items()}))
        object.__setattr__(self, "ctx_counts", MappingProxyType({k: int(v) for k, v in ctxs.items()}))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CooccurrenceTable):
            return NotImplemented
        return (dict(self.pair_counts) == dict(other.pair_counts)
                and dict(self.ctx_counts) == dict(other.ctx_counts)
                and self.smoothing_epsilon == other.smoothing_epsilon)

    __hash__ = None

    def prob(self, word: str, obj: str, epsilon: float | None = None) -> float:
        return tdp_prob(self, word, obj, epsilon)


def tdp_prob(table: CooccurrenceTable, w: str, c: str, epsilon: float | None = None) -> float:
    """count(w, c) / count(c), or the smoothing floor for unseen pairs."""
    n_c = table.ctx_counts.get(c, 0)
    n_wc = table.pair_counts.get((w, c), 0)
    if n_c > 0 and n_wc > 0:
        return n_wc / n_c
    return table.smoothing_epsilon if epsilon is None else epsilon


def build_cooccurrence(annotations: Iterable[tuple[str | None, VisualContext | None]],
                       smoothing_epsilon: float = DEFAULT_TDP_EPSILON) -> CooccurrenceTable:
    """Count gold-word / top-object co-occurrences over training images.

    Annotations without a gold word or with an empty context are skipped.
    """
    pairs: Counter = Counter()
    ctxs: Counter = Counter()
    skipped = 0
    for gold, ctx in annotations:
        top = ctx.top if ctx is not None else None
        if not gold or top is None:
            skipped += 1
            continue
        pairs[gold, top.label] += 1
        ctxs[top.label] += 1
    return CooccurrenceTable(dict(pairs), dict(ctxs), smoothing_epsilon, skipped=skipped)
