"""Combine baseline scores with frequency and visual-context factors.

Every candidate's final score is a product of named factors, kept in the
output so that each ranking can be audited:

    BL    baseline recognizer probability
    ULM   unigram probability (preliminary stage)
    SWE   general-embedding relatedness probability
    TDP   training-data conditional probability
    TWE   task-embedding relatedness score

Only the most confident object of an image is used. The visual factors are
skipped (and ``fallback`` set) when there is no context, when the top object
is below the confidence threshold, or when it has no usable embedding.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import ConfigError, VisrankError
from .lm import UnigramModel
from .records import EmbeddingSpace, HypothesisList, VisualContext
from .relatedness import CooccurrenceTable, cosine, swe_log_prob, swe_prob, tdp_prob, twe_prob

log = logging.getLogger(__name__)

SCHEMES = ("BL", "ULM", "SWE", "SWE+TDP", "TDP+TWE", "SWE+TDP+TWE")
VISUAL_SCHEMES = SCHEMES[2:]
SCHEME_LABELS = {"BL": "Baseline"}

NO_CONTEXT = "no-context"
BELOW_THRESHOLD = "below-threshold"
OBJECT_OOV = "object-oov"


def scheme_factors(scheme: str) -> tuple[str, ...]:
    """Visual factors used by ``scheme``, in multiplication order."""
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    if scheme in ("BL", "ULM"):
        return ()
    parts = set(scheme.split("+"))
    return tuple(f for f in ("SWE", "TDP", "TWE") if f in parts)


@dataclass(frozen=True)
class RerankConfig:
    scheme: str = "SWE"
    # values above 1 switch the visual stage off entirely
    object_threshold: float = 0.2
    apply_ulm_stage: bool = True
    # None defers to the co-occurrence table's own floor
    tdp_epsilon: float | None = None

    def __post_init__(self):
        scheme_factors(self.scheme)
        if not self.object_threshold >= 0.0:
            raise ConfigError(f"object threshold must be >= 0, got {self.object_threshold!r}")
        if self.tdp_epsilon is not None and not self.tdp_epsilon >= 0.0:
            raise ConfigError(f"tdp epsilon must be >= 0, got {self.tdp_epsilon!r}")

    @property
    def uses_ulm(self) -> bool:
        return self.scheme == "ULM" or (self.scheme in VISUAL_SCHEMES and self.apply_ulm_stage)


@dataclass(frozen=True)
class Models:
    ulm: UnigramModel | None = None
    swe: EmbeddingSpace | None = None
    twe: EmbeddingSpace | None = None
    tdp: CooccurrenceTable | None = None

    def check(self, config: RerankConfig) -> None:
        factors = scheme_factors(config.scheme)
        need = {"ulm": config.uses_ulm or "SWE" in factors,
                "swe": "SWE" in factors, "twe": "TWE" in factors, "tdp": "TDP" in factors}
        missing = [name for name, needed in need.items() if needed and getattr(self, name) is None]
        if missing:
            raise ConfigError(f"scheme {config.scheme} needs models: {', '.join(missing)}")


@dataclass(frozen=True)
class RankedWord:
    word: str
    score: float
    factors: Mapping[str, float]
    # embedding spaces in which the word had no usable vector (sim taken as 0)
    oov: tuple[str, ...] = ()
    # sum of log factors; orders candidates whose float product underflows
    log_score: float | None = field(default=None, compare=False)


@dataclass(frozen=True)
class RankedOutput:
    image_id: str
    ranked: tuple[RankedWord, ...] = ()
    fallback: str | None = None
    error: str | None = None
    object: str | None = field(default=None, compare=False)

    @property
    def top(self) -> str | None:
        return self.ranked[0].word if self.ranked else None

    def to_json(self) -> dict:
        ranked = []
        for r in self.ranked:
            item = {"word": r.word, "score": r.score, "factors": dict(r.factors)}
            if r.log_score is not None:
                item["log_score"] = r.log_score
            if r.oov:
                item["oov"] = list(r.oov)
            ranked.append(item)
        out = {"image_id": self.image_id, "ranked": ranked, "fallback": self.fallback}
        if self.object is not None:
            out["object"] = self.object
        if self.error is not None:
            out["error"] = self.error
        return out

    @classmethod
    def from_json(cls, obj: dict) -> RankedOutput:
        ranked = tuple(
            RankedWord(r["word"], float(r["score"]), {k: float(v) for k, v in r["factors"].items()},
                       tuple(r.get("oov", ())), r.get("log_score"))
            for r in obj["ranked"]
        )
        if not isinstance(obj["image_id"], str):
            raise TypeError("image_id must be a string")
        return cls(obj["image_id"], ranked, obj.get("fallback"), obj.get("error"), obj.get("object"))


def _similarity(space: EmbeddingSpace, word: str, obj_vec) -> float | None:
    if not space.usable(word):
        return None
    return cosine(space[word], obj_vec)


def _gate(ctx: VisualContext | None, factors: tuple[str, ...], models: Models,
          threshold: float) -> str | None:
    top = ctx.top if ctx is not None else None
    if top is None:
        return NO_CONTEXT
    # a zero confidence leaves the TWE transform undefined, so it is always gated
    if top.confidence < threshold or top.confidence <= 0.0:
        return BELOW_THRESHOLD
    for name in ("SWE", "TWE"):
        if name in factors and not getattr(models, name.lower()).usable(top.label):
            return OBJECT_OOV
    return None


def rerank(hyps: HypothesisList, ctx: VisualContext | None, models: Models,
           config: RerankConfig) -> RankedOutput:
    models.check(config)
    factors = scheme_factors(config.scheme)
    fallback = _gate(ctx, factors, models, config.object_threshold) if factors else None
    active = factors if fallback is None else ()
    obj = ctx.top if active else None

    rows = []
    for h in hyps.hypotheses:
        f = {"BL": h.score}
        logs = {}
        oov = []
        if config.uses_ulm:
            f["ULM"] = models.ulm.prob(h.word)
        if "SWE" in active:
            sim = _similarity(models.swe, h.word, models.swe[obj.label])
            if sim is None:
                oov.append("SWE")
                sim = 0.0
            p_w = models.ulm.prob(h.word)
            f["SWE"] = swe_prob(sim, p_w, obj.confidence)
            logs["SWE"] = swe_log_prob(sim, p_w, obj.confidence)
        if "TDP" in active:
            f["TDP"] = tdp_prob(models.tdp, h.word, obj.label, config.tdp_epsilon)
        if "TWE" in active:
            sim = _similarity(models.twe, h.word, models.twe[obj.label])
            if sim is None:
                oov.append("TWE")
                sim = 0.0
            f["TWE"] = twe_prob(sim, obj.confidence)
        score = 1.0
        log_score = 0.0
        for name, v in f.items():
            score *= v
            log_score += logs[name] if name in logs else (math.log(v) if v > 0.0 else -math.inf)
        rows.append(RankedWord(h.word, score, f, tuple(oov), log_score))
    rows.sort(key=lambda r: (-r.score, -r.log_score))
    return RankedOutput(hyps.image_id, tuple(rows), fallback, object=obj.label if obj else None)


def rerank_batch(records: Iterable[HypothesisList], contexts: Mapping[str, VisualContext],
                 models: Models, config: RerankConfig) -> Iterator[RankedOutput]:
    """Re-rank every record in order; per-record failures become error entries."""
    models.check(config)
    for hyps in records:
        try:
            yield rerank(hyps, contexts.get(hyps.image_id), models, config)
        except VisrankError as exc:
            log.warning("record %s failed: %s", hyps.image_id, exc)
            yield RankedOutput(hyps.image_id, error=str(exc))
