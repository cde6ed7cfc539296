"""Task-specific word embeddings from (word, object) training pairs.

Each pair is a two-token sentence trained with skip-gram, window 1, and
negative sampling, so it yields two events: word predicts object and object
predicts word. Training is single-threaded and fully determined by the seed.

Negative samples are drawn from the corpus unigram distribution raised to
0.75. Draws that hit either token of the current sentence are discarded:
with two-token sentences the centre token is a false negative for its own
partner, and keeping it cancels out the word/object attraction that the
input-vector cosine is later asked to measure.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .errors import DomainError, ValidationError
from .records import EmbeddingSpace

log = logging.getLogger(__name__)

NOISE_EXPONENT = 0.75


@dataclass(frozen=True)
class TrainConfig:
    dimension: int = 300
    epochs: int = 50
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    negatives: int = 5
    seed: int = 0
    init: EmbeddingSpace | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValidationError(f"dimension must be positive, got {self.dimension}")
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if self.negatives < 1:
            raise ValidationError(f"negatives must be positive, got {self.negatives}")
        if not 0.0 < self.min_learning_rate < self.learning_rate:
            raise ValidationError(
                f"learning rate must decay from {self.learning_rate} down to "
                f"{self.min_learning_rate}; need 0 < end < start"
            )
        if self.init is not None and self.init.dimension != self.dimension:
            raise ValidationError(
                f"init embeddings have dimension {self.init.dimension}, config asks for {self.dimension}"
            )


@dataclass(frozen=True)
class TrainCorpus:
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        pairs = tuple((str(w), str(c)) for w, c in self.pairs)
        if not pairs:
            raise ValidationError("training corpus is empty")
        object.__setattr__(self, "pairs", pairs)

    @property
    def vocab(self) -> list[str]:
        """Every token, in order of first appearance."""
        seen: dict[str, None] = {}
        for w, c in self.pairs:
            seen.setdefault(w)
            seen.setdefault(c)
        return list(seen)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _as_vectors(center, context, negatives):
    center = np.asarray(center, dtype=np.float64)
    context = np.asarray(context, dtype=np.float64)
    negatives = np.asarray(negatives, dtype=np.float64)
    if negatives.size == 0:
        negatives = np.zeros((0,) + center.shape)
    if center.ndim != 1 or context.shape != center.shape or negatives.shape[1:] != center.shape:
        raise DomainError("center, context and negative vectors must share one dimension")
    return center, context, negatives


def sgns_loss(center, context, negatives: Sequence = ()) -> float:
    """-log s(center.context) - sum log s(-center.neg), s the logistic function."""
    center, context, negatives = _as_vectors(center, context, negatives)
    loss = np.logaddexp(0.0, -center @ context)
    if len(negatives):
        loss += np.logaddexp(0.0, negatives @ center).sum()
    return float(loss)


def sgns_gradient(center, context, negatives: Sequence = ()):
    """Analytic gradient of :func:`sgns_loss`.

    Returns ``(grad_center, grad_context, grad_negatives)`` where
    ``grad_negatives`` has one row per negative.
    """
    center, context, negatives = _as_vectors(center, context, negatives)
    pos = _sigmoid(center @ context) - 1.0
    neg = _sigmoid(negatives @ center)
    grad_center = pos * context + neg @ negatives
    grad_context = pos * center
    grad_negatives = np.outer(neg, center)
    return grad_center, grad_context, grad_negatives


@numba.njit(cache=True)
def _run_epoch(w_in, w_out, centers, contexts, order, negs, step0, total_steps, lr0, lr_min):
    dim = w_in.shape[1]
    n_neg = negs.shape[1]
    grad_c = np.empty(dim)
    neg_coef = np.empty(n_neg)
    loss = 0.0
    for t in range(order.shape[0]):
        e = order[t]
        i = centers[e]
        j = contexts[e]
        lr = lr0 - (lr0 - lr_min) * (step0 + t) / total_steps
        dot = 0.0
        for k in range(dim):
            dot += w_in[i, k] * w_out[j, k]
        pos = 0.5 * (1.0 + math.tanh(0.5 * dot)) - 1.0
        loss += max(-dot, 0.0) + math.log1p(math.exp(-abs(dot)))
        for k in range(dim):
            grad_c[k] = pos * w_out[j, k]
        for m in range(n_neg):
            n = negs[e, m]
            neg_coef[m] = 0.0
            if n == i or n == j:
                continue
            dn = 0.0
            for k in range(dim):
                dn += w_in[i, k] * w_out[n, k]
            s = 0.5 * (1.0 + math.tanh(0.5 * dn))
            loss += max(dn, 0.0) + math.log1p(math.exp(-abs(dn)))
            neg_coef[m] = s
            for k in range(dim):
                grad_c[k] += s * w_out[n, k]
        # context and negative gradients use the centre vector before its update
        for m in range(n_neg):
            n = negs[e, m]
            if n == i or n == j:
                continue
            for k in range(dim):
                w_out[n, k] -= lr * neg_coef[m] * w_in[i, k]
        for k in range(dim):
            w_out[j, k] -= lr * pos * w_in[i, k]
            w_in[i, k] -= lr * grad_c[k]
    return loss


class SkipGram:
    """Stateful trainer; :func:`train_twe` is the one-call front end.

    After :meth:`fit`, ``epoch_loss`` holds the mean per-event loss of each
    epoch, measured before each update.
    """

    def __init__(self, config: TrainConfig):
        self.config = config
        self.epoch_loss: list[float] = []

    def fit(self, corpus: TrainCorpus) -> EmbeddingSpace:
        cfg = self.config
        vocab = corpus.vocab
        index = {t: i for i, t in enumerate(vocab)}
        rng = np.random.default_rng(cfg.seed)
        dim = cfg.dimension

        w_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(vocab), dim))
        if cfg.init is not None:
            warm = [t for t in vocab if t in cfg.init]
            for t in warm:
                w_in[index[t]] = cfg.init[t]
            log.info("warm-started %d of %d tokens from init embeddings", len(warm), len(vocab))
        w_out = np.zeros_like(w_in)

        words = np.array([index[w] for w, _ in corpus.pairs], dtype=np.int64)
        objects = np.array([index[c] for _, c in corpus.pairs], dtype=np.int64)
        centers = np.concatenate([words, objects])
        contexts = np.concatenate([objects, words])
        freq = np.bincount(centers, minlength=len(vocab)).astype(np.float64)
        noise = freq ** NOISE_EXPONENT
        cdf = np.cumsum(noise / noise.sum())
        cdf[-1] = 1.0

        n_events = len(centers)
        total = max(1, cfg.epochs * n_events)
        self.epoch_loss = []
        for epoch in range(cfg.epochs):
            order = rng.permutation(n_events)
            negs = np.searchsorted(cdf, rng.random((n_events, cfg.negatives)), side="right")
            loss = _run_epoch(w_in, w_out, centers, contexts, order, negs,
                              epoch * n_events, total, cfg.learning_rate, cfg.min_learning_rate)
            self.epoch_loss.append(loss / n_events)
            log.debug("epoch %d: mean loss %.6f", epoch + 1, self.epoch_loss[-1])
        self.output_vectors = w_out
        return EmbeddingSpace(dict(zip(vocab, w_in)), dim)


def train_twe(corpus: TrainCorpus | Sequence[tuple[str, str]], config: TrainConfig | None = None) -> EmbeddingSpace:
    if not isinstance(corpus, TrainCorpus):
        corpus = TrainCorpus(tuple(corpus))
    return SkipGram(config or TrainConfig()).fit(corpus)
