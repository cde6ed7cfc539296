"""Readers and writers for every file visrank consumes or produces.

All formats are UTF-8 text, one record per line. Readers accept binary or
text streams (or any iterable of lines) and raise :class:`ParseError` or
:class:`ValidationError` carrying the offending line number. Words and labels
are NFC-normalized on the way in.
"""

from __future__ import annotations

import json
import logging
import math
import re
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import ParseError, ValidationError, VisrankError
from .records import Dictionary, EmbeddingSpace, HypothesisList, VisualContext, nfc
from .relatedness import DEFAULT_TDP_EPSILON, CooccurrenceTable

log = logging.getLogger(__name__)

TDP_HEADER = "VISRANK-TDP 1"
_COUNT = re.compile(r"[0-9]+")


class HypothesisBatch(list):
    """List of :class:`HypothesisList`; ``resorted`` counts lists whose input order was fixed."""

    resorted: int = 0


class ContextMap(dict):
    """image_id -> :class:`VisualContext`; ``replaced`` counts duplicate image ids."""

    replaced: int = 0


def _lines(stream) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, (bytes, bytearray)):
            try:
                raw = bytes(raw).decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError(f"invalid UTF-8: {exc.reason}", lineno) from None
        if lineno == 1:
            raw = raw.lstrip("\ufeff")
        yield lineno, raw.rstrip("\r\n")


def _write(sink, text: str) -> None:
    if hasattr(sink, "encoding"):
        sink.write(text)
    else:
        sink.write(text.encode("utf-8"))


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name}")


def _json_object(line: str, lineno: int) -> dict:
    try:
        obj = json.loads(line, parse_constant=_reject_constant)
    except (ValueError, RecursionError) as exc:
        raise ParseError(f"invalid JSON: {exc}", lineno) from None
    if not isinstance(obj, dict):
        raise ParseError("record must be a JSON object", lineno)
    return obj


def _string(obj: dict, key: str, lineno: int, *, optional: bool = False) -> str | None:
    if key not in obj or obj[key] is None:
        if optional:
            return None
        raise ParseError(f"missing field {key!r}", lineno)
    value = obj[key]
    if not isinstance(value, str):
        raise ParseError(f"field {key!r} must be a string", lineno)
    return nfc(value)


def _number(obj: dict, key: str, lineno: int) -> float:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"field {key!r} must be a number", lineno)
    return float(value)


def _items(obj: dict, key: str, lineno: int) -> list[dict]:
    value = obj.get(key)
    if not isinstance(value, list):
        raise ParseError(f"field {key!r} must be a list", lineno)
    for item in value:
        if not isinstance(item, dict):
            raise ParseError(f"entries of {key!r} must be objects", lineno)
    return value


def _located(exc: VisrankError, lineno: int) -> VisrankError:
    return type(exc)(exc.message, lineno)


# -- hypotheses -------------------------------------------------------------

def parse_hypothesis_line(line: str, lineno: int = 1) -> tuple[HypothesisList, bool]:
    obj = _json_object(line, lineno)
    image_id = _string(obj, "image_id", lineno)
    gold = _string(obj, "gold", lineno, optional=True)
    hyps = []
    for item in _items(obj, "hypotheses", lineno):
        word = _string(item, "word", lineno)
        score = _number(item, "score", lineno)
        if not word:
            raise ValidationError("empty candidate word", lineno)
        if not (math.isfinite(score) and 0.0 < score <= 1.0):
            raise ValidationError(f"score {score!r} for {word!r} outside (0, 1]", lineno)
        hyps.append((word, score))
    if not hyps:
        raise ValidationError(f"{image_id!r}: empty hypothesis list", lineno)
    ordered = all(a[1] >= b[1] for a, b in zip(hyps, hyps[1:]))
    try:
        return HypothesisList.sorted(image_id, hyps, gold), not ordered
    except VisrankError as exc:
        raise _located(exc, lineno) from None


def load_hypotheses(stream: Iterable, k: int | None = None) -> HypothesisBatch:
    """Read a hypothesis JSONL stream; lists are truncated to the top ``k`` when given."""
    out = HypothesisBatch()
    for lineno, line in _lines(stream):
        if not line.strip():
            continue
        hyps, resorted = parse_hypothesis_line(line, lineno)
        out.resorted += resorted
        out.append(hyps.truncate(k) if k is not None else hyps)
    if out.resorted:
        log.warning("%d hypothesis lists were not sorted by score and have been re-sorted",
                    out.resorted)
    return out


def dump_hypotheses(hyps: HypothesisList) -> str:
    return json.dumps({
        "image_id": hyps.image_id,
        "gold": hyps.gold,
        "hypotheses": [{"word": h.word, "score": h.score} for h in hyps.hypotheses],
    }, ensure_ascii=False)


def save_hypotheses(records: Iterable[HypothesisList], sink) -> None:
    for r in records:
        _write(sink, dump_hypotheses(r) + "\n")


# -- visual contexts --------------------------------------------------------

def load_contexts(stream: Iterable) -> ContextMap:
    out = ContextMap()
    for lineno, line in _lines(stream):
        if not line.strip():
            continue
        obj = _json_object(line, lineno)
        image_id = _string(obj, "image_id", lineno)
        objects = []
        for item in _items(obj, "objects", lineno):
            label = _string(item, "label", lineno)
            conf = _number(item, "confidence", lineno)
            if not (math.isfinite(conf) and 0.0 <= conf <= 1.0):
                raise ValidationError(f"confidence {conf!r} for {label!r} outside [0, 1]", lineno)
            objects.append((label, conf))
        objects.sort(key=lambda o: -o[1])
        try:
            ctx = VisualContext(image_id, tuple(objects))
        except VisrankError as exc:
            raise _located(exc, lineno) from None
        if image_id in out:
            out.replaced += 1
        out[image_id] = ctx
    if out.replaced:
        log.warning("%d duplicate context records replaced earlier ones", out.replaced)
    return out


def save_contexts(contexts: Iterable[VisualContext], sink) -> None:
    for ctx in contexts:
        _write(sink, json.dumps({
            "image_id": ctx.image_id,
            "objects": [{"label": o.label, "confidence": o.confidence} for o in ctx.objects],
        }, ensure_ascii=False) + "\n")


# -- embeddings -------------------------------------------------------------

def load_embeddings(stream: Iterable) -> EmbeddingSpace:
    """Read the text layout ``V d`` followed by V rows ``word v1 ... vd``."""
    lines = _lines(stream)
    header = next(lines, None)
    if header is None:
        raise ParseError("missing 'V d' header", 1)
    parts = header[1].split()
    if len(parts) != 2 or not all(_COUNT.fullmatch(p) for p in parts):
        raise ParseError("header must be two nonnegative integers 'V d'", 1)
    n_words, dim = int(parts[0]), int(parts[1])
    if dim < 1:
        raise ParseError("dimension must be positive", 1)
    table: dict[str, np.ndarray] = {}
    duplicates = rows = 0
    for lineno, line in lines:
        if not line.strip():
            continue
        rows += 1
        if rows > n_words:
            raise ParseError(f"more rows than the {n_words} declared in the header", lineno)
        fields = line.split()
        if len(fields) != dim + 1:
            raise ParseError(f"row {rows} has {len(fields) - 1} components, expected {dim}", lineno)
        try:
            vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"row {rows}: non-numeric component ({exc})", lineno) from None
        if not np.all(np.isfinite(vec)):
            raise ParseError(f"row {rows}: non-finite component", lineno)
        word = nfc(fields[0])
        if word in table:
            duplicates += 1
            continue
        table[word] = vec
    if rows != n_words:
        raise ParseError(f"header declares {n_words} rows but {rows} were found")
    space = EmbeddingSpace(table, dim, duplicates=duplicates)
    if duplicates:
        log.warning("%d duplicate embedding rows ignored (first occurrence kept)", duplicates)
    if space.zero_norm:
        log.warning("%d embedding vectors have zero norm: %s", len(space.zero_norm),
                    ", ".join(space.zero_norm[:10]))
    return space


def save_embeddings(space: EmbeddingSpace, sink) -> None:
    _write(sink, f"{len(space)} {space.dimension}\n")
    for word, row in zip(space.words, space.vectors):
        if not word or any(ch.isspace() for ch in word):
            raise ValidationError(f"word {word!r} cannot be written in the text embedding format")
        _write(sink, word + " " + " ".join(repr(x) for x in row.tolist()) + "\n")


# -- unigram counts and training pairs --------------------------------------

def _tsv(line: str, lineno: int, n_fields: int) -> list[str]:
    fields = line.split("\t")
    if len(fields) != n_fields:
        raise ParseError(f"expected {n_fields} tab-separated fields, got {len(fields)}", lineno)
    return fields


def load_unigram_counts(stream: Iterable) -> dict[str, int]:
    counts: dict[str, int] = {}
    for lineno, line in _lines(stream):
        if not line.strip():
            continue
        word, count = _tsv(line, lineno, 2)
        if not word:
            raise ParseError("empty word", lineno)
        if not _COUNT.fullmatch(count.strip()):
            raise ParseError(f"count {count!r} is not a nonnegative integer", lineno)
        word = nfc(word)
        counts[word] = counts.get(word, 0) + int(count)
    return counts


def save_unigram_counts(counts: dict[str, int], sink) -> None:
    for word, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        _write(sink, f"{word}\t{n}\n")


def load_pairs(stream: Iterable) -> list[tuple[str, str]]:
    """Training pairs, one ``word<TAB>object`` per line."""
    pairs = []
    for lineno, line in _lines(stream):
        if not line.strip():
            continue
        word, obj = _tsv(line, lineno, 2)
        if not word or not obj:
            raise ParseError("empty word or object", lineno)
        pairs.append((nfc(word), nfc(obj)))
    return pairs


def save_pairs(pairs: Iterable[tuple[str, str]], sink) -> None:
    for word, obj in pairs:
        _write(sink, f"{word}\t{obj}\n")


def load_dictionary(stream: Iterable) -> Dictionary:
    entries = set()
    for _, line in _lines(stream):
        word = line.strip()
        if word:
            entries.add(word)
    return Dictionary(frozenset(entries))


# -- co-occurrence tables ---------------------------------------------------

def save_cooccurrence(table: CooccurrenceTable, sink) -> None:
    _write(sink, TDP_HEADER + "\n")
    if table.smoothing_epsilon != DEFAULT_TDP_EPSILON:
        _write(sink, f"EPS\t{table.smoothing_epsilon!r}\n")
    for (word, obj), n in sorted(table.pair_counts.items()):
        _write(sink, f"PAIR\t{word}\t{obj}\t{n}\n")
    for obj, n in sorted(table.ctx_counts.items()):
        _write(sink, f"CTX\t{obj}\t{n}\n")


def load_cooccurrence(stream: Iterable) -> CooccurrenceTable:
    lines = _lines(stream)
    first = next(lines, None)
    if first is None or first[1] != TDP_HEADER:
        raise ParseError(f"missing header {TDP_HEADER!r}", 1)
    pairs: dict[tuple[str, str], int] = {}
    ctxs: dict[str, int] = {}
    epsilon = DEFAULT_TDP_EPSILON
    for lineno, line in lines:
        if not line.strip():
            continue
        tag, *rest = line.split("\t")
        if tag == "PAIR" and len(rest) == 3:
            key = (nfc(rest[0]), nfc(rest[1]))
            target, count = pairs, rest[2]
        elif tag == "CTX" and len(rest) == 2:
            key = nfc(rest[0])
            target, count = ctxs, rest[1]
        elif tag == "EPS" and len(rest) == 1:
            try:
                epsilon = float(rest[0])
            except ValueError:
                raise ParseError(f"bad epsilon {rest[0]!r}", lineno) from None
            continue
        elif tag in ("PAIR", "CTX", "EPS"):
            raise ParseError(f"wrong number of fields for {tag} record", lineno)
        else:
            raise ParseError(f"unknown record tag {tag!r}", lineno)
        if not all(key if tag == "PAIR" else (key,)):
            raise ParseError("empty word or object", lineno)
        if not _COUNT.fullmatch(count):
            raise ParseError(f"count {count!r} is not a nonnegative integer", lineno)
        if key in target:
            raise ParseError(f"duplicate {tag} record for {key!r}", lineno)
        target[key] = int(count)
    return CooccurrenceTable(pairs, ctxs, epsilon)


# -- re-ranked output -------------------------------------------------------

def load_ranked(stream: Iterable) -> list:
    """Read re-ranker output lines back into :class:`~visrank.rerank.RankedOutput`."""
    from .rerank import RankedOutput

    out = []
    for lineno, line in _lines(stream):
        if not line.strip():
            continue
        try:
            out.append(RankedOutput.from_json(_json_object(line, lineno)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, VisrankError):
                raise
            raise ParseError(f"malformed ranked record: {exc}", lineno) from None
    return out


def save_ranked(outputs: Iterable, sink: IO) -> None:
    for out in outputs:
        _write(sink, json.dumps(out.to_json(), ensure_ascii=False) + "\n")
