"""Top-1 accuracy of re-ranked outputs: full, dict and list subsets.

Every record counts, including words shorter than three characters and
words with non-alphanumeric characters. ``full`` is accuracy over all
records, ``dict`` over records whose gold word is in a reference lexicon,
and ``list`` over records whose gold word appears among the k candidates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import ValidationError
from .records import Dictionary, match_key
from .rerank import SCHEME_LABELS, RankedOutput

log = logging.getLogger(__name__)

METRICS = ("full", "dict", "list")
MISSING_CELL = "—"


def _pct(correct: int, total: int) -> float | None:
    return 100.0 * correct / total if total else None


@dataclass(frozen=True)
class SchemeResult:
    scheme: str
    n_total: int
    n_dict: int
    n_list: int
    correct_full: int
    correct_dict: int
    correct_list: int
    missing_gold: int = 0

    @property
    def acc_full(self) -> float | None:
        return _pct(self.correct_full, self.n_total)

    @property
    def acc_dict(self) -> float | None:
        return _pct(self.correct_dict, self.n_dict)

    @property
    def acc_list(self) -> float | None:
        return _pct(self.correct_list, self.n_list)

    def accuracy(self, metric: str) -> float | None:
        return getattr(self, f"acc_{metric}")

    @property
    def label(self) -> str:
        return SCHEME_LABELS.get(self.scheme, self.scheme)


@dataclass(frozen=True)
class EvalReport:
    """Accuracies of one or more schemes at a single list size ``k``."""

    k: int
    rows: tuple[SchemeResult, ...]
    case_sensitive: bool = False
    has_dictionary: bool = field(default=True)

    def __getitem__(self, scheme: str) -> SchemeResult:
        for row in self.rows:
            if row.scheme == scheme:
                return row
        raise KeyError(scheme)

    def _single(self) -> SchemeResult:
        if len(self.rows) != 1:
            raise AttributeError("report holds several schemes; index it by scheme name")
        return self.rows[0]

    n_total = property(lambda self: self._single().n_total)
    n_dict = property(lambda self: self._single().n_dict)
    n_list = property(lambda self: self._single().n_list)
    acc_full = property(lambda self: self._single().acc_full)
    acc_dict = property(lambda self: self._single().acc_dict)
    acc_list = property(lambda self: self._single().acc_list)

    def merged(self, other: EvalReport) -> EvalReport:
        if other.k != self.k or other.case_sensitive != self.case_sensitive:
            raise ValidationError("can only merge reports with the same k and matching mode")
        return EvalReport(self.k, self.rows + other.rows, self.case_sensitive,
                          self.has_dictionary and other.has_dictionary)


def evaluate(outputs: Iterable[RankedOutput], gold: Mapping[str, str],
             dictionary: Dictionary | None = None, k: int = 5, *, scheme: str = "BL",
             case_sensitive: bool = False) -> EvalReport:
    if k < 1:
        raise ValidationError(f"k must be positive, got {k}")
    lexicon = dictionary.keys(case_sensitive) if dictionary is not None else frozenset()
    n_total = n_dict = n_list = 0
    c_full = c_dict = c_list = 0
    missing = 0
    for out in outputs:
        target = gold.get(out.image_id)
        if target is None:
            missing += 1
            continue
        if len(out.ranked) > k:
            raise ValidationError(
                f"{out.image_id!r} has {len(out.ranked)} candidates but k={k}; re-rank with --k {k}"
            )
        key = match_key(target, case_sensitive)
        candidates = {match_key(r.word, case_sensitive) for r in out.ranked}
        correct = bool(out.ranked) and match_key(out.ranked[0].word, case_sensitive) == key
        in_dict = key in lexicon
        in_list = key in candidates

        n_total += 1
        c_full += correct
        if in_dict:
            n_dict += 1
            c_dict += correct
        if in_list:
            n_list += 1
            c_list += correct
    if missing:
        log.warning("%d outputs had no gold word and were excluded", missing)
    row = SchemeResult(scheme, n_total, n_dict, n_list, c_full, c_dict, c_list, missing)
    return EvalReport(k, (row,), case_sensitive, dictionary is not None)


def gold_map(records: Iterable) -> dict[str, str]:
    """image_id -> gold word from hypothesis lists; conflicting duplicates are an error."""
    out: dict[str, str] = {}
    for r in records:
        if r.gold is None:
            continue
        if out.get(r.image_id, r.gold) != r.gold:
            raise ValidationError(f"image {r.image_id!r} has conflicting gold words")
        out[r.image_id] = r.gold
    return out


def _cell(value: float | None) -> str:
    return MISSING_CELL if value is None else f"{value:.1f}"


def format_report(reports: EvalReport | Sequence[EvalReport]) -> str:
    """Fixed-width table: one row per scheme, full/dict/list columns per k."""
    if isinstance(reports, EvalReport):
        reports = [reports]
    if not reports:
        return ""
    schemes: list[str] = []
    for rep in reports:
        for row in rep.rows:
            if row.scheme not in schemes:
                schemes.append(row.scheme)
    labels = [SCHEME_LABELS.get(s, s) for s in schemes]
    name_w = max(len("Model"), *(len(x) for x in labels))
    cell_w = 6
    group_w = 3 * cell_w + 2

    mode = "case-sensitive" if reports[0].case_sensitive else "case-insensitive"
    lines = [f"# word matching: {mode}; all words evaluated, including short ones"]
    lines.append(" " * name_w + "".join(f" | {f'k={r.k}':^{group_w}}" for r in reports))
    lines.append(f"{'Model':<{name_w}}" + "".join(
        " | " + " ".join(f"{m:>{cell_w}}" for m in METRICS) for _ in reports))
    rule = "-" * len(lines[-1])
    lines.insert(1, rule)
    lines.append(rule)
    for scheme, label in zip(schemes, labels):
        cells = []
        for rep in reports:
            try:
                row = rep[scheme]
                values = [row.accuracy(m) for m in METRICS]
            except KeyError:
                values = [None] * 3
            cells.append(" | " + " ".join(f"{_cell(v):>{cell_w}}" for v in values))
        lines.append(f"{label:<{name_w}}" + "".join(cells))
    lines.append(rule)
    return "\n".join(lines) + "\n"


def report_lines(reports: EvalReport | Sequence[EvalReport]) -> str:
    """Machine-readable ``scheme<TAB>metric<TAB>value`` lines; metrics carry their k."""
    if isinstance(reports, EvalReport):
        reports = [reports]
    out = []
    for rep in reports:
        for row in rep.rows:
            for m in METRICS:
                v = row.accuracy(m)
                out.append(f"{row.scheme}\t{m}@k={rep.k}\t{'n/a' if v is None else repr(v)}")
            for name in ("n_total", "n_dict", "n_list"):
                out.append(f"{row.scheme}\t{name}@k={rep.k}\t{getattr(row, name)}")
    return "\n".join(out) + ("\n" if out else "")
