"""Annotation-process data model: label scales, opinion events and datasets.

Two dataset shapes are supported. A *sequential* dataset holds the
disclosed opinions of workers who answered one after another, each seeing
the earlier answers. A *two-phase* dataset holds, per worker and question,
an independent first-round score and a second-round score given after all
first-round scores were revealed.

Only the arrival rank (``order_index``) orders a sequential dataset.
Timestamps are kept for provenance and never read by any computation.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from depcons.errors import (
    DuplicateLabel,
    DuplicateOpinion,
    EmptyDataset,
    GapInArrivalOrder,
    InvalidRecord,
    ScaleTooSmall,
    ScoreOutOfRange,
    UnknownLabel,
)

SEQUENTIAL = "sequential"
TWO_PHASE = "two-phase"
MODES = (SEQUENTIAL, TWO_PHASE)

REVIEW_LABELS = (
    "strong reject",
    "reject",
    "weak reject",
    "borderline",
    "weak accept",
    "accept",
    "strong accept",
)


@dataclass(frozen=True)
class LabelScale:
    """Ordered ordinal labels; the label at position j (0-based) scores j + 1."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(set(labels)) != len(labels):
            seen = set()
            dup = next(label for label in labels if label in seen or seen.add(label))
            raise DuplicateLabel(f"duplicate label {dup!r}")
        if len(labels) < 2:
            raise ScaleTooSmall(f"a scale needs at least 2 labels, got {len(labels)}")
        object.__setattr__(self, "_index", {label: i + 1 for i, label in enumerate(labels)})

    @property
    def k(self) -> int:
        return len(self.labels)

    @property
    def scores(self) -> range:
        return range(1, self.k + 1)

    @property
    def midpoint(self) -> float:
        return (self.k + 1) / 2

    def encode(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownLabel(f"label {label!r} is not on the scale") from None

    def decode(self, score: int) -> str:
        if not 1 <= score <= self.k:
            raise ScoreOutOfRange(f"score {score} outside 1..{self.k}")
        return self.labels[score - 1]

    def check_score(self, score: int) -> int:
        if isinstance(score, bool) or int(score) != score or not 1 <= score <= self.k:
            raise ScoreOutOfRange(f"score {score!r} outside 1..{self.k}")
        return int(score)

    def __contains__(self, label: object) -> bool:
        return label in self._index


def make_scale(labels: Sequence[str]) -> LabelScale:
    """Build a scale from labels listed worst-first."""
    return LabelScale(tuple(labels))


def review_scale() -> LabelScale:
    """The seven-option peer-review scale, strong reject = 1 … strong accept = 7."""
    return LabelScale(REVIEW_LABELS)


def numeric_scale(k: int) -> LabelScale:
    """Generic scale whose labels are the strings ``"1"`` … ``str(k)``."""
    return LabelScale(tuple(str(i) for i in range(1, k + 1)))


def encode(scale: LabelScale, label: str) -> int:
    return scale.encode(label)


def decode(scale: LabelScale, score: int) -> str:
    return scale.decode(score)


@dataclass(frozen=True)
class OpinionEvent:
    question_id: str
    order_index: int
    worker_id: str
    label: str
    timestamp: float | None = None


@dataclass(frozen=True, order=True)
class TwoPhaseRecord:
    question_id: str
    worker_id: str
    prior_score: int
    posterior_score: int


@dataclass(frozen=True)
class Dataset:
    """A validated, canonically ordered collection of opinions.

    Sequential events are sorted by ``(question_id, order_index)`` and
    two-phase records by ``(question_id, worker_id)``, so two datasets
    built from the same records in any input order compare equal.
    """

    scale: LabelScale
    mode: str
    events: tuple[OpinionEvent, ...] = ()
    records: tuple[TwoPhaseRecord, ...] = ()
    question_ids: tuple[str, ...] = ()
    worker_ids: tuple[str, ...] = ()

    @property
    def m(self) -> int:
        return len(self.question_ids)

    @property
    def n(self) -> int:
        return len(self.worker_ids)

    def sequence(self, question_id: str) -> list[OpinionEvent]:
        """Events of one question in arrival order."""
        return [e for e in self.events if e.question_id == question_id]

    def sequences(self) -> dict[str, list[OpinionEvent]]:
        out: dict[str, list[OpinionEvent]] = defaultdict(list)
        for e in self.events:
            out[e.question_id].append(e)
        return dict(out)

    def by_question(self) -> dict[str, list[TwoPhaseRecord]]:
        out: dict[str, list[TwoPhaseRecord]] = defaultdict(list)
        for r in self.records:
            out[r.question_id].append(r)
        return dict(out)


def _field(raw: Mapping[str, Any], name: str, index: int, lines: Sequence[int] | None):
    if name not in raw or raw[name] is None:
        raise InvalidRecord(f"missing field {name!r}", line=_line(index, lines))
    return raw[name]


def _line(index: int, lines: Sequence[int] | None) -> int | None:
    return lines[index] if lines is not None else None


def _ident(value: Any, name: str, index: int, lines: Sequence[int] | None) -> str:
    if isinstance(value, (str, int)) and not isinstance(value, bool) and str(value) != "":
        return str(value)
    raise InvalidRecord(f"{name} must be a non-empty string, got {value!r}", line=_line(index, lines))


def _label_score(scale: LabelScale, value: Any, index: int, lines: Sequence[int] | None) -> int:
    try:
        return scale.encode(str(value))
    except UnknownLabel as exc:
        raise UnknownLabel(exc.message, line=_line(index, lines)) from None


def validate_dataset(
    raw: Iterable[Mapping[str, Any]],
    scale: LabelScale,
    mode: str,
    *,
    lines: Sequence[int] | None = None,
) -> Dataset:
    """Validate raw dict records and build a canonical :class:`Dataset`.

    Sequential records carry ``question_id, worker_id, order_index, label``
    and an optional ``timestamp``; when ``order_index`` is absent from every
    record of a question, ranks are assigned in input order. Two-phase
    records carry ``question_id, worker_id, prior_label, posterior_label``.

    ``lines`` optionally maps record positions to source line numbers for
    diagnostics. Raises exactly one :class:`~depcons.errors.DepconsError`
    subclass on the first problem found.
    """
    if mode not in MODES:
        raise InvalidRecord(f"unknown mode {mode!r}; expected one of {MODES}")
    raw = list(raw)
    if not raw:
        raise EmptyDataset("dataset has no records")
    for i, rec in enumerate(raw):
        if not isinstance(rec, Mapping):
            raise InvalidRecord(f"record must be an object, got {type(rec).__name__}", line=_line(i, lines))
    if mode == SEQUENTIAL:
        return _validate_sequential(raw, scale, lines)
    return _validate_two_phase(raw, scale, lines)


def _validate_sequential(raw, scale, lines) -> Dataset:
    seen: dict[tuple[str, str], int] = {}
    parsed = []
    for i, rec in enumerate(raw):
        q = _ident(_field(rec, "question_id", i, lines), "question_id", i, lines)
        w = _ident(_field(rec, "worker_id", i, lines), "worker_id", i, lines)
        label = str(_field(rec, "label", i, lines))
        _label_score(scale, label, i, lines)
        order = rec.get("order_index")
        if order is not None and (isinstance(order, bool) or not isinstance(order, int) or order < 0):
            raise InvalidRecord(f"order_index must be a nonnegative integer, got {order!r}", line=_line(i, lines))
        ts = rec.get("timestamp")
        if ts is not None:
            if isinstance(ts, bool) or not isinstance(ts, (int, float)) or ts < 0:
                raise InvalidRecord(f"timestamp must be a nonnegative number, got {ts!r}", line=_line(i, lines))
            ts = float(ts)
        if (q, w) in seen:
            raise DuplicateOpinion(f"worker {w!r} answered question {q!r} twice", line=_line(i, lines))
        seen[(q, w)] = i
        parsed.append((i, q, w, order, label, ts))

    per_q: dict[str, list] = defaultdict(list)
    for item in parsed:
        per_q[item[1]].append(item)

    events = []
    for q, items in per_q.items():
        given = [it[3] is not None for it in items]
        if not any(given):
            items = [(it[0], it[1], it[2], rank, it[4], it[5]) for rank, it in enumerate(items)]
        elif not all(given):
            missing = next(it for it in items if it[3] is None)
            raise InvalidRecord(
                f"question {q!r} mixes records with and without order_index", line=_line(missing[0], lines)
            )
        orders = sorted(it[3] for it in items)
        if orders != list(range(len(items))):
            raise GapInArrivalOrder(
                f"order_index for question {q!r} is {orders}, expected 0..{len(items) - 1}",
                line=_line(items[0][0], lines),
            )
        events.extend(OpinionEvent(q, order, w, label, ts) for _, _, w, order, label, ts in items)

    events.sort(key=lambda e: (e.question_id, e.order_index))
    return Dataset(
        scale=scale,
        mode=SEQUENTIAL,
        events=tuple(events),
        question_ids=tuple(sorted({e.question_id for e in events})),
        worker_ids=tuple(sorted({e.worker_id for e in events})),
    )


def _validate_two_phase(raw, scale, lines) -> Dataset:
    seen = set()
    records = []
    for i, rec in enumerate(raw):
        q = _ident(_field(rec, "question_id", i, lines), "question_id", i, lines)
        w = _ident(_field(rec, "worker_id", i, lines), "worker_id", i, lines)
        prior = _label_score(scale, _field(rec, "prior_label", i, lines), i, lines)
        post = _label_score(scale, _field(rec, "posterior_label", i, lines), i, lines)
        if (q, w) in seen:
            raise DuplicateOpinion(f"worker {w!r} answered question {q!r} twice", line=_line(i, lines))
        seen.add((q, w))
        records.append(TwoPhaseRecord(q, w, prior, post))
    records.sort()
    return Dataset(
        scale=scale,
        mode=TWO_PHASE,
        records=tuple(records),
        question_ids=tuple(sorted({r.question_id for r in records})),
        worker_ids=tuple(sorted({r.worker_id for r in records})),
    )


def to_raw(dataset: Dataset) -> list[dict[str, Any]]:
    """Inverse of :func:`validate_dataset`: plain dicts in canonical order."""
    if dataset.mode == SEQUENTIAL:
        rows = []
        for e in dataset.events:
            row: dict[str, Any] = {
                "question_id": e.question_id,
                "worker_id": e.worker_id,
                "order_index": e.order_index,
                "label": e.label,
            }
            if e.timestamp is not None:
                row["timestamp"] = e.timestamp
            rows.append(row)
        return rows
    return [
        {
            "question_id": r.question_id,
            "worker_id": r.worker_id,
            "prior_label": dataset.scale.decode(r.prior_score),
            "posterior_label": dataset.scale.decode(r.posterior_score),
        }
        for r in dataset.records
    ]
