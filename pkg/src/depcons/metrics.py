"""Worker quality metrics computed from two-phase opinions.

For each question the crowd's mean score moves by some amount between the
independent round and the dependent round. A worker's *drop* is how far
their own score moved. The *deviation ratio* compares the two, its
reciprocal is the worker's *reliability*, and *accuracy* measures how close
the worker's second-round score is to the second-round mean.

Ratios use symmetric smoothing ``(drop + eps) / (shift + eps)`` so they are
defined when nobody moves; reliability is capped at ``r_cap``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from depcons.dataset import TWO_PHASE, Dataset
from depcons.errors import EmptyInput, LengthMismatch, ScoreOutOfRange, WrongMode

EPSILON = 1e-9
R_CAP = 100.0


@dataclass(frozen=True)
class WorkerQuestionMetrics:
    worker_id: str
    question_id: str
    drop: float
    deviation_ratio: float
    reliability: float
    accuracy: float
    weight: float


@dataclass(frozen=True)
class WorkerSummary:
    worker_id: str
    n_questions: int
    mean_drop: float
    mean_reliability: float
    mean_accuracy: float
    mean_weight: float


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def drop_of_confidence(prior_score: int, posterior_score: int, k: int | None = None) -> float:
    """Absolute change of one worker's score between the two rounds.

    When ``k`` is given both scores must lie in ``1..k``.
    """
    for s in (prior_score, posterior_score):
        if s < 1 or (k is not None and s > k):
            raise ScoreOutOfRange(f"score {s} outside 1..{k if k is not None else 'k'}")
    return float(abs(prior_score - posterior_score))


def mean_shift(priors: Sequence[float], posteriors: Sequence[float]) -> float:
    if not priors or not posteriors:
        raise EmptyInput("mean_shift needs at least one score per round")
    if len(priors) != len(posteriors):
        raise LengthMismatch(f"{len(priors)} priors vs {len(posteriors)} posteriors")
    return abs(_mean(priors) - _mean(posteriors))


def deviation_ratio(drop: float, shift: float, epsilon: float = EPSILON) -> float:
    return (drop + epsilon) / (shift + epsilon)


def reliability(ratio: float, r_cap: float = R_CAP) -> float:
    return min(1.0 / ratio, r_cap)


def accuracy(posterior_score: float, all_posteriors: Sequence[float], k: int) -> float:
    """Closeness of one score to the mean of all scores, scaled to [0, 1].

    The distance is divided by ``k - 1``, the largest distance two scores
    on the scale can have.
    """
    if not all_posteriors:
        raise EmptyInput("accuracy needs the question's posterior scores")
    return 1.0 - abs(posterior_score - _mean(all_posteriors)) / (k - 1)


def worker_weight(rel: float, acc: float) -> float:
    """Aggregation weight: reliability squashed to [0, 1) times accuracy."""
    return rel / (1.0 + rel) * acc


def question_metrics(
    question_id: str,
    scores: Sequence[tuple[str, int, int]],
    k: int,
    epsilon: float = EPSILON,
    r_cap: float = R_CAP,
) -> list[WorkerQuestionMetrics]:
    """Metrics for every ``(worker_id, prior, posterior)`` on one question."""
    priors = [p for _, p, _ in scores]
    posteriors = [q for _, _, q in scores]
    shift = mean_shift(priors, posteriors)
    out = []
    for worker_id, prior, post in scores:
        drop = drop_of_confidence(prior, post, k)
        ratio = deviation_ratio(drop, shift, epsilon)
        rel = reliability(ratio, r_cap)
        acc = accuracy(post, posteriors, k)
        out.append(WorkerQuestionMetrics(worker_id, question_id, drop, ratio, rel, acc, worker_weight(rel, acc)))
    return out


def summarize(rows: Sequence[WorkerQuestionMetrics]) -> list[WorkerSummary]:
    by_worker: dict[str, list[WorkerQuestionMetrics]] = {}
    for row in rows:
        by_worker.setdefault(row.worker_id, []).append(row)
    return [
        WorkerSummary(
            worker_id=w,
            n_questions=len(rs),
            mean_drop=_mean([r.drop for r in rs]),
            mean_reliability=_mean([r.reliability for r in rs]),
            mean_accuracy=_mean([r.accuracy for r in rs]),
            mean_weight=_mean([r.weight for r in rs]),
        )
        for w, rs in sorted(by_worker.items())
    ]


def compute_metrics(
    dataset: Dataset,
    epsilon: float = EPSILON,
    r_cap: float = R_CAP,
) -> tuple[list[WorkerQuestionMetrics], list[WorkerSummary]]:
    """Per (worker, question) metrics plus per-worker means for a two-phase dataset.

    Rows come back ordered by question, then worker.
    """
    if dataset.mode != TWO_PHASE:
        raise WrongMode(f"metrics need a two-phase dataset, got {dataset.mode}")
    rows: list[WorkerQuestionMetrics] = []
    for q, records in sorted(dataset.by_question().items()):
        scores = [(r.worker_id, r.prior_score, r.posterior_score) for r in records]
        rows.extend(question_metrics(q, scores, dataset.scale.k, epsilon, r_cap))
    return rows, summarize(rows)
