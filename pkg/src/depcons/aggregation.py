"""Per-question consensus: metric-weighted mean plus baselines."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from depcons.dataset import TWO_PHASE, Dataset, LabelScale
from depcons.errors import EmptyInput, KeyMismatch, MissingTruth, WrongMode
from depcons.metrics import WorkerQuestionMetrics, WorkerSummary

WEIGHTED = "weighted"
UNWEIGHTED = "unweighted-mean"
MAJORITY = "majority"
PRIOR_MEAN = "prior-mean"
MAP_MEAN = "map-mean"
METHODS = (WEIGHTED, UNWEIGHTED, MAJORITY, PRIOR_MEAN, MAP_MEAN)

PER_QUESTION = "per-question"
PER_WORKER = "per-worker"

# fractional parts this close to .5 count as ties
TIE_TOL = 1e-9


@dataclass(frozen=True)
class ConsensusResult:
    question_id: str
    method: str
    aggregate_score: float
    final_score: int
    final_label: str
    support: Mapping[str, float] = field(default_factory=dict)
    fallback: bool = False


def round_to_scale(value: float, scale: LabelScale) -> int:
    """Nearest scale score; exact halves go away from the scale midpoint.

    A value that is itself the midpoint (possible only for even ``k``)
    rounds down.
    """
    lo = math.floor(value)
    frac = value - lo
    if abs(frac - 0.5) <= TIE_TOL:
        mid = scale.midpoint
        if abs(value - mid) <= TIE_TOL:
            score = lo
        else:
            score = lo + 1 if value > mid else lo
    else:
        score = lo + 1 if frac > 0.5 else lo
    return min(max(score, 1), scale.k)


def _result(question_id, method, aggregate, scale, support, fallback=False) -> ConsensusResult:
    score = round_to_scale(aggregate, scale)
    return ConsensusResult(question_id, method, aggregate, score, scale.decode(score), dict(support), fallback)


def weighted_consensus(
    posteriors: Mapping[str, int],
    weights: Mapping[str, float],
    scale: LabelScale,
    question_id: str = "",
    method: str = WEIGHTED,
) -> ConsensusResult:
    """Weighted mean of scores, rounded onto the scale.

    Weights are rescaled by their maximum before summing so that equal
    weights reproduce the plain mean bit for bit. A zero total weight
    falls back to uniform weights and sets ``fallback``.
    """
    if not posteriors:
        raise EmptyInput("no opinions to aggregate")
    if set(posteriors) != set(weights):
        raise KeyMismatch("posteriors and weights cover different workers")
    workers = sorted(posteriors)
    if any(weights[w] < 0 for w in workers):
        raise ValueError("weights must be nonnegative")
    top = max(weights[w] for w in workers)
    fallback = top <= 0
    if fallback:
        norm = {w: 1.0 for w in workers}
    else:
        norm = {w: weights[w] / top for w in workers}
    total = math.fsum(norm.values())
    aggregate = math.fsum(norm[w] * posteriors[w] for w in workers) / total
    lo, hi = min(posteriors.values()), max(posteriors.values())
    aggregate = min(max(aggregate, lo), hi)
    support = {w: (1.0 if fallback else float(weights[w])) for w in workers}
    return _result(question_id, method, aggregate, scale, support, fallback)


def mean_consensus(
    scores: Mapping[str, int], scale: LabelScale, question_id: str = "", method: str = UNWEIGHTED
) -> ConsensusResult:
    if not scores:
        raise EmptyInput("no opinions to aggregate")
    aggregate = math.fsum(scores.values()) / len(scores)
    return _result(question_id, method, aggregate, scale, {w: 1.0 for w in sorted(scores)})


def majority_consensus(scores: Mapping[str, int], scale: LabelScale, question_id: str = "") -> ConsensusResult:
    """Modal score; ties go to the candidate nearest the mean, then the lower one."""
    if not scores:
        raise EmptyInput("no opinions to aggregate")
    counts = Counter(scores.values())
    best = max(counts.values())
    mean = math.fsum(scores.values()) / len(scores)
    candidates = sorted(s for s, c in counts.items() if c == best)
    mode = min(candidates, key=lambda s: (abs(s - mean), s))
    return ConsensusResult(
        question_id, MAJORITY, float(mode), mode, scale.decode(mode), {w: 1.0 for w in sorted(scores)}
    )


def metric_weights(
    rows: Sequence[WorkerQuestionMetrics],
    summaries: Sequence[WorkerSummary] | None = None,
    source: str = PER_QUESTION,
) -> dict[str, dict[str, float]]:
    """Map question -> worker -> weight, from per-question rows or per-worker means."""
    if source not in (PER_QUESTION, PER_WORKER):
        raise ValueError(f"unknown weight source {source!r}")
    per_worker = {s.worker_id: s.mean_weight for s in summaries or ()}
    out: dict[str, dict[str, float]] = {}
    for row in rows:
        w = row.weight if source == PER_QUESTION else per_worker[row.worker_id]
        out.setdefault(row.question_id, {})[row.worker_id] = w
    return out


def aggregate_two_phase(
    dataset: Dataset,
    rows: Sequence[WorkerQuestionMetrics],
    summaries: Sequence[WorkerSummary] | None = None,
    weight_source: str = PER_QUESTION,
) -> list[ConsensusResult]:
    """All four two-phase methods for every question, ordered by question then method."""
    if dataset.mode != TWO_PHASE:
        raise WrongMode(f"two-phase aggregation got a {dataset.mode} dataset")
    weights = metric_weights(rows, summaries, weight_source)
    scale = dataset.scale
    results = []
    for q, records in sorted(dataset.by_question().items()):
        post = {r.worker_id: r.posterior_score for r in records}
        prior = {r.worker_id: r.prior_score for r in records}
        results.append(weighted_consensus(post, weights[q], scale, q))
        results.append(mean_consensus(post, scale, q))
        results.append(majority_consensus(post, scale, q))
        results.append(mean_consensus(prior, scale, q, method=PRIOR_MEAN))
    return results


def aggregate_sequential(dataset: Dataset, map_scores: Mapping[str, Mapping[str, int]] | None = None):
    """Baselines over disclosed scores, plus the mean of inferred true opinions when given."""
    if dataset.mode == TWO_PHASE:
        raise WrongMode("sequential aggregation got a two-phase dataset")
    scale = dataset.scale
    results = []
    for q, events in sorted(dataset.sequences().items()):
        disclosed = {e.worker_id: scale.encode(e.label) for e in events}
        results.append(mean_consensus(disclosed, scale, q))
        results.append(majority_consensus(disclosed, scale, q))
        if map_scores is not None:
            results.append(mean_consensus(map_scores[q], scale, q, method=MAP_MEAN))
    return results


@dataclass(frozen=True)
class RecoveryRow:
    method: str
    n_questions: int
    exact_match_rate: float
    mae: float


def evaluate_recovery(results: Sequence[ConsensusResult], truth: Mapping[str, int]) -> list[RecoveryRow]:
    """Exact-match rate and mean absolute score error of each method against truth."""
    by_method: dict[str, list[ConsensusResult]] = {}
    for r in results:
        if r.question_id not in truth:
            raise MissingTruth(f"no ground truth for question {r.question_id!r}")
        by_method.setdefault(r.method, []).append(r)
    rows = []
    for method in sorted(by_method, key=lambda m: (METHODS.index(m) if m in METHODS else len(METHODS), m)):
        rs = by_method[method]
        hits = sum(r.final_score == truth[r.question_id] for r in rs)
        err = math.fsum(abs(r.final_score - truth[r.question_id]) for r in rs)
        rows.append(RecoveryRow(method, len(rs), hits / len(rs), err / len(rs)))
    return rows
