"""End-to-end simulation experiments: simulate, score workers, aggregate, evaluate."""

from __future__ import annotations

from dataclasses import dataclass, field

from depcons import aggregation as agg
from depcons.dataset import TWO_PHASE
from depcons.errors import ConfigInvalid
from depcons.inference import ENUMERATION_LIMIT, QuestionInference, infer_dataset
from depcons.metrics import EPSILON, R_CAP, WorkerQuestionMetrics, WorkerSummary, compute_metrics
from depcons.simulate import MEAN_TARGET, SimConfig, SimOutput, merge_outputs, simulate

MAP = "map"
FACE_VALUE = "face-value"


@dataclass(frozen=True)
class OpinionRecoveryRow:
    """How often a readout of individual opinions equals the hidden true opinions."""

    method: str
    n_opinions: int
    match_rate: float


@dataclass
class ExperimentResult:
    config: SimConfig
    outputs: list[SimOutput]
    merged: SimOutput
    metric_rows: list[WorkerQuestionMetrics] = field(default_factory=list)
    summaries: list[WorkerSummary] = field(default_factory=list)
    consensus: list[agg.ConsensusResult] = field(default_factory=list)
    recovery: list[agg.RecoveryRow] = field(default_factory=list)
    inferences: list[QuestionInference] = field(default_factory=list)
    opinion_recovery: list[OpinionRecoveryRow] = field(default_factory=list)


def opinion_recovery(
    inferences: list[QuestionInference], output: SimOutput
) -> list[OpinionRecoveryRow]:
    """MAP readout versus taking every disclosed score at face value."""
    map_hits = face_hits = total = 0
    for inf in inferences:
        for w, mapped, shown in zip(inf.worker_ids, inf.map_scores, inf.table.disclosed):
            truth = output.true_opinions[(w, inf.question_id)]
            map_hits += mapped == truth
            face_hits += shown == truth
            total += 1
    return [
        OpinionRecoveryRow(MAP, total, map_hits / total),
        OpinionRecoveryRow(FACE_VALUE, total, face_hits / total),
    ]


def run_experiment(
    config: SimConfig,
    *,
    epsilon: float = EPSILON,
    r_cap: float = R_CAP,
    weight_source: str = agg.PER_QUESTION,
    infer: bool | None = None,
    limit: int = ENUMERATION_LIMIT,
    jobs: int = 1,
) -> ExperimentResult:
    """Simulate every replication and push the result through the analysis modules.

    Two-phase runs get worker metrics and all four consensus methods.
    Sequential runs get the disclosed-score baselines and, when ``infer``
    is true (default: whenever ``n_workers <= limit``), exact posterior
    inference of each worker's true opinion using the simulator's own
    parameters, plus the mean of the inferred opinions as a consensus.
    """
    outputs = simulate(config, jobs=jobs)
    merged = merge_outputs(outputs)
    result = ExperimentResult(config, outputs, merged)
    dataset = merged.dataset

    if config.mode == TWO_PHASE:
        rows, summaries = compute_metrics(dataset, epsilon, r_cap)
        result.metric_rows, result.summaries = rows, summaries
        result.consensus = agg.aggregate_two_phase(dataset, rows, summaries, weight_source)
    else:
        if infer is None:
            infer = config.n_workers <= limit and config.target == MEAN_TARGET
        if infer:
            if config.target != MEAN_TARGET:
                raise ConfigInvalid("inference models a mean conformity target only")
            gammas = {p.worker_id: p.conformity_gamma for p in merged.profiles}
            sigmas = {p.worker_id: p.competence_sigma for p in merged.profiles}
            result.inferences = infer_dataset(
                dataset, gammas, kernel=config.disclosure, sigmas=sigmas, limit=limit
            )
            result.opinion_recovery = opinion_recovery(result.inferences, merged)
            map_scores = {inf.question_id: dict(zip(inf.worker_ids, inf.map_scores)) for inf in result.inferences}
            result.consensus = agg.aggregate_sequential(dataset, map_scores)
        else:
            result.consensus = agg.aggregate_sequential(dataset)
    result.recovery = agg.evaluate_recovery(result.consensus, merged.ground_truth)
    return result
