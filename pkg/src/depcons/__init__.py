"""Consensus of dependent crowd opinions.

Data model and file formats (:mod:`depcons.dataset`, :mod:`depcons.io`),
worker metrics (:mod:`depcons.metrics`), consensus methods
(:mod:`depcons.aggregation`), a generative simulator of conformity bias
(:mod:`depcons.simulate`, :mod:`depcons.experiment`) and exact posterior
inference of true opinions (:mod:`depcons.inference`).
"""

from depcons.aggregation import (
    ConsensusResult,
    aggregate_sequential,
    aggregate_two_phase,
    evaluate_recovery,
    majority_consensus,
    mean_consensus,
    weighted_consensus,
)
from depcons.dataset import (
    Dataset,
    LabelScale,
    OpinionEvent,
    TwoPhaseRecord,
    make_scale,
    numeric_scale,
    review_scale,
    validate_dataset,
)
from depcons.experiment import run_experiment
from depcons.inference import BiasModel, infer_dataset, map_true_opinions, posterior_true, sequence_likelihood
from depcons.metrics import compute_metrics
from depcons.simulate import SimConfig, WorkerProfile

__version__ = "0.1.0"
