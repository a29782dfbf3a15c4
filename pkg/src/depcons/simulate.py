"""Generative simulator of dependent opinion formation with known ground truth.

Each question has a hidden true score. Every worker forms a private
opinion by adding rounded Gaussian noise to it, then discloses a score
pulled toward what they have seen from others:

* sequential protocol: workers arrive one at a time and see every earlier
  disclosed score; the first to arrive always discloses their own opinion.
* two-phase protocol: everyone first answers independently (prior), then
  answers again after seeing all priors (posterior).

Two disclosure rules are available. ``blend`` (default) moves the opinion
a fraction ``gamma`` of the way to the reference score and rounds.
``mixture`` copies the rounded reference with probability ``gamma`` and
otherwise reports the private opinion; it is the channel assumed by
:mod:`depcons.inference`.

Randomness is drawn from per-(replication, question) generators seeded
from the master seed, so results do not depend on execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from depcons.dataset import (
    SEQUENTIAL,
    TWO_PHASE,
    Dataset,
    LabelScale,
    OpinionEvent,
    TwoPhaseRecord,
    numeric_scale,
)
from depcons.errors import ConfigInvalid

BLEND = "blend"
MIXTURE = "mixture"
DISCLOSURES = (BLEND, MIXTURE)
MEAN_TARGET = "mean"
MODE_TARGET = "mode"
RANDOM_ARRIVAL = "random"
FIXED_ARRIVAL = "fixed"

# stream tags for seed derivation
_PROFILE_STREAM = 1
_QUESTION_STREAM = 2


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def clamp(score: int, k: int) -> int:
    return min(max(score, 1), k)


@dataclass(frozen=True)
class WorkerProfile:
    worker_id: str
    competence_sigma: float = 1.0
    conformity_gamma: float = 0.0

    def __post_init__(self) -> None:
        if self.competence_sigma < 0:
            raise ConfigInvalid(f"{self.worker_id}: competence_sigma must be >= 0")
        if not 0.0 <= self.conformity_gamma <= 1.0:
            raise ConfigInvalid(f"{self.worker_id}: conformity_gamma must be in [0, 1]")


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    Either ``profiles`` lists every worker explicitly, or workers are drawn
    with ``sigma_range`` and ``gamma_range`` (uniform, inclusive bounds) from
    the master seed. ``truth`` pins every question's ground truth; when
    ``None`` each truth is uniform on the scale.
    """

    scale: LabelScale = field(default_factory=lambda: numeric_scale(7))
    n_workers: int = 5
    m_questions: int = 10
    mode: str = SEQUENTIAL
    seed: int = 0
    replications: int = 1
    profiles: tuple[WorkerProfile, ...] | None = None
    sigma_range: tuple[float, float] = (1.0, 1.0)
    gamma_range: tuple[float, float] = (0.0, 0.9)
    disclosure: str = BLEND
    target: str = MEAN_TARGET
    arrival: str = RANDOM_ARRIVAL
    truth: int | None = None

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.n_workers < 1 or self.m_questions < 1:
            raise ConfigInvalid("n_workers and m_questions must be >= 1")
        if self.replications < 1:
            raise ConfigInvalid("replications must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigInvalid("seed must be an unsigned 64-bit integer")
        if self.mode not in (SEQUENTIAL, TWO_PHASE):
            raise ConfigInvalid(f"unknown mode {self.mode!r}")
        if self.disclosure not in DISCLOSURES:
            raise ConfigInvalid(f"unknown disclosure rule {self.disclosure!r}")
        if self.target not in (MEAN_TARGET, MODE_TARGET):
            raise ConfigInvalid(f"unknown conformity target {self.target!r}")
        if self.arrival not in (RANDOM_ARRIVAL, FIXED_ARRIVAL):
            raise ConfigInvalid(f"unknown arrival order {self.arrival!r}")
        if self.profiles is not None:
            if len(self.profiles) != self.n_workers:
                raise ConfigInvalid(f"{len(self.profiles)} profiles given for {self.n_workers} workers")
            if len({p.worker_id for p in self.profiles}) != len(self.profiles):
                raise ConfigInvalid("worker ids in profiles must be unique")
        lo, hi = self.sigma_range
        if lo < 0 or hi < lo:
            raise ConfigInvalid(f"bad sigma_range {self.sigma_range}")
        lo, hi = self.gamma_range
        if lo < 0 or hi > 1 or hi < lo:
            raise ConfigInvalid(f"bad gamma_range {self.gamma_range}")
        if self.truth is not None and not 1 <= self.truth <= self.scale.k:
            raise ConfigInvalid(f"truth {self.truth} outside 1..{self.scale.k}")

    def question_ids(self, replication: int) -> list[str]:
        if self.replications == 1:
            return [f"q{j:03d}" for j in range(self.m_questions)]
        return [f"r{replication:03d}-q{j:03d}" for j in range(self.m_questions)]


def worker_ids(n: int) -> list[str]:
    return [f"w{i:02d}" for i in range(n)]


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for one named stream of the master seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


def resolve_profiles(config: SimConfig) -> tuple[WorkerProfile, ...]:
    if config.profiles is not None:
        return config.profiles
    rng = make_rng(config.seed, _PROFILE_STREAM, 0, 0)
    sigmas = rng.uniform(*config.sigma_range, size=config.n_workers)
    gammas = rng.uniform(*config.gamma_range, size=config.n_workers)
    return tuple(
        WorkerProfile(w, float(s), float(g)) for w, s, g in zip(worker_ids(config.n_workers), sigmas, gammas)
    )


def sample_true_opinion(truth_score: int, sigma: float, rng: np.random.Generator, k: int) -> int:
    """Private opinion: truth plus Gaussian noise, rounded and clamped to 1..k."""
    if sigma == 0:
        return clamp(int(truth_score), k)
    return clamp(round_half_up(truth_score + rng.normal(0.0, sigma)), k)


def opinion_pmf(truth_score: int, sigma: float, k: int) -> np.ndarray:
    """Exact distribution of :func:`sample_true_opinion` as a length-``k`` vector."""
    pmf = np.zeros(k)
    if sigma == 0:
        pmf[clamp(int(truth_score), k) - 1] = 1.0
        return pmf

    def cdf(x: float) -> float:
        return 0.5 * (1.0 + math.erf((x - truth_score) / (sigma * math.sqrt(2.0))))

    for s in range(1, k + 1):
        lo = 0.0 if s == 1 else cdf(s - 0.5)
        hi = 1.0 if s == k else cdf(s + 0.5)
        pmf[s - 1] = hi - lo
    return pmf / pmf.sum()


def reference_score(observed: Sequence[int], target: str = MEAN_TARGET) -> float:
    """What a conforming worker is pulled toward: the mean, or the mode of observed scores.

    Mode ties go to the candidate nearest the mean, then the lower score.
    """
    mean = math.fsum(observed) / len(observed)
    if target == MEAN_TARGET:
        return mean
    counts: dict[int, int] = {}
    for s in observed:
        counts[s] = counts.get(s, 0) + 1
    best = max(counts.values())
    return float(min((s for s, c in counts.items() if c == best), key=lambda s: (abs(s - mean), s)))


def disclose_sequential(
    true_opinion: int,
    previously_disclosed: Sequence[int],
    gamma: float,
    k: int,
    *,
    rule: str = BLEND,
    target: str = MEAN_TARGET,
    rng: np.random.Generator | None = None,
) -> int:
    """Score a worker reports after seeing ``previously_disclosed``.

    With no earlier opinions the private opinion is reported unchanged.
    The ``mixture`` rule needs ``rng``.
    """
    if not previously_disclosed:
        return true_opinion
    ref = reference_score(previously_disclosed, target)
    if rule == BLEND:
        return clamp(round_half_up((1.0 - gamma) * true_opinion + gamma * ref), k)
    if rng.random() < gamma:
        return clamp(round_half_up(ref), k)
    return true_opinion


@dataclass
class QuestionOutcome:
    question_id: str
    truth: int
    true_opinions: dict[str, int]
    events: list[OpinionEvent] = field(default_factory=list)
    records: list[TwoPhaseRecord] = field(default_factory=list)


def _truth(config: SimConfig, rng: np.random.Generator) -> int:
    drawn = int(rng.integers(1, config.scale.k + 1))
    return config.truth if config.truth is not None else drawn


def run_sequential(
    config: SimConfig,
    question_id: str,
    rng: np.random.Generator,
    profiles: Sequence[WorkerProfile] | None = None,
) -> QuestionOutcome:
    profiles = list(profiles if profiles is not None else resolve_profiles(config))
    k = config.scale.k
    truth = _truth(config, rng)
    if config.arrival == RANDOM_ARRIVAL:
        order = [profiles[i] for i in rng.permutation(len(profiles))]
    else:
        order = profiles
    true_ops = {p.worker_id: sample_true_opinion(truth, p.competence_sigma, rng, k) for p in order}
    disclosed: list[int] = []
    events = []
    for rank, p in enumerate(order):
        shown = disclose_sequential(
            true_ops[p.worker_id],
            disclosed,
            p.conformity_gamma,
            k,
            rule=config.disclosure,
            target=config.target,
            rng=rng,
        )
        disclosed.append(shown)
        events.append(OpinionEvent(question_id, rank, p.worker_id, config.scale.decode(shown)))
    return QuestionOutcome(question_id, truth, true_ops, events=events)


def run_two_phase(
    config: SimConfig,
    question_id: str,
    rng: np.random.Generator,
    profiles: Sequence[WorkerProfile] | None = None,
) -> QuestionOutcome:
    """Independent priors, then posteriors pulled toward the reference of all priors."""
    profiles = list(profiles if profiles is not None else resolve_profiles(config))
    k = config.scale.k
    truth = _truth(config, rng)
    priors = {p.worker_id: sample_true_opinion(truth, p.competence_sigma, rng, k) for p in profiles}
    posts = two_phase_posteriors(
        list(priors.values()),
        [p.conformity_gamma for p in profiles],
        k,
        rule=config.disclosure,
        target=config.target,
        rng=rng,
    )
    records = [TwoPhaseRecord(question_id, p.worker_id, priors[p.worker_id], s) for p, s in zip(profiles, posts)]
    return QuestionOutcome(question_id, truth, priors, records=records)


def two_phase_posteriors(
    priors: Sequence[int],
    gammas: Sequence[float],
    k: int,
    *,
    rule: str = BLEND,
    target: str = MEAN_TARGET,
    rng: np.random.Generator | None = None,
) -> list[int]:
    """Second-round scores after every worker has seen all first-round scores."""
    ref = reference_score(priors, target)
    posts = []
    for prior, g in zip(priors, gammas):
        if rule == BLEND:
            posts.append(clamp(round_half_up((1.0 - g) * prior + g * ref), k))
        else:
            posts.append(clamp(round_half_up(ref), k) if rng.random() < g else prior)
    return posts


@dataclass
class SimOutput:
    replication: int
    dataset: Dataset
    true_opinions: dict[tuple[str, str], int]
    ground_truth: dict[str, int]
    profiles: tuple[WorkerProfile, ...]


def simulate_replication(config: SimConfig, replication: int, profiles=None) -> SimOutput:
    profiles = tuple(profiles if profiles is not None else resolve_profiles(config))
    run = run_sequential if config.mode == SEQUENTIAL else run_two_phase
    outcomes = [
        run(config, q, make_rng(config.seed, _QUESTION_STREAM, replication, j), profiles)
        for j, q in enumerate(config.question_ids(replication))
    ]
    events = tuple(e for o in outcomes for e in o.events)
    records = tuple(sorted(r for o in outcomes for r in o.records))
    dataset = Dataset(
        scale=config.scale,
        mode=config.mode,
        events=events,
        records=records,
        question_ids=tuple(o.question_id for o in outcomes),
        worker_ids=tuple(sorted(p.worker_id for p in profiles)),
    )
    true_ops = {(w, o.question_id): s for o in outcomes for w, s in o.true_opinions.items()}
    return SimOutput(
        replication=replication,
        dataset=dataset,
        true_opinions=true_ops,
        ground_truth={o.question_id: o.truth for o in outcomes},
        profiles=profiles,
    )


def simulate(config: SimConfig, jobs: int = 1) -> list[SimOutput]:
    """All replications, in replication order regardless of ``jobs``."""
    profiles = resolve_profiles(config)
    reps = range(config.replications)
    if jobs <= 1:
        return [simulate_replication(config, r, profiles) for r in reps]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda r: simulate_replication(config, r, profiles), reps))


def merge_outputs(outputs: Sequence[SimOutput]) -> SimOutput:
    """Concatenate replications into one dataset (question ids are already distinct)."""
    first = outputs[0]
    events = tuple(e for o in outputs for e in o.dataset.events)
    records = tuple(r for o in outputs for r in o.dataset.records)
    dataset = Dataset(
        scale=first.dataset.scale,
        mode=first.dataset.mode,
        events=events,
        records=records,
        question_ids=tuple(q for o in outputs for q in o.dataset.question_ids),
        worker_ids=first.dataset.worker_ids,
    )
    return SimOutput(
        replication=-1,
        dataset=dataset,
        true_opinions={key: s for o in outputs for key, s in o.true_opinions.items()},
        ground_truth={q: t for o in outputs for q, t in o.ground_truth.items()},
        profiles=first.profiles,
    )
