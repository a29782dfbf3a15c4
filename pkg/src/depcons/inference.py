"""Exact posterior over true opinions given a disclosed sequence.

Under a disclosure model ``D_i(shown | true, earlier shown)`` the
probability of the whole disclosed sequence given a vector of true
opinions factorizes over arrival order. Bayes' rule with a prior over true
vectors then gives the posterior; we get it by enumerating all ``k**n``
true vectors, which is exact and fine for small crowds.

Two kernels are provided:

``mixture`` (default)
    With probability ``gamma`` the worker reports the rounded mean of what
    they saw, otherwise their true opinion.
``blend``
    Deterministic: the worker reports ``round((1 - gamma) * true + gamma * mean)``.

A worker with nothing to observe always reports the truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from depcons.dataset import SEQUENTIAL, Dataset, LabelScale
from depcons.errors import EnumerationTooLarge, LengthMismatch, ScoreOutOfRange, WrongMode, ZeroEvidence
from depcons.simulate import BLEND, MIXTURE, clamp, opinion_pmf, round_half_up

ENUMERATION_LIMIT = 8
MAX_SUPPORT = 10**7
_CHUNK = 1 << 18


@dataclass(frozen=True)
class BiasModel:
    scale: LabelScale
    gammas: tuple[float, ...]
    kernel: str = MIXTURE

    def __post_init__(self) -> None:
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if any(not 0.0 <= g <= 1.0 for g in self.gammas):
            raise ValueError("gammas must lie in [0, 1]")
        if self.kernel not in (MIXTURE, BLEND):
            raise ValueError(f"unknown kernel {self.kernel!r}")

    @property
    def n(self) -> int:
        return len(self.gammas)

    def kernel_row(self, i: int, true_score: int, history: Sequence[int]) -> np.ndarray:
        """Distribution over the disclosed score of worker ``i`` (index 0 = score 1)."""
        k = self.scale.k
        row = np.zeros(k)
        if not history:
            row[true_score - 1] = 1.0
            return row
        mean = math.fsum(history) / len(history)
        g = self.gammas[i]
        if self.kernel == BLEND:
            row[clamp(round_half_up((1.0 - g) * true_score + g * mean), k) - 1] = 1.0
            return row
        row[clamp(round_half_up(mean), k) - 1] += g
        row[true_score - 1] += 1.0 - g
        return row

    def likelihood_table(self, disclosed: Sequence[int]) -> np.ndarray:
        """``table[i, o - 1] = D_i(disclosed[i] | o, disclosed[:i])``."""
        n, k = len(disclosed), self.scale.k
        table = np.empty((n, k))
        for i in range(n):
            for o in range(1, k + 1):
                table[i, o - 1] = self.kernel_row(i, o, disclosed[:i])[disclosed[i] - 1]
        return table


def _check_vector(vec: Sequence[int], k: int, name: str) -> None:
    for s in vec:
        if not 1 <= s <= k:
            raise ScoreOutOfRange(f"{name} score {s} outside 1..{k}")


def sequence_likelihood(bias: BiasModel, true_vector: Sequence[int], disclosed_vector: Sequence[int]) -> float:
    """Probability of the disclosed sequence given every worker's true opinion."""
    n = len(true_vector)
    if len(disclosed_vector) != n or n != bias.n:
        raise LengthMismatch(
            f"true vector has {n} entries, disclosed {len(disclosed_vector)}, model {bias.n} workers"
        )
    k = bias.scale.k
    _check_vector(true_vector, k, "true")
    _check_vector(disclosed_vector, k, "disclosed")
    p = 1.0
    for i in range(n):
        p *= bias.kernel_row(i, true_vector[i], disclosed_vector[:i])[disclosed_vector[i] - 1]
        if p == 0.0:
            break
    return p


@dataclass(frozen=True)
class PosteriorTable:
    """Row ``i`` is the posterior over true scores ``1..k`` of the ``i``-th arrival."""

    probabilities: np.ndarray
    disclosed: tuple[int, ...]
    evidence: float
    support_size: int

    @property
    def n(self) -> int:
        return self.probabilities.shape[0]


def uniform_prior(n: int, k: int) -> np.ndarray:
    return np.full((n, k), 1.0 / k)


def latent_truth_prior(
    k: int, sigmas: Sequence[float], truth_weights: Sequence[float] | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Hierarchical prior of the simulator: a shared truth, then rounded Gaussian opinions.

    Returns ``(components, weights)`` for :func:`posterior_true` where
    ``components[t, i]`` is worker ``i``'s opinion distribution when the
    truth is ``t + 1``. ``truth_weights`` defaults to uniform.
    """
    comps = np.array([[opinion_pmf(t, s, k) for s in sigmas] for t in range(1, k + 1)])
    weights = np.full(k, 1.0 / k) if truth_weights is None else np.asarray(truth_weights, float)
    return comps, weights / weights.sum()


def posterior_true(
    bias: BiasModel,
    prior: np.ndarray,
    disclosed_vector: Sequence[int],
    *,
    mixture_weights: np.ndarray | None = None,
    limit: int = ENUMERATION_LIMIT,
) -> PosteriorTable:
    """Posterior marginals of each worker's true opinion by full enumeration.

    ``prior`` is either an ``(n, k)`` array of independent per-worker
    distributions, or an ``(T, n, k)`` array of such components mixed with
    ``mixture_weights`` (length ``T``), which lets workers' opinions share
    a latent cause such as the question's truth.

    Raises:
        EnumerationTooLarge: ``n > limit`` or ``k**n`` exceeds ``MAX_SUPPORT``.
        ZeroEvidence: the sequence is impossible under model and prior.
    """
    disclosed = tuple(int(s) for s in disclosed_vector)
    n, k = len(disclosed), bias.scale.k
    if n != bias.n:
        raise LengthMismatch(f"{n} disclosed scores for a {bias.n}-worker model")
    _check_vector(disclosed, k, "disclosed")
    if n > limit or k**n > MAX_SUPPORT:
        raise EnumerationTooLarge(f"k**n = {k}**{n} is beyond the enumeration limit (n <= {limit})")

    prior = np.asarray(prior, dtype=float)
    if prior.ndim == 2:
        prior = prior[None]
        mixture_weights = np.ones(1)
    elif mixture_weights is None:
        raise ValueError("a 3-d prior needs mixture_weights")
    if prior.shape[1:] != (n, k):
        raise LengthMismatch(f"prior shape {prior.shape} does not match n={n}, k={k}")
    mixture_weights = np.asarray(mixture_weights, dtype=float)

    # Fold the (history-dependent but true-vector-independent) likelihood
    # factors into the prior so each enumerated vector costs n lookups.
    factors = prior * bias.likelihood_table(disclosed)[None]

    marginals = np.zeros((n, k))
    total = 0.0
    size = k**n
    for start in range(0, size, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, size))
        block = np.stack(np.unravel_index(flat, (k,) * n), axis=1)
        joint = np.zeros(len(block))
        for t, w in enumerate(mixture_weights):
            comp = np.full(len(block), w)
            for i in range(n):
                comp *= factors[t, i, block[:, i]]
            joint += comp
        total += joint.sum()
        for i in range(n):
            marginals[i] += np.bincount(block[:, i], weights=joint, minlength=k)

    if total <= 0.0:
        raise ZeroEvidence(f"disclosed sequence {list(disclosed)} has probability 0 under the model")
    return PosteriorTable(marginals / total, disclosed, float(total), size)


def map_true_opinions(posterior: PosteriorTable, rtol: float = 1e-12) -> list[int]:
    """Per-worker argmax; near-ties prefer the disclosed score, then the lower score."""
    out = []
    for i, row in enumerate(posterior.probabilities):
        best = row.max()
        tied = [s for s in range(1, len(row) + 1) if row[s - 1] >= best * (1.0 - rtol)]
        shown = posterior.disclosed[i]
        out.append(shown if shown in tied else tied[0])
    return out


@dataclass(frozen=True)
class QuestionInference:
    question_id: str
    worker_ids: tuple[str, ...]
    table: PosteriorTable
    map_scores: tuple[int, ...]


def infer_dataset(
    dataset: Dataset,
    gammas: dict[str, float] | float,
    *,
    kernel: str = MIXTURE,
    sigmas: dict[str, float] | float | None = None,
    limit: int = ENUMERATION_LIMIT,
) -> list[QuestionInference]:
    """Posterior tables for every question of a sequential dataset.

    With ``sigmas`` the simulator's latent-truth prior is used; without,
    each worker's true opinion is a priori uniform.
    """
    if dataset.mode != SEQUENTIAL:
        raise WrongMode(f"inference needs a sequential dataset, got {dataset.mode}")
    scale = dataset.scale
    out = []
    for q, events in sorted(dataset.sequences().items()):
        workers = tuple(e.worker_id for e in events)
        shown = [scale.encode(e.label) for e in events]
        g = [gammas[w] if isinstance(gammas, dict) else gammas for w in workers]
        bias = BiasModel(scale, tuple(g), kernel)
        if sigmas is None:
            table = posterior_true(bias, uniform_prior(len(workers), scale.k), shown, limit=limit)
        else:
            s = [sigmas[w] if isinstance(sigmas, dict) else sigmas for w in workers]
            comps, weights = latent_truth_prior(scale.k, s)
            table = posterior_true(bias, comps, shown, mixture_weights=weights, limit=limit)
        out.append(QuestionInference(q, workers, table, tuple(map_true_opinions(table))))
    return out
