"""Turn per-target log-probabilities into predictions, scores, and features.

Prediction picks the target with the highest summed token log-probability
(total, not length-normalized, by default; a length-normalized variant sits
behind a flag). Accuracy is rescaled so random chance maps to 0 and perfect
to 100, which makes tasks with different numbers of choices comparable.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .corpus import TaskExample
from .errors import MissingValueError, ValidationFailure
from .interchange import ExampleScores

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExampleOutcome:
    example_id: str
    predicted_index: int
    correct: bool


@dataclass(frozen=True)
class TaskResult:
    task: str
    model_id: str
    shots: int
    per_example: tuple[ExampleOutcome, ...]
    accuracy: float
    normalized_score: float
    baseline: float


@dataclass(frozen=True)
class PerplexityFeatures:
    """Per-example and mean per-token log-losses (nats/token, log space)."""

    example_ids: tuple[str, ...]
    input_logloss: tuple[float, ...]
    target_logloss: tuple[float, ...]
    mean_input_logloss: float
    mean_target_logloss: float


@dataclass(frozen=True)
class CorrectnessSplit:
    correct_values: tuple[float, ...]
    incorrect_values: tuple[float, ...]
    quartile_accuracies: tuple[float, ...]  # accuracy per similarity quartile, ascending similarity
    quartile_sizes: tuple[int, ...]


def predict(scores: ExampleScores, length_normalized: bool = False) -> int:
    """Index of the highest-scoring target; ties go to the lowest index."""
    values = np.asarray(scores.target_logprobs, dtype=np.float64)
    if values.size == 0:
        raise ValidationFailure(f"{scores.example_id}: no target log-probabilities")
    if np.any(np.isnan(values)):
        raise ValidationFailure(f"{scores.example_id}: NaN in target log-probabilities")
    if length_normalized:
        if not scores.target_token_counts:
            raise ValidationFailure(f"{scores.example_id}: token counts required for length normalization")
        values = values / np.asarray(scores.target_token_counts, dtype=np.float64)
    best = int(np.argmax(values))  # argmax returns the first maximum
    if np.count_nonzero(values == values[best]) > 1:
        log.warning("%s: tie between targets, keeping lowest index %d", scores.example_id, best)
    return best


def normalized_score(accuracy: float, baseline: float) -> float:
    """Rescale accuracy so the random baseline maps to 0 and perfect to 100."""
    if not 0.0 <= accuracy <= 1.0:
        raise ValidationFailure(f"accuracy {accuracy} outside [0, 1]")
    if not 0.0 < baseline < 1.0:
        raise ValidationFailure(f"baseline {baseline} outside (0, 1)")
    return 100.0 * (accuracy - baseline) / (1.0 - baseline)


def evaluate_task(
    task: str,
    model_id: str,
    shots: int,
    examples: list[TaskExample],
    scores: dict[str, ExampleScores],
    baseline: float,
    length_normalized: bool = False,
) -> TaskResult:
    outcomes = []
    for ex in examples:
        sc = scores.get(ex.id)
        if sc is None:
            raise MissingValueError(f"no scores for example '{ex.id}'")
        if len(sc.target_logprobs) != len(ex.targets):
            raise ValidationFailure(
                f"example '{ex.id}': {len(sc.target_logprobs)} log-probabilities for {len(ex.targets)} targets"
            )
        pred = predict(sc, length_normalized=length_normalized)
        outcomes.append(ExampleOutcome(example_id=ex.id, predicted_index=pred, correct=pred == ex.correct_index))
    accuracy = sum(o.correct for o in outcomes) / len(outcomes)
    return TaskResult(
        task=task,
        model_id=model_id,
        shots=shots,
        per_example=tuple(outcomes),
        accuracy=accuracy,
        normalized_score=normalized_score(accuracy, baseline),
        baseline=baseline,
    )


def perplexity_features(scores: list[ExampleScores]) -> PerplexityFeatures:
    """Mean per-token log-loss of inputs and of correct targets.

    Values stay in log space (nats/token); exponentiate only for display.
    Means weighted by example count commute with dataset concatenation.
    """
    if not scores:
        raise ValidationFailure("no scores to aggregate")
    input_losses = tuple(s.input_logloss_per_token for s in scores)
    target_losses = tuple(s.correct_target_logloss_per_token for s in scores)
    return PerplexityFeatures(
        example_ids=tuple(s.example_id for s in scores),
        input_logloss=input_losses,
        target_logloss=target_losses,
        mean_input_logloss=float(math.fsum(input_losses) / len(scores)),
        mean_target_logloss=float(math.fsum(target_losses) / len(scores)),
    )


def split_correct(result: TaskResult, similarity: dict[str, float]) -> CorrectnessSplit:
    """Partition per-example similarity by correctness and compute accuracy
    within each similarity quartile (quartile sizes differ by at most 1)."""
    rows = []
    for outcome in result.per_example:
        if outcome.example_id not in similarity:
            raise MissingValueError(f"no similarity value for example '{outcome.example_id}'")
        rows.append((similarity[outcome.example_id], outcome.example_id, outcome.correct))

    correct_values = tuple(v for v, _, ok in rows if ok)
    incorrect_values = tuple(v for v, _, ok in rows if not ok)

    rows.sort(key=lambda r: (r[0], r[1]))  # id tie-break keeps the split deterministic
    quartiles = np.array_split(np.arange(len(rows)), 4)
    accs = []
    sizes = []
    for idx in quartiles:
        sizes.append(int(idx.size))
        accs.append(float(np.mean([rows[i][2] for i in idx])) if idx.size else float("nan"))
    return CorrectnessSplit(
        correct_values=correct_values,
        incorrect_values=incorrect_values,
        quartile_accuracies=tuple(accs),
        quartile_sizes=tuple(sizes),
    )
