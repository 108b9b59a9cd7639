"""Scoring of synthetic logs against real- and random-parameter baselines.

The distance experiment pairs every labeled "real" run with three fresh
simulations: one from coefficients re-sampled under the inferred profile,
one re-using the exact real coefficients, and one with coefficients drawn
uniformly from wide ranges. Per-run absolute differences of the three log
statistics are aggregated per profile as mean and standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .agents import ActionSequence, EpisodeLabel, run_episode
from .biases import (
    BiasParams,
    ChoiceConfig,
    DEFAULT_PARAM_TABLE,
    ParamDistributionTable,
    default_choice_config,
    sample_params,
)
from .inference import (
    EmissionTable,
    FeatureVector,
    extract_features,
    map_state,
    sequence_posterior,
)
from .world import ScenarioConfig

__all__ = [
    "RunStatistics",
    "run_statistics",
    "TTestResult",
    "welch_t_test",
    "MetricReport",
    "accuracy_and_cross_entropy",
    "DistanceReport",
    "distance_experiment",
    "STATISTIC_NAMES",
    "CONDITIONS",
    "RANDOM_PARAM_RANGES",
    "pooled_max_attempts",
    "trigger_effect_test",
]

STATISTIC_NAMES = ("aggressive_share", "confirm_share", "max_crack_attempts")
CONDITIONS = ("sampled", "real", "random")

# Uniform ranges for the random-parameter baseline; each brackets both modes
# of the default per-level Gaussians.
RANDOM_PARAM_RANGES = {
    "loss_aversion": (0.0, 2.5),
    "confirm_rate": (0.0, 1.0),
    "sunk_weight": (0.0, 1000.0),
}

_LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class RunStatistics:
    """The three observable statistics of one episode log."""

    aggressive_share: float
    confirm_share: float
    max_crack_attempts: int

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.aggressive_share, self.confirm_share, float(self.max_crack_attempts)]
        )

    @classmethod
    def from_features(cls, fv: FeatureVector) -> "RunStatistics":
        return cls(fv.aggressive_share, fv.confirm_share, fv.max_crack_attempts)


def run_statistics(sequence: ActionSequence | Iterable) -> RunStatistics:
    """Episode statistics; same definitions as the inference features."""
    return RunStatistics.from_features(extract_features(sequence))


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    dof: float

    def to_dict(self) -> dict:
        return {"t_statistic": self.t_statistic, "p_value": self.p_value, "dof": self.dof}


def welch_t_test(group_a: Sequence[float], group_b: Sequence[float]) -> TTestResult:
    """Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom."""
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each group needs at least two samples")
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))
    if var_a == 0.0 and var_b == 0.0:
        raise ValueError("degenerate groups: both variances are zero")
    sa = var_a / len(a)
    sb = var_b / len(b)
    se = math.sqrt(sa + sb)
    t = (float(a.mean()) - float(b.mean())) / se
    dof = (sa + sb) ** 2 / (sa**2 / (len(a) - 1) + sb**2 / (len(b) - 1))
    p = 2.0 * float(scipy_stats.t.sf(abs(t), dof))
    return TTestResult(t_statistic=t, p_value=p, dof=dof)


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    cross_entropy: float
    floored: int = 0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "cross_entropy": self.cross_entropy,
            "floored": self.floored,
        }


def accuracy_and_cross_entropy(
    predictions: Sequence[int],
    posteriors: Sequence[Sequence[float]],
    labels: Sequence[int],
) -> MetricReport:
    """Exact-match accuracy and mean negative log posterior on the truth.

    Posterior mass below the floor of 1e-12 is clamped and counted in
    ``floored``.
    """
    if not (len(predictions) == len(posteriors) == len(labels)) or not labels:
        raise ValueError("predictions, posteriors and labels must be aligned and nonempty")
    hits = 0
    total_nll = 0.0
    floored = 0
    for predicted, posterior, truth in zip(predictions, posteriors, labels):
        hits += int(predicted == truth)
        mass = float(posterior[truth])
        if mass < _LOG_FLOOR:
            mass = _LOG_FLOOR
            floored += 1
        total_nll -= math.log(mass)
    n = len(labels)
    return MetricReport(accuracy=hits / n, cross_entropy=total_nll / n, floored=floored)


@dataclass
class DistanceReport:
    """mean +/- std of per-run distances, per (profile, statistic, condition)."""

    cells: dict[tuple[int, str, str], tuple[float, float, int]] = field(default_factory=dict)
    per_run: list[dict] = field(default_factory=list)

    def mean(self, state_index: int, statistic: str, condition: str) -> float:
        return self.cells[(state_index, statistic, condition)][0]

    def std(self, state_index: int, statistic: str, condition: str) -> float:
        return self.cells[(state_index, statistic, condition)][1]

    def states(self) -> list[int]:
        return sorted({key[0] for key in self.cells})

    def to_dict(self) -> dict:
        return {
            "schema": "apt-distance-report",
            "version": 1,
            "cells": [
                {
                    "state": state,
                    "statistic": statistic,
                    "condition": condition,
                    "mean": mean,
                    "std": std,
                    "runs": runs,
                }
                for (state, statistic, condition), (mean, std, runs) in sorted(self.cells.items())
            ],
        }

    def to_text(self) -> str:
        lines = []
        header = f"{'statistic':<22}{'state':<8}" + "".join(f"{c:<18}" for c in CONDITIONS)
        for statistic in STATISTIC_NAMES:
            lines.append(statistic)
            lines.append(header)
            for state in self.states():
                row = f"{'':<22}state{state:<3}"
                for condition in CONDITIONS:
                    cell = self.cells.get((state, statistic, condition))
                    row += f"{'-':<18}" if cell is None else f"{cell[0]:.2f} +/- {cell[1]:.2f}    "
                lines.append(row)
            lines.append("")
        return "\n".join(lines)

    def csv_rows(self) -> list[str]:
        rows = ["state,statistic,condition,run_index,real_value,synthetic_value,distance"]
        for entry in self.per_run:
            rows.append(
                "{state},{statistic},{condition},{run_index},{real_value},{synthetic_value},{distance}".format(
                    **entry
                )
            )
        return rows


def _random_params(rng: np.random.Generator) -> BiasParams:
    return BiasParams(
        loss_aversion=float(rng.uniform(*RANDOM_PARAM_RANGES["loss_aversion"])),
        confirm_rate=float(rng.uniform(*RANDOM_PARAM_RANGES["confirm_rate"])),
        sunk_weight=float(rng.uniform(*RANDOM_PARAM_RANGES["sunk_weight"])),
    )


def distance_experiment(
    entries: Sequence[tuple[ActionSequence, EpisodeLabel]],
    scenario: ScenarioConfig,
    emissions: EmissionTable,
    *,
    param_table: ParamDistributionTable = DEFAULT_PARAM_TABLE,
    choice_config: Optional[ChoiceConfig] = None,
    master_seed: int = 0,
    states: Optional[Sequence[int]] = None,
    conditions: Sequence[str] = CONDITIONS,
    min_runs_per_state: int = 1,
    reuse_seed: bool = False,
) -> DistanceReport:
    """Pair each real run with re-simulations and aggregate the distances.

    Conditions:
      * ``sampled``: infer the profile from the log, draw fresh coefficients
        from that profile, simulate.
      * ``real``: re-simulate with the run's exact coefficients on a new
        seed (or the original seed when ``reuse_seed`` is set, a determinism
        sanity mode that must give zero distance).
      * ``random``: coefficients drawn uniformly from the baseline ranges.
    """
    config = choice_config or default_choice_config()
    grouped: dict[int, list[tuple[ActionSequence, EpisodeLabel]]] = {}
    for sequence, label in entries:
        if label.state_index is None:
            raise ValueError("distance experiment requires profile-labeled runs")
        grouped.setdefault(label.state_index, []).append((sequence, label))

    wanted = sorted(grouped) if states is None else sorted(states)
    for state in wanted:
        if len(grouped.get(state, ())) < min_runs_per_state:
            raise ValueError(
                f"state {state}: {len(grouped.get(state, ()))} runs, need {min_runs_per_state}"
            )

    report = DistanceReport()
    distances: dict[tuple[int, str, str], list[float]] = {}
    for state in wanted:
        for run_index, (sequence, label) in enumerate(grouped[state]):
            real_stats = run_statistics(sequence).as_array()
            inferred = map_state(sequence_posterior(sequence, emissions))
            for condition in conditions:
                draw_rng = np.random.default_rng(
                    np.random.SeedSequence([master_seed, 101, state, run_index])
                )
                if condition == "sampled":
                    params = sample_params(inferred, draw_rng, param_table)
                    seed = (master_seed, 211, state, run_index)
                elif condition == "real":
                    params = label.params
                    seed = label.seed_key if reuse_seed else (master_seed, 223, state, run_index)
                elif condition == "random":
                    params = _random_params(draw_rng)
                    seed = (master_seed, 227, state, run_index)
                else:
                    raise ValueError(f"unknown condition {condition!r}")
                episode = run_episode(
                    scenario, params=params, choice_config=config, seed=seed
                )
                synthetic = run_statistics(episode.sequence).as_array()
                for column, statistic in enumerate(STATISTIC_NAMES):
                    distance = abs(float(real_stats[column] - synthetic[column]))
                    distances.setdefault((state, statistic, condition), []).append(distance)
                    report.per_run.append(
                        {
                            "state": state,
                            "statistic": statistic,
                            "condition": condition,
                            "run_index": run_index,
                            "real_value": float(real_stats[column]),
                            "synthetic_value": float(synthetic[column]),
                            "distance": distance,
                        }
                    )
    for key, values in distances.items():
        arr = np.asarray(values)
        report.cells[key] = (float(arr.mean()), float(arr.std()), len(values))
    return report


def pooled_max_attempts(
    entries: Iterable[tuple[ActionSequence, EpisodeLabel]], high_sunk_only: bool = True
) -> list[int]:
    """Max-crack-attempt statistic pooled over (high-sunk) labeled runs."""
    pooled = []
    for sequence, label in entries:
        if high_sunk_only:
            if label.state_index is None or not label.state_index & 1:
                continue
        pooled.append(run_statistics(sequence).max_crack_attempts)
    return pooled


def trigger_effect_test(
    trigger_entries: Sequence[tuple[ActionSequence, EpisodeLabel]],
    baseline_entries: Sequence[tuple[ActionSequence, EpisodeLabel]],
) -> TTestResult:
    """Welch test of trigger vs baseline pooled high-sunk max attempts.

    A positive t-statistic means the trigger raised the statistic.
    """
    return welch_t_test(
        pooled_max_attempts(trigger_entries), pooled_max_attempts(baseline_entries)
    )
