"""Bias-profile inference from action logs.

Two routes recover the hidden profile:

* a Bayesian recursion over the four informative action kinds, with
  per-profile emission probabilities obtained by integrating the behavior
  model over the coefficient distributions (Gauss-Hermite quadrature for
  the discovery choice, an exact censored-normal mean for the confirm rate),
* a CART classifier over three relative-frequency features.

The sunk-cost bit is not identifiable from emissions alone (both levels
yield identical discovery and checking statistics), so Bayesian accuracy is
scored over the four loss x confirmation classes; profile pairs that differ
only in the sunk bit share posterior mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .agents import (
    ActionRecord,
    ActionSequence,
    AGGRESSIVE_DISCOVERY,
    BRUTEFORCE_CRACK,
    CREDENTIAL_CONFIRM,
    CREDENTIAL_DISCONFIRM,
    PASSWORD_CRACK,
    STEALTH_DISCOVERY,
)
from .biases import (
    BIAS_STATES,
    BiasState,
    ChoiceConfig,
    CONFIRM_RATE_MAX,
    CONFIRM_RATE_MIN,
    DEFAULT_PARAM_TABLE,
    ParamDistributionTable,
    aggressive_probability_vec,
    default_choice_config,
)

__all__ = [
    "OBSERVABLE_COLUMNS",
    "EmissionTable",
    "reference_emission_table",
    "compute_emissions",
    "Posterior",
    "observation_column",
    "bayes_update",
    "sequence_posterior",
    "map_state",
    "identifiable_class",
    "class_posterior",
    "FeatureVector",
    "extract_features",
]

# Emission-table columns, in order: the four informative action kinds.
OBSERVABLE_COLUMNS: dict[int, int] = {
    AGGRESSIVE_DISCOVERY: 0,
    STEALTH_DISCOVERY: 1,
    CREDENTIAL_CONFIRM: 2,
    CREDENTIAL_DISCONFIRM: 3,
}

# Calibration targets for the default parameter table: discovery-aggression
# rates at the low/high loss-aversion means, confirm rates at the low/high
# confirmation means.
REFERENCE_AGGRESSIVE = (0.66, 0.33)
REFERENCE_CONFIRM = (0.19, 0.79)


@dataclass(frozen=True)
class EmissionTable:
    """Per-profile probabilities of the four informative action kinds.

    Columns are (aggressive, stealth, confirm, disconfirm); the first and
    last pairs are conditional within their own action family and each sum
    to one.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (8, 4):
            raise ValueError(f"emission table must be 8x4, got {probs.shape}")
        if (probs < 0).any() or (probs > 1).any():
            raise ValueError("emission probabilities must lie in [0, 1]")
        pair_sums = probs[:, :2].sum(axis=1), probs[:, 2:].sum(axis=1)
        for sums in pair_sums:
            if np.abs(sums - 1.0).max() > 1e-6:
                raise ValueError("emission pairs must each sum to 1")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def column(self, action_id: int) -> np.ndarray:
        return self.probs[:, OBSERVABLE_COLUMNS[action_id]]

    def for_state(self, index: int) -> np.ndarray:
        return self.probs[index]

    def to_dict(self) -> dict:
        return {
            "schema": "apt-emission-table",
            "version": 1,
            "columns": ["aggressive", "stealth", "confirm", "disconfirm"],
            "rows": [[float(x) for x in row] for row in self.probs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EmissionTable":
        if data.get("schema") != "apt-emission-table":
            raise ValueError("not an emission-table document")
        return cls(np.asarray(data["rows"], dtype=float))


def reference_emission_table() -> EmissionTable:
    """The target table the default calibration is meant to reproduce."""
    rows = np.empty((8, 4))
    for state in BIAS_STATES:
        p_ua = REFERENCE_AGGRESSIVE[state.bits[0]]
        p_uc = REFERENCE_CONFIRM[state.bits[1]]
        rows[state.index] = (p_ua, 1 - p_ua, p_uc, 1 - p_uc)
    return EmissionTable(rows)


def _censored_normal_mean(mean: float, sigma: float, lo: float, hi: float) -> float:
    """E[clip(X, lo, hi)] for X ~ N(mean, sigma^2), in closed form."""
    a = (lo - mean) / sigma
    b = (hi - mean) / sigma
    cdf = lambda z: 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
    pdf = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return (
        lo * cdf(a)
        + hi * (1.0 - cdf(b))
        + mean * (cdf(b) - cdf(a))
        + sigma * (pdf(a) - pdf(b))
    )


def compute_emissions(
    table: ParamDistributionTable = DEFAULT_PARAM_TABLE,
    config: Optional[ChoiceConfig] = None,
    quadrature_nodes: int = 128,
) -> EmissionTable:
    """Integrate the behavior model over each profile's coefficient Gaussians.

    The discovery-aggression probability is averaged over the loss-aversion
    Gaussian with Gauss-Hermite quadrature; the confirm probability is the
    mean of the confirm-rate Gaussian censored to its sampling bounds.
    """
    if quadrature_nodes < 16:
        raise ValueError(f"quadrature_nodes must be >= 16, got {quadrature_nodes}")
    config = config or default_choice_config()
    nodes, weights = np.polynomial.hermite.hermgauss(quadrature_nodes)
    weights = weights / math.sqrt(math.pi)
    rows = np.empty((8, 4))
    for state in BIAS_STATES:
        loss_spec, confirm_spec, _ = table.specs_for(state)
        lam = loss_spec.mean + math.sqrt(2.0) * loss_spec.stddev * nodes
        p_ua = float(weights @ aggressive_probability_vec(config, lam))
        p_uc = _censored_normal_mean(
            confirm_spec.mean, confirm_spec.stddev, CONFIRM_RATE_MIN, CONFIRM_RATE_MAX
        )
        rows[state.index] = (p_ua, 1.0 - p_ua, p_uc, 1.0 - p_uc)
    return EmissionTable(rows)


@dataclass(frozen=True)
class Posterior:
    """Probability vector over the eight bias profiles."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (8,):
            raise ValueError(f"posterior must have 8 entries, got {probs.shape}")
        if (probs < 0).any():
            raise ValueError("posterior entries must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"posterior must sum to 1, got {probs.sum()}")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls) -> "Posterior":
        return cls(np.full(8, 0.125))


def observation_column(record: ActionRecord) -> Optional[int]:
    """Emission-table column for a record, or None when uninformative."""
    return OBSERVABLE_COLUMNS.get(record.action_id)


def bayes_update(posterior: Posterior, action_id: int, emissions: EmissionTable) -> Posterior:
    """One multiplicative posterior update for an informative action."""
    if action_id not in OBSERVABLE_COLUMNS:
        raise ValueError(f"action {action_id} is not an informative observation")
    weighted = posterior.probs * emissions.column(action_id)
    total = float(weighted.sum())
    if total <= 0.0:
        raise ValueError("all profiles assign zero likelihood to this observation")
    return Posterior(weighted / total)


def sequence_posterior(
    sequence: ActionSequence | Iterable[ActionRecord],
    emissions: EmissionTable,
    prior: Optional[Posterior] = None,
    keep_trace: bool = False,
):
    """Run the Bayesian recursion over a log; uninformative actions are skipped.

    Returns the final posterior, or ``(posterior, trace)`` with one entry
    per informative action when ``keep_trace`` is set.
    """
    posterior = prior or Posterior.uniform()
    trace: list[Posterior] = []
    for record in sequence:
        if record.action_id in OBSERVABLE_COLUMNS:
            posterior = bayes_update(posterior, record.action_id, emissions)
            if keep_trace:
                trace.append(posterior)
    if keep_trace:
        return posterior, trace
    return posterior


def map_state(posterior: Posterior) -> BiasState:
    """Most probable profile; ties break toward the lowest index."""
    return BIAS_STATES[int(np.argmax(posterior.probs))]


def identifiable_class(state: BiasState | int) -> int:
    """Collapse a profile to its (loss, confirmation) class in 0..3."""
    index = state.index if isinstance(state, BiasState) else int(state)
    return index // 2


def class_posterior(posterior: Posterior) -> np.ndarray:
    """Posterior over the four identifiable classes (sunk bit marginalized)."""
    return posterior.probs.reshape(4, 2).sum(axis=1)


@dataclass(frozen=True)
class FeatureVector:
    """Relative-frequency summary of one action log."""

    aggressive_share: float
    confirm_share: float
    max_crack_attempts: int

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.aggressive_share, self.confirm_share, float(self.max_crack_attempts)]
        )


FEATURE_NAMES = ("aggressive_share", "confirm_share", "max_crack_attempts")

# Share features default to the uninformative midpoint when a log contains
# no action of that family.
EMPTY_SHARE = 0.5


def extract_features(sequence: ActionSequence | Iterable[ActionRecord]) -> FeatureVector:
    """Compute the three inference features from a log."""
    aggressive = stealth = confirm = disconfirm = 0
    crack_counts: dict[tuple[str, Optional[str]], int] = {}
    for record in sequence:
        action = record.action_id
        if action == AGGRESSIVE_DISCOVERY:
            aggressive += 1
        elif action == STEALTH_DISCOVERY:
            stealth += 1
        elif action == CREDENTIAL_CONFIRM:
            confirm += 1
        elif action == CREDENTIAL_DISCONFIRM:
            disconfirm += 1
        elif action in (BRUTEFORCE_CRACK, PASSWORD_CRACK):
            key = (record.host, record.target)
            crack_counts[key] = crack_counts.get(key, 0) + 1
    discovery_total = aggressive + stealth
    check_total = confirm + disconfirm
    return FeatureVector(
        aggressive_share=aggressive / discovery_total if discovery_total else EMPTY_SHARE,
        confirm_share=confirm / check_total if check_total else EMPTY_SHARE,
        max_crack_attempts=max(crack_counts.values()) if crack_counts else 0,
    )
