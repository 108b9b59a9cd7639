"""Cognitive-bias behavior model for simulated intruders.

Pure math, no world state. Three behavioral distortions are modeled:

* loss aversion: a prospect-style utility with a loss-weighting coefficient
  drives the choice between aggressive and stealthy service discovery,
* confirmation bias: a fixed per-attacker rate of reading credential-file
  evidence as confirming,
* sunk-cost weighting: invested cracking attempts inflate a target's
  perceived value, producing lock-in on a single file.

Each hidden bias profile (``BiasState``) maps to Gaussians over the three
continuous coefficients; one draw per episode fixes the attacker's behavior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "BiasLevel",
    "BiasState",
    "BIAS_STATES",
    "BiasParams",
    "GaussianSpec",
    "ParamDistributionTable",
    "DEFAULT_PARAM_TABLE",
    "Prospect",
    "ChoiceConfig",
    "CalibrationError",
    "subjective_utility",
    "prospect_utility",
    "aggressive_probability",
    "calibrate_choice",
    "default_choice_config",
    "perceived_value",
    "target_distribution",
    "sample_params",
    "confirm_decision",
    "LOSS_AVERSION_FLOOR",
    "CONFIRM_RATE_MIN",
    "CONFIRM_RATE_MAX",
]

# Sampling clamps. The confirm-rate bounds keep every observation possible
# under every profile, so Bayesian log-likelihoods never hit -inf.
LOSS_AVERSION_FLOOR = 0.01
CONFIRM_RATE_MIN = 0.01
CONFIRM_RATE_MAX = 0.99
SUNK_WEIGHT_FLOOR = 0.0


class CalibrationError(ValueError):
    """Choice calibration targets are infeasible."""


class BiasLevel(Enum):
    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True)
class BiasState:
    """One of the eight hidden bias profiles (three two-level biases)."""

    loss_aversion: BiasLevel
    confirmation: BiasLevel
    sunk_cost: BiasLevel

    @property
    def index(self) -> int:
        return (
            4 * (self.loss_aversion is BiasLevel.HIGH)
            + 2 * (self.confirmation is BiasLevel.HIGH)
            + 1 * (self.sunk_cost is BiasLevel.HIGH)
        )

    @property
    def bits(self) -> tuple[int, int, int]:
        """(loss, confirmation, sunk) as 0/1 flags."""
        return (
            int(self.loss_aversion is BiasLevel.HIGH),
            int(self.confirmation is BiasLevel.HIGH),
            int(self.sunk_cost is BiasLevel.HIGH),
        )

    @property
    def label(self) -> str:
        return f"state{self.index}"

    @classmethod
    def from_index(cls, index: int) -> "BiasState":
        if not 0 <= index <= 7:
            raise ValueError(f"bias state index out of range: {index}")
        return cls(
            loss_aversion=BiasLevel.HIGH if index & 4 else BiasLevel.LOW,
            confirmation=BiasLevel.HIGH if index & 2 else BiasLevel.LOW,
            sunk_cost=BiasLevel.HIGH if index & 1 else BiasLevel.LOW,
        )

    @classmethod
    def from_bits(cls, loss: int, confirmation: int, sunk: int) -> "BiasState":
        return cls.from_index(4 * int(loss) + 2 * int(confirmation) + int(sunk))


BIAS_STATES: tuple[BiasState, ...] = tuple(BiasState.from_index(i) for i in range(8))


@dataclass(frozen=True)
class GaussianSpec:
    """Normal distribution given as (mean, variance)."""

    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance}")

    @property
    def stddev(self) -> float:
        return math.sqrt(self.variance)

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.normal(self.mean, self.stddev))

    def to_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance}

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianSpec":
        return cls(mean=float(data["mean"]), variance=float(data["variance"]))


@dataclass(frozen=True)
class ParamDistributionTable:
    """Per-level Gaussians for the three bias coefficients.

    Each coefficient's distribution depends only on that bias's own level,
    so six specs cover all eight profiles.
    """

    loss_low: GaussianSpec
    loss_high: GaussianSpec
    confirm_low: GaussianSpec
    confirm_high: GaussianSpec
    sunk_low: GaussianSpec
    sunk_high: GaussianSpec

    def specs_for(self, state: BiasState) -> tuple[GaussianSpec, GaussianSpec, GaussianSpec]:
        return (
            self.loss_high if state.loss_aversion is BiasLevel.HIGH else self.loss_low,
            self.confirm_high if state.confirmation is BiasLevel.HIGH else self.confirm_low,
            self.sunk_high if state.sunk_cost is BiasLevel.HIGH else self.sunk_low,
        )

    def to_dict(self) -> dict:
        return {
            "loss_low": self.loss_low.to_dict(),
            "loss_high": self.loss_high.to_dict(),
            "confirm_low": self.confirm_low.to_dict(),
            "confirm_high": self.confirm_high.to_dict(),
            "sunk_low": self.sunk_low.to_dict(),
            "sunk_high": self.sunk_high.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ParamDistributionTable":
        return cls(**{key: GaussianSpec.from_dict(value) for key, value in data.items()})


DEFAULT_PARAM_TABLE = ParamDistributionTable(
    loss_low=GaussianSpec(0.50, 0.04),
    loss_high=GaussianSpec(1.51, 0.04),
    confirm_low=GaussianSpec(0.19, 0.01),
    confirm_high=GaussianSpec(0.79, 0.01),
    sunk_low=GaussianSpec(201.0, 1764.0),
    sunk_high=GaussianSpec(798.0, 1521.0),
)


@dataclass(frozen=True)
class BiasParams:
    """Continuous coefficient triple drawn for one episode."""

    loss_aversion: float
    confirm_rate: float
    sunk_weight: float

    def to_dict(self) -> dict:
        return {
            "loss_aversion": self.loss_aversion,
            "confirm_rate": self.confirm_rate,
            "sunk_weight": self.sunk_weight,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BiasParams":
        return cls(
            loss_aversion=float(data["loss_aversion"]),
            confirm_rate=float(data["confirm_rate"]),
            sunk_weight=float(data["sunk_weight"]),
        )


@dataclass(frozen=True)
class Prospect:
    """A gamble: (outcome value, probability) pairs summing to one."""

    outcomes: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.outcomes:
            raise ValueError("prospect needs at least one outcome")
        object.__setattr__(
            self, "outcomes", tuple((float(v), float(p)) for v, p in self.outcomes)
        )
        total = 0.0
        for _, prob in self.outcomes:
            if prob < 0:
                raise ValueError(f"negative outcome probability: {prob}")
            total += prob
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"outcome probabilities sum to {total}, expected 1")

    @classmethod
    def sure(cls, value: float) -> "Prospect":
        return cls(((value, 1.0),))

    @classmethod
    def gamble(cls, gain: float, loss: float, loss_chance: float) -> "Prospect":
        """Two-outcome gamble: +gain with 1-loss_chance, -loss with loss_chance."""
        return cls(((gain, 1.0 - loss_chance), (-loss, loss_chance)))

    def to_dict(self) -> dict:
        return {"outcomes": [list(o) for o in self.outcomes]}

    @classmethod
    def from_dict(cls, data: dict) -> "Prospect":
        return cls(tuple((v, p) for v, p in data["outcomes"]))


@dataclass(frozen=True)
class ChoiceConfig:
    """Discovery-choice model: two prospects plus curvature and logit slope."""

    aggressive: Prospect
    stealth: Prospect
    rho: float = 1.0
    mu: float = 1.0

    def to_dict(self) -> dict:
        return {
            "aggressive": self.aggressive.to_dict(),
            "stealth": self.stealth.to_dict(),
            "rho": self.rho,
            "mu": self.mu,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChoiceConfig":
        return cls(
            aggressive=Prospect.from_dict(data["aggressive"]),
            stealth=Prospect.from_dict(data["stealth"]),
            rho=float(data["rho"]),
            mu=float(data["mu"]),
        )


def subjective_utility(outcome: float, loss_aversion: float, curvature: float = 1.0) -> float:
    """Asymmetric value function: gains as outcome**curvature, losses scaled up."""
    if outcome >= 0:
        return outcome**curvature
    return -loss_aversion * (-outcome) ** curvature


def _utility_coefficients(prospect: Prospect, curvature: float) -> tuple[float, float]:
    """Split a prospect's expected utility into gain and loss parts.

    Expected utility is linear in the loss-aversion coefficient:
    ``U(lam) = gain_part - lam * loss_part``.
    """
    gain_part = 0.0
    loss_part = 0.0
    for value, prob in prospect.outcomes:
        if value >= 0:
            gain_part += prob * value**curvature
        else:
            loss_part += prob * (-value) ** curvature
    return gain_part, loss_part


def prospect_utility(prospect: Prospect, loss_aversion: float, curvature: float = 1.0) -> float:
    """Probability-weighted subjective utility of a gamble."""
    gain_part, loss_part = _utility_coefficients(prospect, curvature)
    return gain_part - loss_aversion * loss_part


def aggressive_probability(config: ChoiceConfig, loss_aversion: float) -> float:
    """Logistic probability of picking the aggressive discovery option."""
    edge = prospect_utility(config.aggressive, loss_aversion, config.rho) - prospect_utility(
        config.stealth, loss_aversion, config.rho
    )
    z = config.mu * edge
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-min(z, 700.0)))
    return math.exp(max(z, -700.0)) / (1.0 + math.exp(max(z, -700.0)))


def aggressive_probability_vec(config: ChoiceConfig, loss_aversion: np.ndarray) -> np.ndarray:
    """Vectorized ``aggressive_probability`` over an array of coefficients."""
    ga, la = _utility_coefficients(config.aggressive, config.rho)
    gs, ls = _utility_coefficients(config.stealth, config.rho)
    z = config.mu * ((ga - gs) - np.asarray(loss_aversion, dtype=float) * (la - ls))
    return 1.0 / (1.0 + np.exp(-np.clip(z, -700.0, 700.0)))


def calibrate_choice(
    targets: tuple[float, float] = (0.66, 0.33),
    anchors: tuple[float, float] = (0.5, 1.51),
    *,
    stealth_value: float = 0.5,
    loss_chance: float = 0.5,
) -> ChoiceConfig:
    """Fit the two discovery prospects to hit target choice rates.

    Finds a sure-gain stealth prospect and a two-outcome aggressive gamble
    such that the logistic choice rule yields ``targets[0]`` at the first
    anchor coefficient and ``targets[1]`` at the second, with curvature and
    logit slope fixed at 1. The system is underdetermined by one degree of
    freedom, resolved by fixing the stealth value and the loss probability.

    Raises:
        CalibrationError: targets are not achievable with a nonnegative loss
            stake (requires ``targets[0] >= targets[1]``) or lie outside (0, 1).
    """
    p_low, p_high = targets
    anchor_low, anchor_high = anchors
    if not (0.0 < p_low < 1.0 and 0.0 < p_high < 1.0):
        raise CalibrationError(f"targets must lie in (0, 1), got {targets}")
    if p_low < p_high:
        raise CalibrationError(
            f"first target must be >= second (aggression falls with loss aversion), got {targets}"
        )
    if not anchor_low < anchor_high:
        raise CalibrationError(f"anchors must be increasing, got {anchors}")
    if not 0.0 < loss_chance < 1.0:
        raise CalibrationError(f"loss_chance must lie in (0, 1), got {loss_chance}")

    logit_low = math.log(p_low / (1.0 - p_low))
    logit_high = math.log(p_high / (1.0 - p_high))
    loss_stake = (logit_low - logit_high) / (loss_chance * (anchor_high - anchor_low))
    gain_stake = (logit_low + stealth_value + loss_chance * anchor_low * loss_stake) / (
        1.0 - loss_chance
    )
    return ChoiceConfig(
        aggressive=Prospect.gamble(gain_stake, loss_stake, loss_chance),
        stealth=Prospect.sure(stealth_value),
    )


@lru_cache(maxsize=1)
def default_choice_config() -> ChoiceConfig:
    """Choice model calibrated to the default emission targets."""
    return calibrate_choice()


def perceived_value(reward: float, sunk_cost: float, sunk_weight: float) -> float:
    """Target value inflated by invested effort."""
    return reward + sunk_weight * sunk_cost


def target_distribution(
    rewards: Sequence[float], sunk_costs: Sequence[float], sunk_weight: float
) -> np.ndarray:
    """Choice distribution over targets, proportional to perceived value.

    All-zero perceived values fall back to the uniform distribution.
    """
    rewards = np.asarray(rewards, dtype=float)
    sunk_costs = np.asarray(sunk_costs, dtype=float)
    if rewards.ndim != 1 or rewards.shape != sunk_costs.shape or rewards.size == 0:
        raise ValueError("rewards and sunk_costs must be equal-length, nonempty vectors")
    values = rewards + sunk_weight * sunk_costs
    total = values.sum()
    if total <= 0.0:
        return np.full(values.size, 1.0 / values.size)
    return values / total


def sample_params(
    state: BiasState,
    rng: np.random.Generator,
    table: ParamDistributionTable = DEFAULT_PARAM_TABLE,
) -> BiasParams:
    """Draw the episode's coefficient triple for a bias profile, clamped."""
    loss_spec, confirm_spec, sunk_spec = table.specs_for(state)
    return BiasParams(
        loss_aversion=max(loss_spec.sample(rng), LOSS_AVERSION_FLOOR),
        confirm_rate=min(max(confirm_spec.sample(rng), CONFIRM_RATE_MIN), CONFIRM_RATE_MAX),
        sunk_weight=max(sunk_spec.sample(rng), SUNK_WEIGHT_FLOOR),
    )


def confirm_decision(confirm_rate: float, rng: np.random.Generator) -> bool:
    """True when a credential-file check reads as confirming evidence."""
    if not 0.0 <= confirm_rate <= 1.0:
        raise ValueError(f"confirm_rate must lie in [0, 1], got {confirm_rate}")
    return bool(rng.random() < confirm_rate)
