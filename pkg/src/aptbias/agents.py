"""Red-agent stage machine, bias-driven action policy, and episode loop.

A red agent walks every known host through the intrusion stages
K -> S -> U -> RD -> RF (-> RC), never backwards. Action sets are disjoint
across the baseline stages, so the stage is recoverable from any logged
action. Bias coefficients enter at exactly three decision points:

* stage K, discovery style: aggressive vs stealth scan per service,
* credential checks: confirm vs disconfirm at the attacker's confirm rate,
* cracking-target choice: perceived value weighted by invested attempts.

Everything else is a deterministic skeleton with small fixed noise rates,
so the logged statistics isolate the bias effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .biases import (
    BiasParams,
    BiasState,
    ChoiceConfig,
    ParamDistributionTable,
    DEFAULT_PARAM_TABLE,
    aggressive_probability,
    confirm_decision,
    default_choice_config,
    sample_params,
    target_distribution,
)
from .world import (
    CredentialFile,
    Host,
    ScenarioConfig,
    WorldState,
    attempt_bruteforce,
    attempt_password_crack,
    crackable_files,
    generate_network,
    inject_trigger,
    scenario_hash,
    spawn_credential,
    spawn_file,
    visible_file_listing,
)

__all__ = [
    "Stage",
    "ActionKind",
    "ACTIONS",
    "STAGE_ACTIONS",
    "Outcome",
    "ActionRecord",
    "ActionSequence",
    "GreenEvent",
    "RedAgent",
    "Episode",
    "EpisodeLabel",
    "available_actions",
    "choose_discovery",
    "choose_crack_target",
    "check_credential",
    "red_step",
    "green_step",
    "run_episode",
]


class Stage(Enum):
    IP_KNOWN = "K"
    SERVICES_KNOWN = "S"
    USER_SHELL = "U"
    ROOT_SHELL = "RD"
    FILES_FOUND = "RF"
    CRED_VALIDATED = "RC"


_STAGE_ORDER = {stage: i for i, stage in enumerate(Stage)}


@dataclass(frozen=True)
class ActionKind:
    action_id: int
    name: str
    time_cost: int


AGGRESSIVE_DISCOVERY = 1
STEALTH_DISCOVERY = 2
DECOY_DETECTION = 3
SERVICE_EXPLOIT = 4
PRIVILEGE_ESCALATE = 5
DEGRADE_SERVICE = 6
IMPACT_STOP_SERVICE = 7
FILES_DISCOVERY = 8
BRUTEFORCE_CRACK = 9
PASSWORD_CRACK = 10
CREDENTIAL_CONFIRM = 11
CREDENTIAL_DISCONFIRM = 12

ACTIONS: dict[int, ActionKind] = {
    kind.action_id: kind
    for kind in (
        ActionKind(AGGRESSIVE_DISCOVERY, "aggressive_service_discovery", 1),
        ActionKind(STEALTH_DISCOVERY, "stealth_service_discovery", 3),
        ActionKind(DECOY_DETECTION, "decoy_detection", 2),
        ActionKind(SERVICE_EXPLOIT, "service_exploit", 4),
        ActionKind(PRIVILEGE_ESCALATE, "privilege_escalate", 2),
        ActionKind(DEGRADE_SERVICE, "degrade_service", 2),
        ActionKind(IMPACT_STOP_SERVICE, "impact_stop_service", 2),
        ActionKind(FILES_DISCOVERY, "files_discovery", 1),
        ActionKind(BRUTEFORCE_CRACK, "bruteforce_file_cracking", 3),
        ActionKind(PASSWORD_CRACK, "password_file_cracking", 1),
        ActionKind(CREDENTIAL_CONFIRM, "credential_file_confirming", 1),
        ActionKind(CREDENTIAL_DISCONFIRM, "credential_file_disconfirming", 1),
    )
}

_ROOT_SET = frozenset({DEGRADE_SERVICE, IMPACT_STOP_SERVICE, FILES_DISCOVERY})
_FILES_SET = _ROOT_SET | frozenset(
    {BRUTEFORCE_CRACK, PASSWORD_CRACK, CREDENTIAL_CONFIRM, CREDENTIAL_DISCONFIRM}
)

STAGE_ACTIONS: dict[Stage, frozenset[int]] = {
    Stage.IP_KNOWN: frozenset({AGGRESSIVE_DISCOVERY, STEALTH_DISCOVERY, DECOY_DETECTION}),
    Stage.SERVICES_KNOWN: frozenset({SERVICE_EXPLOIT}),
    Stage.USER_SHELL: frozenset({PRIVILEGE_ESCALATE}),
    Stage.ROOT_SHELL: _ROOT_SET,
    Stage.FILES_FOUND: _FILES_SET,
    Stage.CRED_VALIDATED: _FILES_SET,
}

# Policy constants (reconstructed skeleton, not environment knobs).
EXPLOIT_SUCCESS_PROB = 0.9
ESCALATE_SUCCESS_PROB = 0.9
DECOY_SCAN_PROB = 0.05
DISRUPT_PROB = 0.05
REFRESH_INTERVAL = 15


class Outcome(Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    CONFIRM = "confirm"
    DISCONFIRM = "disconfirm"


@dataclass(frozen=True)
class ActionRecord:
    step: int
    agent: str
    action_id: int
    host: str
    outcome: Outcome
    stage_before: Stage
    stage_after: Stage
    target: Optional[str] = None

    @property
    def action_name(self) -> str:
        return ACTIONS[self.action_id].name

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "agent": self.agent,
            "action_id": self.action_id,
            "action": self.action_name,
            "host": self.host,
            "target": self.target,
            "outcome": self.outcome.value,
            "stage_before": self.stage_before.value,
            "stage_after": self.stage_after.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ActionRecord":
        return cls(
            step=int(data["step"]),
            agent=data["agent"],
            action_id=int(data["action_id"]),
            host=data["host"],
            outcome=Outcome(data["outcome"]),
            stage_before=Stage(data["stage_before"]),
            stage_after=Stage(data["stage_after"]),
            target=data.get("target"),
        )


@dataclass
class ActionSequence:
    records: list[ActionRecord] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: ActionRecord) -> None:
        if self.records and record.step < self.records[-1].step:
            raise ValueError("records must be appended in step order")
        self.records.append(record)


@dataclass(frozen=True)
class GreenEvent:
    step: int
    host: str
    kind: str

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "agent": "green",
            "action_id": 0,
            "action": self.kind,
            "host": self.host,
            "target": None,
            "outcome": "success",
            "stage_before": None,
            "stage_after": None,
        }


@dataclass
class RedAgent:
    agent_id: str
    params: BiasParams
    stages: dict[str, Stage] = field(default_factory=dict)
    services_found: dict[str, int] = field(default_factory=dict)
    discovered_files: dict[str, set[str]] = field(default_factory=dict)
    discovered_creds: dict[str, str] = field(default_factory=dict)  # cred_id -> host_id
    checked_creds: set[str] = field(default_factory=set)
    trusted_creds: set[str] = field(default_factory=set)
    burned_mappings: set[tuple[str, str]] = field(default_factory=set)
    attempt_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    busy_until: int = 0
    refresh_cursor: int = 0
    next_refresh: int = REFRESH_INTERVAL

    def stage_of(self, host_id: str) -> Stage:
        return self.stages[host_id]

    def advance(self, host_id: str, stage: Stage) -> None:
        if _STAGE_ORDER[stage] < _STAGE_ORDER[self.stages[host_id]]:
            raise ValueError(f"stage may not regress on {host_id}")
        self.stages[host_id] = stage


def available_actions(agent: RedAgent, host: Host) -> frozenset[int]:
    """Actions the agent can take on a host right now, given its stage."""
    stage = agent.stages[host.host_id]
    actions = set(STAGE_ACTIONS[stage])
    if stage in (Stage.FILES_FOUND, Stage.CRED_VALIDATED):
        known_creds = [c for c in host.credential_files if c.cred_id in agent.discovered_creds]
        if not any(c.cred_id not in agent.checked_creds for c in known_creds):
            actions -= {CREDENTIAL_CONFIRM, CREDENTIAL_DISCONFIRM}
        targets = {name for name, _ in crackable_files(host)
                   if name in agent.discovered_files.get(host.host_id, ())}
        if not targets:
            actions.discard(BRUTEFORCE_CRACK)
        if not _password_coverage(agent, host, targets):
            actions.discard(PASSWORD_CRACK)
    return frozenset(actions)


def _password_coverage(agent: RedAgent, host: Host, targets: set[str]) -> bool:
    for cred in host.credential_files:
        if cred.cred_id not in agent.trusted_creds:
            continue
        for mapping in cred.mappings:
            if mapping.filename in targets and (cred.cred_id, mapping.filename) not in agent.burned_mappings:
                return True
    return False


def _trusted_cred_for(agent: RedAgent, host: Host, filename: str) -> Optional[CredentialFile]:
    for cred in host.credential_files:
        if cred.cred_id in agent.trusted_creds and (cred.cred_id, filename) not in agent.burned_mappings:
            if cred.mapping_for(filename) is not None:
                return cred
    return None


def choose_discovery(agent: RedAgent, config: ChoiceConfig, rng: np.random.Generator) -> int:
    """Aggressive or stealth scan, weighted by the agent's loss aversion."""
    p = aggressive_probability(config, agent.params.loss_aversion)
    return AGGRESSIVE_DISCOVERY if rng.random() < p else STEALTH_DISCOVERY


def choose_crack_target(
    agent: RedAgent,
    candidates: list[tuple[str, str, float]],
    rng: np.random.Generator,
) -> tuple[str, str]:
    """Pick a (host, file) cracking target by sunk-cost-weighted value."""
    if not candidates:
        raise ValueError("no cracking candidates available")
    rewards = [value for _, _, value in candidates]
    costs = [agent.attempt_counts.get((host_id, name), 0) for host_id, name, _ in candidates]
    probs = target_distribution(rewards, costs, agent.params.sunk_weight)
    pick = int(rng.choice(len(candidates), p=probs))
    host_id, name, _ = candidates[pick]
    return host_id, name


def check_credential(
    agent: RedAgent, cred: CredentialFile, world: WorldState, rng: np.random.Generator
) -> ActionRecord:
    """Confirm or disconfirm a credential file; confirming makes it trusted."""
    host_id = cred.host_id
    stage_before = agent.stages[host_id]
    if stage_before not in (Stage.FILES_FOUND, Stage.CRED_VALIDATED):
        raise ValueError(f"cannot check credentials on {host_id} in stage {stage_before.value}")
    confirmed = confirm_decision(agent.params.confirm_rate, rng)
    agent.checked_creds.add(cred.cred_id)
    stage_after = stage_before
    if confirmed:
        agent.trusted_creds.add(cred.cred_id)
        if stage_before is Stage.FILES_FOUND:
            stage_after = Stage.CRED_VALIDATED
            agent.advance(host_id, stage_after)
    action_id = CREDENTIAL_CONFIRM if confirmed else CREDENTIAL_DISCONFIRM
    return ActionRecord(
        step=world.clock,
        agent=agent.agent_id,
        action_id=action_id,
        host=host_id,
        outcome=Outcome.CONFIRM if confirmed else Outcome.DISCONFIRM,
        stage_before=stage_before,
        stage_after=stage_after,
        target=cred.cred_id,
    )


def _record(agent: RedAgent, world: WorldState, action_id: int, host_id: str,
            outcome: Outcome, stage_before: Stage, stage_after: Stage,
            target: Optional[str] = None) -> ActionRecord:
    agent.busy_until = world.clock + ACTIONS[action_id].time_cost
    return ActionRecord(
        step=world.clock,
        agent=agent.agent_id,
        action_id=action_id,
        host=host_id,
        outcome=outcome,
        stage_before=stage_before,
        stage_after=stage_after,
        target=target,
    )


def _run_files_discovery(agent: RedAgent, world: WorldState, host: Host) -> ActionRecord:
    stage_before = agent.stages[host.host_id]
    seen = agent.discovered_files.setdefault(host.host_id, set())
    for name, _, _ in visible_file_listing(host):
        seen.add(name)
    for cred in host.credential_files:
        agent.discovered_creds.setdefault(cred.cred_id, host.host_id)
    stage_after = stage_before
    if stage_before is Stage.ROOT_SHELL and seen:
        stage_after = Stage.FILES_FOUND
        agent.advance(host.host_id, stage_after)
    return _record(agent, world, FILES_DISCOVERY, host.host_id, Outcome.SUCCESS,
                   stage_before, stage_after)


def _advance_host(agent: RedAgent, world: WorldState, host: Host,
                  config: ChoiceConfig, rng: np.random.Generator) -> ActionRecord:
    host_id = host.host_id
    stage = agent.stages[host_id]
    if stage is Stage.IP_KNOWN:
        if rng.random() < DECOY_SCAN_PROB:
            return _record(agent, world, DECOY_DETECTION, host_id, Outcome.SUCCESS, stage, stage)
        action_id = choose_discovery(agent, config, rng)
        found = agent.services_found.get(host_id, 0) + 1
        agent.services_found[host_id] = found
        stage_after = stage
        if found >= len(host.services):
            stage_after = Stage.SERVICES_KNOWN
            agent.advance(host_id, stage_after)
        target = host.services[found - 1] if found <= len(host.services) else None
        return _record(agent, world, action_id, host_id, Outcome.SUCCESS, stage, stage_after,
                       target=target)
    if stage is Stage.SERVICES_KNOWN:
        if rng.random() < EXPLOIT_SUCCESS_PROB:
            agent.advance(host_id, Stage.USER_SHELL)
            return _record(agent, world, SERVICE_EXPLOIT, host_id, Outcome.SUCCESS,
                           stage, Stage.USER_SHELL)
        return _record(agent, world, SERVICE_EXPLOIT, host_id, Outcome.FAILURE, stage, stage)
    if stage is Stage.USER_SHELL:
        if rng.random() < ESCALATE_SUCCESS_PROB:
            agent.advance(host_id, Stage.ROOT_SHELL)
            return _record(agent, world, PRIVILEGE_ESCALATE, host_id, Outcome.SUCCESS,
                           stage, Stage.ROOT_SHELL)
        return _record(agent, world, PRIVILEGE_ESCALATE, host_id, Outcome.FAILURE, stage, stage)
    # Stage.ROOT_SHELL: find the files, unlocking the cracking phase.
    return _run_files_discovery(agent, world, host)


def _crack_candidates(agent: RedAgent, world: WorldState) -> list[tuple[str, str, float]]:
    candidates = []
    for host in world.hosts():
        if agent.stages.get(host.host_id) not in (Stage.FILES_FOUND, Stage.CRED_VALIDATED):
            continue
        seen = agent.discovered_files.get(host.host_id, ())
        for name, value in crackable_files(host):
            if name in seen:
                candidates.append((host.host_id, name, value))
    return candidates


def red_step(
    agent: RedAgent,
    world: WorldState,
    config: ChoiceConfig,
    rng: np.random.Generator,
) -> Optional[ActionRecord]:
    """Execute one policy decision; no-op while a prior action is in flight."""
    if world.clock < agent.busy_until:
        return None

    pending = [h for h in world.hosts()
               if _STAGE_ORDER[agent.stages[h.host_id]] < _STAGE_ORDER[Stage.FILES_FOUND]]
    if pending:
        host = min(pending, key=lambda h: (_STAGE_ORDER[agent.stages[h.host_id]], h.host_id))
        return _advance_host(agent, world, host, config, rng)

    # Every host is in RF or RC: check fresh credentials first.
    for cred_id, host_id in agent.discovered_creds.items():
        if cred_id in agent.checked_creds:
            continue
        host = world.host(host_id)
        cred = next(c for c in host.credential_files if c.cred_id == cred_id)
        record = check_credential(agent, cred, world, rng)
        agent.busy_until = world.clock + ACTIONS[record.action_id].time_cost
        return record

    hosts = world.host_list()
    if world.clock >= agent.next_refresh:
        agent.next_refresh = world.clock + REFRESH_INTERVAL
        host = hosts[agent.refresh_cursor % len(hosts)]
        agent.refresh_cursor += 1
        return _run_files_discovery(agent, world, host)

    if rng.random() < DISRUPT_PROB:
        host = hosts[int(rng.integers(0, len(hosts)))]
        action_id = DEGRADE_SERVICE if rng.random() < 0.5 else IMPACT_STOP_SERVICE
        stage = agent.stages[host.host_id]
        return _record(agent, world, action_id, host.host_id, Outcome.SUCCESS, stage, stage)

    candidates = _crack_candidates(agent, world)
    if not candidates:
        host = hosts[agent.refresh_cursor % len(hosts)]
        agent.refresh_cursor += 1
        return _run_files_discovery(agent, world, host)

    host_id, name = choose_crack_target(agent, candidates, rng)
    host = world.host(host_id)
    record_file = host.file(name)
    key = (host_id, name)
    agent.attempt_counts[key] = agent.attempt_counts.get(key, 0) + 1
    stage = agent.stages[host_id]
    cred = _trusted_cred_for(agent, host, name)
    if cred is not None:
        success = attempt_password_crack(record_file, cred)
        if not success:
            # The password demonstrably failed; stop believing this mapping.
            agent.burned_mappings.add((cred.cred_id, name))
        return _record(agent, world, PASSWORD_CRACK, host_id,
                       Outcome.SUCCESS if success else Outcome.FAILURE, stage, stage,
                       target=name)
    success = attempt_bruteforce(record_file, rng)
    return _record(agent, world, BRUTEFORCE_CRACK, host_id,
                   Outcome.SUCCESS if success else Outcome.FAILURE, stage, stage,
                   target=name)


def green_step(world: WorldState, rate: float, rng: np.random.Generator) -> Optional[GreenEvent]:
    """Background user activity; never touches red-visible state."""
    if rate <= 0 or rng.random() >= min(rate, 1.0):
        return None
    hosts = world.host_list()
    if not hosts:
        return None
    host = hosts[int(rng.integers(0, len(hosts)))]
    kind = "file_access" if rng.random() < 0.5 else "login"
    return GreenEvent(step=world.clock, host=host.host_id, kind=kind)


@dataclass(frozen=True)
class EpisodeLabel:
    """Ground-truth sidecar for one simulated episode."""

    state_index: Optional[int]
    params: BiasParams
    seed_key: tuple[int, ...]
    scenario_digest: str
    trigger: bool

    def to_dict(self) -> dict:
        return {
            "schema": "apt-episode-label",
            "version": 1,
            "state_index": self.state_index,
            "params": self.params.to_dict(),
            "seed_key": list(self.seed_key),
            "scenario_hash": self.scenario_digest,
            "trigger": self.trigger,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EpisodeLabel":
        return cls(
            state_index=data["state_index"],
            params=BiasParams.from_dict(data["params"]),
            seed_key=tuple(data["seed_key"]),
            scenario_digest=data["scenario_hash"],
            trigger=bool(data["trigger"]),
        )


@dataclass
class Episode:
    sequence: ActionSequence
    background: list[GreenEvent]
    label: EpisodeLabel
    world: WorldState


def run_episode(
    scenario: ScenarioConfig,
    *,
    bias_state: Optional[BiasState] = None,
    params: Optional[BiasParams] = None,
    choice_config: Optional[ChoiceConfig] = None,
    param_table: ParamDistributionTable = DEFAULT_PARAM_TABLE,
    seed: int | tuple[int, ...] = 0,
) -> Episode:
    """Simulate one full episode and return the log plus its label.

    Exactly one of ``bias_state`` / ``params`` must pin the attacker: a
    state draws coefficients from the table, explicit params are used as-is.
    """
    if params is None:
        if bias_state is None:
            raise ValueError("provide bias_state or explicit params")
    config = choice_config or default_choice_config()
    seed_key = tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    rng = np.random.default_rng(np.random.SeedSequence(list(seed_key)))
    if params is None:
        params = sample_params(bias_state, rng, param_table)

    world = generate_network(scenario, rng)
    agent = RedAgent(agent_id="red-0", params=params)
    for host in world.hosts():
        agent.stages[host.host_id] = Stage.IP_KNOWN

    sequence = ActionSequence()
    background: list[GreenEvent] = []
    for step in range(scenario.horizon):
        world.advance_clock(step)
        spawn_file(world, scenario, rng)
        spawn_credential(world, scenario, rng)
        if (
            scenario.trigger is not None
            and not world.trigger_fired
            and step == scenario.trigger.fire_step
        ):
            inject_trigger(world, scenario.trigger, rng)
        event = green_step(world, scenario.green_rate, rng)
        if event is not None:
            background.append(event)
        record = red_step(agent, world, config, rng)
        if record is not None:
            sequence.append(record)

    label = EpisodeLabel(
        state_index=bias_state.index if bias_state is not None else None,
        params=params,
        seed_key=seed_key,
        scenario_digest=scenario_hash(scenario),
        trigger=scenario.trigger is not None,
    )
    return Episode(sequence=sequence, background=background, label=label, world=world)
