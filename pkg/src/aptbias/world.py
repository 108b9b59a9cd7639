"""Simulated enterprise network: hosts, files, credential files, trigger.

The world is generated once per episode from a ``ScenarioConfig`` and then
evolves in two ways only: credential files drip in over time (ordinary user
behavior leaving password notes around), and an optional one-shot trigger
dumps a batch of partly-fake credential files onto each subnet's target
server, pointing at high-value hard-to-crack files staged at generation
time.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "ConfigurationError",
    "HostKind",
    "FileRecord",
    "CredentialMapping",
    "CredentialFile",
    "Host",
    "Subnet",
    "TriggerSpec",
    "ScenarioConfig",
    "WorldState",
    "generate_network",
    "spawn_credential",
    "spawn_file",
    "inject_trigger",
    "visible_file_listing",
    "crackable_files",
    "attempt_bruteforce",
    "attempt_password_crack",
    "world_to_dict",
    "world_hash",
    "scenario_hash",
]

_FILE_WORDS = (
    "ledger", "roster", "archive", "minutes", "draft", "backlog", "survey",
    "payroll", "inventory", "contract", "memo", "budget", "manifest", "notes",
    "report", "schedule", "summary", "handbook", "invoice", "designs",
)

_SERVICE_NAMES = (
    "ssh", "http", "https", "smb", "ftp", "rdp", "dns", "smtp", "nfs",
    "ldap", "mysql", "vnc",
)

_PASSWORD_ALPHABET = "abcdefghjkmnpqrstuvwxyz23456789"


class ConfigurationError(ValueError):
    """Scenario configuration is structurally invalid."""


class HostKind(Enum):
    USER = "user"
    SERVER = "server"


@dataclass
class FileRecord:
    name: str
    path: str
    value: float
    hardness: float
    protected: bool
    decoy: bool = False
    cracked: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "path": self.path,
            "value": self.value,
            "hardness": self.hardness,
            "protected": self.protected,
            "decoy": self.decoy,
            "cracked": self.cracked,
        }


@dataclass(frozen=True)
class CredentialMapping:
    filename: str
    password: str


@dataclass
class CredentialFile:
    cred_id: str
    host_id: str
    mappings: tuple[CredentialMapping, ...]
    genuine: bool
    created_step: int = 0

    def mapping_for(self, filename: str) -> Optional[CredentialMapping]:
        for mapping in self.mappings:
            if mapping.filename == filename:
                return mapping
        return None

    def to_dict(self) -> dict:
        return {
            "cred_id": self.cred_id,
            "host_id": self.host_id,
            "mappings": [[m.filename, m.password] for m in self.mappings],
            "genuine": self.genuine,
            "created_step": self.created_step,
        }


@dataclass
class Host:
    host_id: str
    kind: HostKind
    ip: str
    services: tuple[str, ...]
    files: list[FileRecord] = field(default_factory=list)
    credential_files: list[CredentialFile] = field(default_factory=list)

    def file(self, name: str) -> FileRecord:
        for record in self.files:
            if record.name == name:
                return record
        raise KeyError(f"no file {name!r} on host {self.host_id}")

    def to_dict(self) -> dict:
        return {
            "host_id": self.host_id,
            "kind": self.kind.value,
            "ip": self.ip,
            "services": list(self.services),
            "files": [f.to_dict() for f in self.files],
            "credential_files": [c.to_dict() for c in self.credential_files],
        }


@dataclass
class Subnet:
    subnet_id: int
    user_hosts: list[Host]
    server_hosts: list[Host]

    @property
    def hosts(self) -> list[Host]:
        return self.user_hosts + self.server_hosts

    def to_dict(self) -> dict:
        return {
            "subnet_id": self.subnet_id,
            "user_hosts": [h.to_dict() for h in self.user_hosts],
            "server_hosts": [h.to_dict() for h in self.server_hosts],
        }


@dataclass(frozen=True)
class TriggerSpec:
    """One-shot credential-file drop aimed at provoking sunk-cost lock-in."""

    fire_step: int = 200
    fake_fraction: float = 0.2
    target_server: int = 0
    payload_size: int = 10
    staged_file_count: int = 24
    staged_value_range: tuple[float, float] = (80.0, 100.0)
    staged_hardness_range: tuple[float, float] = (0.85, 0.97)

    def __post_init__(self) -> None:
        if not 0.0 <= self.fake_fraction <= 1.0:
            raise ConfigurationError(f"fake_fraction must lie in [0, 1], got {self.fake_fraction}")
        if self.fire_step < 0:
            raise ConfigurationError(f"fire_step must be nonnegative, got {self.fire_step}")
        if self.payload_size < 0:
            raise ConfigurationError(f"payload_size must be nonnegative, got {self.payload_size}")

    def to_dict(self) -> dict:
        return {
            "fire_step": self.fire_step,
            "fake_fraction": self.fake_fraction,
            "target_server": self.target_server,
            "payload_size": self.payload_size,
            "staged_file_count": self.staged_file_count,
            "staged_value_range": list(self.staged_value_range),
            "staged_hardness_range": list(self.staged_hardness_range),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TriggerSpec":
        return cls(
            fire_step=int(data.get("fire_step", 200)),
            fake_fraction=float(data.get("fake_fraction", 0.2)),
            target_server=int(data.get("target_server", 0)),
            payload_size=int(data.get("payload_size", 10)),
            staged_file_count=int(data.get("staged_file_count", 24)),
            staged_value_range=tuple(data.get("staged_value_range", (80.0, 100.0))),
            staged_hardness_range=tuple(data.get("staged_hardness_range", (0.85, 0.97))),
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that shapes an episode's environment."""

    subnet_count: int = 1
    user_host_range: tuple[int, int] = (3, 10)
    server_host_range: tuple[int, int] = (1, 6)
    services_per_host_range: tuple[int, int] = (8, 12)
    files_per_host: int = 30
    protected_fraction: float = 0.5
    file_value_range: tuple[float, float] = (10.0, 100.0)
    file_hardness_range: tuple[float, float] = (0.1, 0.6)
    credential_file_prob: float = 0.1
    credential_spawn_prob: float = 0.005
    credential_mapping_range: tuple[int, int] = (3, 5)
    decoy_credential_fraction: float = 0.2
    file_spawn_prob: float = 0.5
    green_rate: float = 0.25
    horizon: int = 600
    trigger: Optional[TriggerSpec] = None

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for name in ("user_host_range", "server_host_range", "services_per_host_range",
                     "credential_mapping_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise ConfigurationError(f"{name} must be a nonempty range, got ({lo}, {hi})")
        for name in ("file_value_range", "file_hardness_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigurationError(f"{name} must be a nonempty range, got ({lo}, {hi})")
        if self.subnet_count < 1:
            raise ConfigurationError(f"subnet_count must be >= 1, got {self.subnet_count}")
        if self.horizon <= 0:
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")
        if self.files_per_host < 0:
            raise ConfigurationError(f"files_per_host must be >= 0, got {self.files_per_host}")
        for name in ("protected_fraction", "credential_file_prob", "decoy_credential_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        if self.credential_spawn_prob < 0 or self.green_rate < 0 or self.file_spawn_prob < 0:
            raise ConfigurationError("rates must be nonnegative")
        if self.trigger is not None and self.trigger.fire_step >= self.horizon:
            raise ConfigurationError(
                f"trigger fire_step {self.trigger.fire_step} must precede horizon {self.horizon}"
            )

    def to_dict(self) -> dict:
        data = {
            "subnet_count": self.subnet_count,
            "user_host_range": list(self.user_host_range),
            "server_host_range": list(self.server_host_range),
            "services_per_host_range": list(self.services_per_host_range),
            "files_per_host": self.files_per_host,
            "protected_fraction": self.protected_fraction,
            "file_value_range": list(self.file_value_range),
            "file_hardness_range": list(self.file_hardness_range),
            "credential_file_prob": self.credential_file_prob,
            "credential_spawn_prob": self.credential_spawn_prob,
            "credential_mapping_range": list(self.credential_mapping_range),
            "decoy_credential_fraction": self.decoy_credential_fraction,
            "file_spawn_prob": self.file_spawn_prob,
            "green_rate": self.green_rate,
            "horizon": self.horizon,
            "trigger": self.trigger.to_dict() if self.trigger else None,
        }
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        kwargs = dict(data)
        trigger = kwargs.pop("trigger", None)
        for key in ("user_host_range", "server_host_range", "services_per_host_range",
                    "credential_mapping_range", "file_value_range", "file_hardness_range"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        unknown = set(kwargs) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(trigger=TriggerSpec.from_dict(trigger) if trigger else None, **kwargs)

    def with_trigger(self, trigger: Optional[TriggerSpec]) -> "ScenarioConfig":
        data = self.to_dict()
        data["trigger"] = trigger.to_dict() if trigger else None
        return ScenarioConfig.from_dict(data)


@dataclass
class WorldState:
    subnets: list[Subnet]
    clock: int = 0
    trigger: Optional[TriggerSpec] = None
    trigger_fired: bool = False
    staged_files: dict = field(default_factory=dict)  # host_id -> [file names]
    _cred_serial: int = 0

    def hosts(self) -> Iterator[Host]:
        for subnet in self.subnets:
            yield from subnet.hosts

    def host_list(self) -> list[Host]:
        return [h for h in self.hosts()]

    def host(self, host_id: str) -> Host:
        for candidate in self.hosts():
            if candidate.host_id == host_id:
                return candidate
        raise KeyError(f"unknown host {host_id!r}")

    def advance_clock(self, step: int) -> None:
        if step < self.clock:
            raise ValueError(f"clock may not move backwards: {self.clock} -> {step}")
        self.clock = step


def _slug(rng: np.random.Generator, length: int = 10) -> str:
    indices = rng.integers(0, len(_PASSWORD_ALPHABET), size=length)
    return "".join(_PASSWORD_ALPHABET[i] for i in indices)


def _uniform(rng: np.random.Generator, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return float(lo if lo == hi else rng.uniform(lo, hi))


def _int_uniform(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    lo, hi = bounds
    return int(lo if lo == hi else rng.integers(lo, hi + 1))


def _make_files(host_id: str, count: int, scenario: ScenarioConfig,
                rng: np.random.Generator) -> list[FileRecord]:
    files = []
    protected_count = int(round(count * scenario.protected_fraction))
    protected_slots = set(rng.permutation(count)[:protected_count].tolist()) if count else set()
    for i in range(count):
        word = _FILE_WORDS[int(rng.integers(0, len(_FILE_WORDS)))]
        name = f"{word}_{i:02d}.dat"
        files.append(
            FileRecord(
                name=name,
                path=f"/data/{host_id}/{name}",
                value=_uniform(rng, scenario.file_value_range),
                hardness=_uniform(rng, scenario.file_hardness_range),
                protected=i in protected_slots,
            )
        )
    return files


def _make_credential(
    host: Host,
    mapping_range: tuple[int, int],
    rng: np.random.Generator,
    *,
    genuine: bool,
    serial: int,
    created_step: int = 0,
    target_names: Optional[list[str]] = None,
) -> CredentialFile:
    count = _int_uniform(rng, mapping_range)
    mappings = []
    if genuine:
        pool = target_names
        if pool is None:
            pool = [f.name for f in host.files if f.protected and not f.cracked]
            if not pool:
                pool = [f.name for f in host.files if f.protected]
        count = min(count, len(pool)) if pool else 0
        if count:
            picks = rng.choice(len(pool), size=count, replace=False)
            mappings = [CredentialMapping(pool[int(i)], _slug(rng)) for i in picks]
    else:
        # Fabricated names never collide with real files ("ghost_" prefix is
        # reserved), so decoy passwords cannot crack anything.
        mappings = [
            CredentialMapping(f"ghost_{_slug(rng, 6)}.dat", _slug(rng)) for _ in range(count)
        ]
    return CredentialFile(
        cred_id=f"{host.host_id}-c{serial}",
        host_id=host.host_id,
        mappings=tuple(mappings),
        genuine=genuine,
        created_step=created_step,
    )


def generate_network(scenario: ScenarioConfig, rng: np.random.Generator) -> WorldState:
    """Build the initial world: subnets, hosts, files, seed credentials."""
    scenario.validate()
    world = WorldState(subnets=[], trigger=scenario.trigger)
    for s in range(scenario.subnet_count):
        user_count = _int_uniform(rng, scenario.user_host_range)
        server_count = _int_uniform(rng, scenario.server_host_range)
        user_hosts = []
        for i in range(user_count):
            host_id = f"s{s}-u{i}"
            service_count = _int_uniform(rng, scenario.services_per_host_range)
            picks = rng.choice(len(_SERVICE_NAMES), size=min(service_count, len(_SERVICE_NAMES)),
                               replace=False)
            host = Host(
                host_id=host_id,
                kind=HostKind.USER,
                ip=f"10.{s}.0.{10 + i}",
                services=tuple(_SERVICE_NAMES[int(p)] for p in picks),
            )
            host.files = _make_files(host_id, scenario.files_per_host, scenario, rng)
            user_hosts.append(host)
        server_hosts = []
        for i in range(server_count):
            host_id = f"s{s}-srv{i}"
            service_count = _int_uniform(rng, scenario.services_per_host_range)
            picks = rng.choice(len(_SERVICE_NAMES), size=min(service_count, len(_SERVICE_NAMES)),
                               replace=False)
            host = Host(
                host_id=host_id,
                kind=HostKind.SERVER,
                ip=f"10.{s}.0.{200 + i}",
                services=tuple(_SERVICE_NAMES[int(p)] for p in picks),
            )
            host.files = _make_files(host_id, scenario.files_per_host, scenario, rng)
            server_hosts.append(host)
        subnet = Subnet(subnet_id=s, user_hosts=user_hosts, server_hosts=server_hosts)

        if scenario.trigger is not None and server_hosts:
            target_index = scenario.trigger.target_server
            if 0 <= target_index < len(server_hosts):
                target = server_hosts[target_index]
                staged = []
                for i in range(scenario.trigger.staged_file_count):
                    name = f"vault_{i:02d}.dat"
                    target.files.append(
                        FileRecord(
                            name=name,
                            path=f"/data/{target.host_id}/{name}",
                            value=_uniform(rng, scenario.trigger.staged_value_range),
                            hardness=_uniform(rng, scenario.trigger.staged_hardness_range),
                            protected=True,
                        )
                    )
                    staged.append(name)
                world.staged_files[target.host_id] = staged

        for host in subnet.hosts:
            if rng.random() < scenario.credential_file_prob:
                genuine = rng.random() >= scenario.decoy_credential_fraction
                host.credential_files.append(
                    _make_credential(host, scenario.credential_mapping_range, rng,
                                     genuine=genuine, serial=world._cred_serial)
                )
                world._cred_serial += 1
        world.subnets.append(subnet)
    return world


def spawn_credential(world: WorldState, scenario: ScenarioConfig,
                     rng: np.random.Generator) -> Optional[CredentialFile]:
    """Per-step credential-file drip: at most one new file per step.

    The per-step appearance probability is ``credential_spawn_prob`` times
    the host count, landing on a uniformly chosen host.
    """
    hosts = world.host_list()
    if not hosts or scenario.credential_spawn_prob <= 0:
        return None
    if rng.random() >= min(scenario.credential_spawn_prob * len(hosts), 1.0):
        return None
    host = hosts[int(rng.integers(0, len(hosts)))]
    genuine = rng.random() >= scenario.decoy_credential_fraction
    cred = _make_credential(host, scenario.credential_mapping_range, rng, genuine=genuine,
                            serial=world._cred_serial, created_step=world.clock)
    world._cred_serial += 1
    host.credential_files.append(cred)
    return cred


def spawn_file(world: WorldState, scenario: ScenarioConfig,
               rng: np.random.Generator) -> Optional[FileRecord]:
    """Per-step new-file drip (documents, exports) on a random host.

    The rate is global per step rather than per host, so small networks see
    the same inflow of fresh material as large ones. Discoverable through
    repeated file discovery like any other file.
    """
    if scenario.file_spawn_prob <= 0 or rng.random() >= min(scenario.file_spawn_prob, 1.0):
        return None
    hosts = world.host_list()
    if not hosts:
        return None
    host = hosts[int(rng.integers(0, len(hosts)))]
    index = len(host.files)
    word = _FILE_WORDS[int(rng.integers(0, len(_FILE_WORDS)))]
    name = f"{word}_{index:02d}.dat"
    record = FileRecord(
        name=name,
        path=f"/data/{host.host_id}/{name}",
        value=_uniform(rng, scenario.file_value_range),
        hardness=_uniform(rng, scenario.file_hardness_range),
        protected=rng.random() < scenario.protected_fraction,
    )
    host.files.append(record)
    return record


def inject_trigger(world: WorldState, trigger: TriggerSpec, rng: np.random.Generator) -> WorldState:
    """Drop the credential payload on each subnet's target server."""
    if world.trigger_fired:
        raise RuntimeError("trigger has already fired for this world")
    if world.clock != trigger.fire_step:
        raise ValueError(
            f"trigger configured for step {trigger.fire_step}, world clock is {world.clock}"
        )
    fake_count = int(round(trigger.payload_size * trigger.fake_fraction))
    for subnet in world.subnets:
        if not subnet.server_hosts or trigger.target_server >= len(subnet.server_hosts):
            logger.warning("subnet %s has no server host at index %s; skipping trigger payload",
                           subnet.subnet_id, trigger.target_server)
            continue
        target = subnet.server_hosts[trigger.target_server]
        staged = world.staged_files.get(target.host_id)
        if not staged:
            staged = [f.name for f in target.files if f.protected]
        for i in range(trigger.payload_size):
            genuine = i >= fake_count
            cred = _make_credential(
                target,
                (3, 5),
                rng,
                genuine=genuine,
                serial=world._cred_serial,
                created_step=world.clock,
                target_names=list(staged) if genuine else None,
            )
            world._cred_serial += 1
            target.credential_files.append(cred)
    world.trigger_fired = True
    return world


def visible_file_listing(host: Host) -> list[tuple[str, str, float]]:
    """What file discovery reveals: names, paths, values. Nothing else."""
    return [(f.name, f.path, f.value) for f in host.files]


def crackable_files(host: Host) -> list[tuple[str, float]]:
    """Uncracked locked files on a host, as (name, value) pairs."""
    return [(f.name, f.value) for f in host.files if f.protected and not f.cracked]


def attempt_bruteforce(record: FileRecord, rng: np.random.Generator) -> bool:
    """One brute-force attempt; failure probability equals file hardness."""
    if not record.protected:
        raise ValueError(f"file {record.name!r} is not a cracking target")
    if record.cracked:
        raise ValueError(f"file {record.name!r} is already cracked")
    if rng.random() >= record.hardness:
        record.cracked = True
        return True
    return False


def attempt_password_crack(record: FileRecord, cred: CredentialFile) -> bool:
    """Password-based crack: always succeeds with a genuine credential."""
    mapping = cred.mapping_for(record.name)
    if mapping is None:
        raise ValueError(f"credential {cred.cred_id} has no mapping for {record.name!r}")
    if record.cracked:
        raise ValueError(f"file {record.name!r} is already cracked")
    if cred.genuine:
        record.cracked = True
        return True
    return False


def world_to_dict(world: WorldState) -> dict:
    return {
        "schema": "apt-world-snapshot",
        "version": 1,
        "clock": world.clock,
        "trigger_fired": world.trigger_fired,
        "trigger": world.trigger.to_dict() if world.trigger else None,
        "staged_files": {k: list(v) for k, v in sorted(world.staged_files.items())},
        "subnets": [s.to_dict() for s in world.subnets],
    }


def world_hash(world: WorldState) -> str:
    payload = json.dumps(world_to_dict(world), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def scenario_hash(scenario: ScenarioConfig) -> str:
    payload = json.dumps(scenario.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]
