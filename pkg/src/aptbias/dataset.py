"""Dataset generation and on-disk formats.

An episode is stored as a JSON-lines action log (schema-version header line,
then one record per line, red and green interleaved in step order) plus a
JSON label sidecar with the ground-truth profile, coefficients, seed key and
scenario hash. A dataset directory holds one pair per episode and a manifest
that fully determines the outputs: re-running with the same manifest
reproduces every byte.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .agents import ActionRecord, ActionSequence, Episode, EpisodeLabel, run_episode
from .biases import BIAS_STATES, BiasState
from .world import ScenarioConfig, scenario_hash

__all__ = [
    "LOG_SCHEMA",
    "DatasetEntry",
    "write_episode",
    "read_episode",
    "generate_dataset",
    "load_dataset",
    "read_manifest",
    "dataset_digest",
]

LOG_SCHEMA = "apt-action-log"
MANIFEST_SCHEMA = "apt-dataset-manifest"
MANIFEST_NAME = "manifest.json"


def _dump(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


@dataclass
class DatasetEntry:
    sequence: ActionSequence
    label: EpisodeLabel
    log_path: Path

    @property
    def pair(self) -> tuple[ActionSequence, EpisodeLabel]:
        return self.sequence, self.label


def write_episode(log_path: str | Path, episode: Episode) -> None:
    """Write the action log and its label sidecar."""
    log_path = Path(log_path)
    rows = [r.to_dict() for r in episode.sequence] + [e.to_dict() for e in episode.background]
    rows.sort(key=lambda r: (r["step"], r["agent"]))
    header = {
        "schema": LOG_SCHEMA,
        "version": 1,
        "scenario_hash": episode.label.scenario_digest,
        "seed_key": list(episode.label.seed_key),
    }
    with log_path.open("w") as handle:
        handle.write(_dump(header) + "\n")
        for row in rows:
            handle.write(_dump(row) + "\n")
    _label_path(log_path).write_text(_dump(episode.label.to_dict()) + "\n")


def _label_path(log_path: Path) -> Path:
    return log_path.with_suffix(".label.json")


def read_episode(log_path: str | Path) -> DatasetEntry:
    """Load one episode; green rows are dropped from the red sequence."""
    log_path = Path(log_path)
    sequence = ActionSequence()
    with log_path.open() as handle:
        header = json.loads(handle.readline())
        if header.get("schema") != LOG_SCHEMA:
            raise ValueError(f"{log_path}: not an action log")
        for line in handle:
            row = json.loads(line)
            if row["agent"] == "green" or row["action_id"] == 0:
                continue
            sequence.append(ActionRecord.from_dict(row))
    label = EpisodeLabel.from_dict(json.loads(_label_path(log_path).read_text()))
    return DatasetEntry(sequence=sequence, label=label, log_path=log_path)


def _episode_job(args: tuple) -> tuple[str, dict, list[dict]]:
    scenario_data, state_index, episode_index, master_seed = args
    scenario = ScenarioConfig.from_dict(scenario_data)
    episode = run_episode(
        scenario,
        bias_state=BiasState.from_index(state_index),
        seed=(master_seed, state_index, episode_index),
    )
    rows = [r.to_dict() for r in episode.sequence] + [e.to_dict() for e in episode.background]
    rows.sort(key=lambda r: (r["step"], r["agent"]))
    name = f"episode_s{state_index}_{episode_index:03d}.jsonl"
    return name, episode.label.to_dict(), rows


def _write_job_result(out_dir: Path, name: str, label: dict, rows: list[dict]) -> None:
    header = {
        "schema": LOG_SCHEMA,
        "version": 1,
        "scenario_hash": label["scenario_hash"],
        "seed_key": label["seed_key"],
    }
    log_path = out_dir / name
    with log_path.open("w") as handle:
        handle.write(_dump(header) + "\n")
        for row in rows:
            handle.write(_dump(row) + "\n")
    _label_path(log_path).write_text(_dump(label) + "\n")


def generate_dataset(
    out_dir: str | Path,
    scenario: ScenarioConfig,
    master_seed: int = 0,
    episodes_per_state: int = 50,
    jobs: int = 1,
) -> dict:
    """Simulate episodes_per_state episodes for each profile and write them.

    Episode seeds derive from (master_seed, state, index), so outputs do not
    depend on the number of workers. Returns the manifest.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario_data = scenario.to_dict()
    tasks = [
        (scenario_data, state.index, i, master_seed)
        for state in BIAS_STATES
        for i in range(episodes_per_state)
    ]
    names = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for name, label, rows in pool.map(_episode_job, tasks, chunksize=8):
                _write_job_result(out_dir, name, label, rows)
                names.append(name)
    else:
        for task in tasks:
            name, label, rows = _episode_job(task)
            _write_job_result(out_dir, name, label, rows)
            names.append(name)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "version": 1,
        "package_version": __version__,
        "master_seed": master_seed,
        "episodes_per_state": episodes_per_state,
        "trigger": scenario.trigger is not None,
        "scenario": scenario_data,
        "scenario_hash": scenario_hash(scenario),
        "episodes": sorted(names),
    }
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def read_manifest(dataset_dir: str | Path) -> dict:
    path = Path(dataset_dir) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {dataset_dir}")
    manifest = json.loads(path.read_text())
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"{path}: not a dataset manifest")
    return manifest


def load_dataset(dataset_dir: str | Path) -> list[DatasetEntry]:
    """Load every episode in a dataset directory, sorted by file name."""
    dataset_dir = Path(dataset_dir)
    logs = sorted(dataset_dir.glob("episode_*.jsonl"))
    if not logs:
        raise FileNotFoundError(f"no episode logs found in {dataset_dir}")
    return [read_episode(path) for path in logs]


def dataset_digest(dataset_dir: str | Path) -> str:
    """Order-independent content hash of a dataset directory."""
    dataset_dir = Path(dataset_dir)
    digest = hashlib.sha256()
    for path in sorted(dataset_dir.iterdir()):
        if path.is_file():
            digest.update(path.name.encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()
