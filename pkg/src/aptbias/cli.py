"""Command-line entry point: generate, infer, evaluate, calibrate.

Every command is a pure function of its inputs plus the seeds recorded in
the dataset manifest, so re-running a command reproduces its outputs
byte-for-byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .biases import (
    BIAS_STATES,
    CalibrationError,
    calibrate_choice,
    default_choice_config,
)
from .dataset import generate_dataset, load_dataset, read_manifest
from .evaluation import (
    accuracy_and_cross_entropy,
    distance_experiment,
    trigger_effect_test,
)
from .inference import (
    class_posterior,
    compute_emissions,
    extract_features,
    identifiable_class,
    map_state,
    reference_emission_table,
    sequence_posterior,
)
from .tree import BiasTreeModel
from .world import ConfigurationError, ScenarioConfig, TriggerSpec

CONFIG_ENV_VAR = "APTBIAS_CONFIG"


def _load_scenario(path: str | None) -> ScenarioConfig:
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return ScenarioConfig()
    data = json.loads(Path(path).read_text())
    return ScenarioConfig.from_dict(data)


def _write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_generate(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.config)
    if args.trigger and scenario.trigger is None:
        scenario = scenario.with_trigger(TriggerSpec())
    started = time.perf_counter()
    manifest = generate_dataset(
        args.out,
        scenario,
        master_seed=args.seed,
        episodes_per_state=args.episodes_per_state,
        jobs=args.jobs,
    )
    elapsed = time.perf_counter() - started
    print(
        f"wrote {len(manifest['episodes'])} episodes to {args.out} "
        f"(seed {args.seed}, trigger {'on' if manifest['trigger'] else 'off'}, {elapsed:.1f}s)"
    )
    return 0


def _split_indices(labels: list[int], train_fraction: float, seed: int = 0):
    """Stratified train/test split over profile labels, fixed seed."""
    rng = np.random.default_rng(seed)
    by_state: dict[int, list[int]] = {}
    for i, state in enumerate(labels):
        by_state.setdefault(state, []).append(i)
    train, test = [], []
    for state in sorted(by_state):
        indices = np.array(by_state[state])
        rng.shuffle(indices)
        cut = int(round(train_fraction * len(indices)))
        train.extend(indices[:cut].tolist())
        test.extend(indices[cut:].tolist())
    return sorted(train), sorted(test)


def cmd_infer(args: argparse.Namespace) -> int:
    entries = load_dataset(args.data)
    out_dir = Path(args.out) if args.out else Path(args.data) / f"inference_{args.method}"
    out_dir.mkdir(parents=True, exist_ok=True)
    predictions = []

    if args.method == "bayes":
        emissions = compute_emissions()
        true_classes, pred_classes, posteriors = [], [], []
        for entry in entries:
            posterior = sequence_posterior(entry.sequence, emissions)
            state = map_state(posterior)
            classes = class_posterior(posterior)
            predictions.append(
                {
                    "episode": entry.log_path.name,
                    "true_state": entry.label.state_index,
                    "map_state": state.index,
                    "class_posterior": [float(x) for x in classes],
                }
            )
            if entry.label.state_index is not None:
                true_classes.append(identifiable_class(entry.label.state_index))
                pred_classes.append(identifiable_class(state))
                posteriors.append(classes)
        metrics = {}
        if true_classes:
            report = accuracy_and_cross_entropy(pred_classes, posteriors, true_classes)
            metrics = {"four_class": report.to_dict(), "episodes": len(true_classes)}
            print(
                f"bayes: 4-class accuracy {report.accuracy:.3f}, "
                f"cross-entropy {report.cross_entropy:.3f} over {len(true_classes)} episodes"
            )
    else:
        features = [extract_features(e.sequence) for e in entries]
        labels = [e.label.state_index for e in entries]
        if any(label is None for label in labels):
            print("error: tree inference requires profile-labeled episodes", file=sys.stderr)
            return 1
        if args.model:
            model = BiasTreeModel.load(args.model)
            eval_indices = list(range(len(entries)))
        else:
            train_idx, eval_indices = _split_indices(labels, args.train_split)
            if not eval_indices:
                print("error: train split leaves no evaluation episodes", file=sys.stderr)
                return 1
            states = [BIAS_STATES[label] for label in labels]
            model = BiasTreeModel.train(
                [features[i] for i in train_idx], [states[i] for i in train_idx]
            )
            model.save(out_dir / "tree_model.json")
        eval_features = [features[i] for i in eval_indices]
        eval_states = [BIAS_STATES[labels[i]] for i in eval_indices]
        for i in eval_indices:
            predicted = model.predict(features[i])
            predictions.append(
                {
                    "episode": entries[i].log_path.name,
                    "true_state": labels[i],
                    "predicted_state": predicted.index,
                }
            )
        accuracies = model.bit_accuracies(eval_features, eval_states)
        exact = sum(
            model.predict(fv).index == state.index
            for fv, state in zip(eval_features, eval_states)
        ) / len(eval_features)
        metrics = {
            "bit_accuracy": accuracies,
            "state_accuracy": exact,
            "episodes": len(eval_features),
        }
        print(
            "tree: loss {loss:.3f}, confirmation {confirm:.3f}, sunk {sunk:.3f} "
            "bit accuracy over {n} held-out episodes".format(**accuracies, n=len(eval_features))
        )

    with (out_dir / "predictions.jsonl").open("w") as handle:
        for row in predictions:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
    _write_json(out_dir / "metrics.json", metrics)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    entries = [e.pair for e in load_dataset(args.data)]
    manifest = read_manifest(args.data)
    scenario = ScenarioConfig.from_dict(manifest["scenario"])
    emissions = compute_emissions()
    states = [int(s) for s in args.states] if args.states else None
    report = distance_experiment(
        entries,
        scenario,
        emissions,
        master_seed=args.seed,
        states=states,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "distance_report.txt").write_text(report.to_text())
    _write_json(out_dir / "distance_report.json", report.to_dict())
    (out_dir / "distance_per_run.csv").write_text("\n".join(report.csv_rows()) + "\n")
    print(report.to_text())

    if args.trigger_data:
        trigger_entries = [e.pair for e in load_dataset(args.trigger_data)]
        result = trigger_effect_test(trigger_entries, entries)
        _write_json(out_dir / "trigger_ttest.json", result.to_dict())
        print(
            f"trigger effect: t={result.t_statistic:.2f}, p={result.p_value:.3e}, "
            f"dof={result.dof:.1f}"
        )
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = calibrate_choice(tuple(args.targets)) if args.targets else default_choice_config()
    emissions = compute_emissions(config=config, quadrature_nodes=args.nodes)
    reference = reference_emission_table()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "choice_config.json", config.to_dict())
    _write_json(out_dir / "emissions.json", emissions.to_dict())

    deviations = np.abs(emissions.probs - reference.probs)
    print("emission deviation from reference targets (aggressive/stealth/confirm/disconfirm):")
    for state in BIAS_STATES:
        row = deviations[state.index]
        print(f"  state{state.index}: " + "  ".join(f"{x:.4f}" for x in row))
    print(f"max deviation: {deviations.max():.4f}")

    coarse = compute_emissions(config=config, quadrature_nodes=64)
    fine = compute_emissions(config=config, quadrature_nodes=256)
    drift = float(np.abs(coarse.probs - fine.probs).max())
    print(f"quadrature drift 64 -> 256 nodes: {drift:.2e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aptbias",
        description="Simulate bias-driven attacker logs and infer the hidden bias profile.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", help="write a labeled episode dataset")
    generate.add_argument("--config", help="scenario config JSON (default: built-in scenario)")
    generate.add_argument("--seed", type=int, default=0, help="master seed")
    generate.add_argument("--out", required=True, help="output dataset directory")
    generate.add_argument("--trigger", action="store_true", help="enable the credential trigger")
    generate.add_argument("--episodes-per-state", type=int, default=50)
    generate.add_argument("--jobs", type=int, default=1, help="parallel episode workers")
    generate.set_defaults(func=cmd_generate)

    infer = sub.add_parser("infer", help="recover bias profiles from a dataset")
    infer.add_argument("--data", required=True, help="dataset directory")
    infer.add_argument("--method", choices=("bayes", "tree"), required=True)
    infer.add_argument("--model", help="trained tree model JSON (tree method)")
    infer.add_argument("--train-split", type=float, default=0.8)
    infer.add_argument("--out", help="output directory (default: <data>/inference_<method>)")
    infer.set_defaults(func=cmd_infer)

    evaluate = sub.add_parser("evaluate", help="distance experiment and trigger test")
    evaluate.add_argument("--data", required=True, help="labeled dataset directory")
    evaluate.add_argument("--out", required=True, help="report output directory")
    evaluate.add_argument("--trigger-data", help="trigger dataset for the effect test")
    evaluate.add_argument("--states", nargs="*", help="restrict to these profile indices")
    evaluate.add_argument("--seed", type=int, default=0, help="seed for paired simulations")
    evaluate.set_defaults(func=cmd_evaluate)

    calibrate = sub.add_parser("calibrate", help="fit choice prospects, emit emission table")
    calibrate.add_argument("--out", required=True, help="output directory")
    calibrate.add_argument("--targets", nargs=2, type=float, metavar=("P_LOW", "P_HIGH"))
    calibrate.add_argument("--nodes", type=int, default=128, help="quadrature nodes")
    calibrate.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, CalibrationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
