"""Command-line pipeline orchestration.

Subcommands: synth, ingest, propagate, train, evaluate, compare, validate.
Every stage reads the same INI config, writes JSON (and some text/CSV)
artifacts into the run's output directory, and embeds the config hash and
master seed in everything it writes.  Existing artifacts are never
overwritten without --force.

Exit codes: 0 success, 1 data validation failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import baselines, evaluation, features, forest, ingest, propagation, synth
from .errors import ConfigError, DependencyError, TrollmapError
from .taxonomy import (
    CATEGORIES,
    Label,
    LabelSet,
    LabelSource,
    category_from_name,
    merge_labels,
    parse_label_file,
    write_label_file,
)

_DEFAULTS: dict[str, dict[str, str]] = {
    "run": {"seed": "0", "out_dir": "runs/out"},
    "ingest": {"tweets": "", "format": "csv", "language_filter": ""},
    "labels": {"manual": ""},
    "propagate": {"span_start": "2009-07-01", "span_end": "2018-07-01"},
    "features": {"k": "8"},
    "forest": {
        "n_trees": "100",
        "max_depth": "5",
        "min_samples_split": "2",
        "features_per_split": "",
        "class_weight_mode": "balanced_subsample",
    },
    "train": {"test_fraction": "0.2", "cv_folds": "5"},
    "compare": {"test_fraction": "0.2"},
    "validate": {
        "overlap_reference": "",
        "overlap_category": "FakeNews",
        "agreement_reference": "",
    },
    "synth": {
        "accounts": "2400",
        "proportions": "0.70,0.15,0.10,0.05",
        "separation": "2.0",
        "contamination": "0.1",
        "labeled_fraction": "0.85",
        "pool_size": "40",
        "n_spans": "18",
        "tags_per_span": "3,8",
    },
}


@dataclass(frozen=True)
class RunConfig:
    values: dict[str, dict[str, str]]
    seed: int
    out_dir: Path
    config_hash: str

    def get(self, section: str, key: str) -> str:
        return self.values[section][key]

    def get_int(self, section: str, key: str) -> int:
        raw = self.get(section, key)
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be an integer, got {raw!r}") from None

    def get_float(self, section: str, key: str) -> float:
        raw = self.get(section, key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be a number, got {raw!r}") from None

    def path(self, section: str, key: str) -> Optional[Path]:
        raw = self.get(section, key).strip()
        return Path(raw) if raw else None


def load_config(
    config_path: Optional[str],
    seed_override: Optional[int] = None,
    out_override: Optional[str] = None,
) -> RunConfig:
    values = {section: dict(keys) for section, keys in _DEFAULTS.items()}
    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as err:
            raise ConfigError(f"cannot parse config: {err}") from None
        for section in parser.sections():
            if section not in values:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in values[section]:
                    raise ConfigError(f"unknown config key [{section}] {key}")
                values[section][key] = value
    if seed_override is not None:
        values["run"]["seed"] = str(seed_override)
    if out_override is not None:
        values["run"]["out_dir"] = out_override

    canonical = "\n".join(
        f"{section}.{key}={values[section][key]}"
        for section in sorted(values)
        for key in sorted(values[section])
    )
    digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    try:
        seed = int(values["run"]["seed"])
    except ValueError:
        raise ConfigError(f"run.seed must be an integer, got {values['run']['seed']!r}") from None
    return RunConfig(
        values=values,
        seed=seed,
        out_dir=Path(values["run"]["out_dir"]),
        config_hash=digest,
    )


# ---------------------------------------------------------------------------
# Artifact helpers

def _check_writable(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise ConfigError(f"refusing to overwrite {path} (use --force)")


def _write_json(path: Path, payload: dict, config: RunConfig, force: bool) -> None:
    _check_writable(path, force)
    body = {"config_hash": config.config_hash, "seed": config.seed}
    body.update(payload)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _write_text(path: Path, text: str, config: RunConfig, force: bool) -> None:
    _check_writable(path, force)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write(f"# config_hash={config.config_hash} seed={config.seed}\n")
        out.write(text)


def _require(path: Path, produced_by: str) -> Path:
    if not path.is_file():
        raise DependencyError(f"{path.name} not found; run '{produced_by}' first")
    return path


def _meta(config: RunConfig) -> dict:
    return {"config_hash": config.config_hash, "seed": config.seed}


def _input_file(config: RunConfig, section: str, key: str) -> Path:
    path = config.path(section, key)
    if path is None:
        raise ConfigError(f"config is missing [{section}] {key}")
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    return path


def _load_labels_for_training(config: RunConfig) -> LabelSet:
    """Augmented labels when the propagate stage ran, else the manual file."""
    augmented = config.out_dir / "labels_augmented.csv"
    if augmented.is_file():
        return parse_label_file(str(augmented))
    return parse_label_file(str(_input_file(config, "labels", "manual")))


def _forest_params(config: RunConfig) -> forest.ForestParams:
    raw_mtry = config.get("forest", "features_per_split").strip()
    return forest.ForestParams(
        n_trees=config.get_int("forest", "n_trees"),
        max_depth=config.get_int("forest", "max_depth"),
        min_samples_split=config.get_int("forest", "min_samples_split"),
        features_per_split=int(raw_mtry) if raw_mtry else None,
        seed=config.seed,
        class_weight_mode=config.get("forest", "class_weight_mode"),
    )


def _labeled_matrix(config: RunConfig) -> tuple[features.FeatureMatrix, list, LabelSet]:
    profiles_path = _require(config.out_dir / "profiles.jsonl", "ingest (or synth)")
    profiles = ingest.read_profiles(str(profiles_path))
    labels = _load_labels_for_training(config)
    ids = sorted(uid for uid in labels if uid in {p.user_id for p in profiles})
    if not ids:
        raise TrollmapError("no labeled account has a profile; nothing to train on")
    matrix = features.matrix_from_profiles(profiles, order=ids)
    y = [labels.category_of(uid) for uid in ids]
    return matrix, y, labels


# ---------------------------------------------------------------------------
# Stage commands

def cmd_synth(config: RunConfig, force: bool) -> int:
    proportions = tuple(
        float(p) for p in config.get("synth", "proportions").split(",") if p.strip()
    )
    lo, hi = (int(v) for v in config.get("synth", "tags_per_span").split(","))
    spec = synth.classifier_spec(
        seed=config.seed,
        total=config.get_int("synth", "accounts"),
        proportions=proportions,
        separation=config.get_float("synth", "separation"),
        labeled_fraction=config.get_float("synth", "labeled_fraction"),
        contamination=config.get_float("synth", "contamination"),
        pool_size=config.get_int("synth", "pool_size"),
        n_spans=config.get_int("synth", "n_spans"),
        tags_per_span=(lo, hi),
    )
    dataset = synth.generate_synthetic(spec)

    out = config.out_dir
    for name in ("profiles.jsonl", "labels_manual.csv", "labels_truth.csv", "reference_handles.txt"):
        _check_writable(out / name, force)
    out.mkdir(parents=True, exist_ok=True)
    ingest.write_profiles(dataset.profiles(), str(out / "profiles.jsonl"), meta=_meta(config))
    write_label_file(
        dataset.visible,
        str(out / "labels_manual.csv"),
        header_comment=f"config_hash={config.config_hash} seed={config.seed}",
    )
    write_label_file(
        dataset.truth,
        str(out / "labels_truth.csv"),
        header_comment=f"config_hash={config.config_hash} seed={config.seed}",
    )
    handles = sorted(uid for uid in dataset.truth if dataset.truth.category_of(uid) is CATEGORIES[0])
    with open(out / "reference_handles.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(handles) + "\n")
    _write_json(
        out / "synth_report.json",
        {
            "accounts": len(dataset.matrix.row_ids),
            "labeled": len(dataset.visible),
            "hidden": len(dataset.hidden_ids),
            "spans": len(dataset.spans),
            "per_category": {
                c.value: sum(1 for lab in dataset.labels if lab is c) for c in CATEGORIES
            },
        },
        config,
        force,
    )
    print(f"synth: wrote {len(dataset.matrix.row_ids)} profiles to {out}")
    return 0


def cmd_ingest(config: RunConfig, force: bool) -> int:
    tweets_path = _input_file(config, "ingest", "tweets")
    fmt = config.get("ingest", "format").strip().lower()
    if fmt not in ("csv", "tsv"):
        raise ConfigError(f"[ingest] format must be csv or tsv, got {fmt!r}")
    delimiter = "," if fmt == "csv" else "\t"

    records, rejects = ingest.parse_tweet_records(str(tweets_path), delimiter=delimiter)
    language = config.get("ingest", "language_filter").strip()
    if language:
        records = ingest.filter_language(records, language)
    profiles = ingest.aggregate_accounts(records)

    out = config.out_dir
    _check_writable(out / "profiles.jsonl", force)
    out.mkdir(parents=True, exist_ok=True)
    ingest.write_profiles(profiles, str(out / "profiles.jsonl"), meta=_meta(config))
    _write_json(
        out / "ingest_report.json",
        {
            "accepted": len(records),
            "rejected": [{"row": r.row, "reason": r.reason} for r in rejects],
            "profiles": len(profiles),
            "hashed_fraction": sum(1 for p in profiles if p.is_hashed) / len(profiles),
        },
        config,
        force,
    )
    print(f"ingest: {len(records)} records, {len(rejects)} rejects, {len(profiles)} profiles")
    return 0


def cmd_propagate(config: RunConfig, force: bool) -> int:
    profiles_path = _require(config.out_dir / "profiles.jsonl", "ingest (or synth)")
    profiles = ingest.read_profiles(str(profiles_path))
    manual_path = config.out_dir / "labels_manual.csv"
    if not manual_path.is_file():
        manual_path = _input_file(config, "labels", "manual")
    manual = parse_label_file(str(manual_path))

    spans = propagation.partition_spans(
        ingest.parse_timestamp(config.get("propagate", "span_start")),
        ingest.parse_timestamp(config.get("propagate", "span_end")),
    )
    report = propagation.propagate_labels(profiles, manual, spans)
    augmented = merge_labels(manual, report.as_label_set())

    out = config.out_dir
    _check_writable(out / "labels_augmented.csv", force)
    out.mkdir(parents=True, exist_ok=True)
    write_label_file(
        augmented,
        str(out / "labels_augmented.csv"),
        header_comment=f"config_hash={config.config_hash} seed={config.seed}",
    )
    _write_json(
        out / "propagation_report.json",
        {
            "propagated": len(report.results),
            "unresolved": list(report.unresolved),
            "skipped_spans": list(report.skipped_spans),
            "report": report.to_json_dict(),
        },
        config,
        force,
    )
    print(
        f"propagate: {len(report.results)} accounts labeled, "
        f"{len(report.unresolved)} unresolved, {len(report.skipped_spans)} spans skipped"
    )
    return 0


def cmd_train(config: RunConfig, force: bool) -> int:
    matrix, y, _ = _labeled_matrix(config)

    score_report = features.chi2_scores(matrix, y)
    k = config.get_int("features", "k")
    selected = features.select_top_k(score_report, k)
    correlation = features.pearson_correlation_matrix(matrix)
    kept = [matrix.columns.index(name) for name in selected]
    reduced = features.FeatureMatrix(
        row_ids=matrix.row_ids,
        columns=tuple(selected),
        values=matrix.values[:, kept],
    )
    normalized = features.l1_normalize(reduced)

    params = _forest_params(config)
    folds = config.get_int("train", "cv_folds")
    cv_scores = forest.crossval_weighted_f1(normalized, y, params, folds)

    test_fraction = config.get_float("train", "test_fraction")
    train_idx, test_idx = evaluation.stratified_split(y, test_fraction, config.seed)
    model = forest.train_forest(
        normalized.values[train_idx], [y[i] for i in train_idx], params
    )

    out = config.out_dir
    for name in ("model.json", "split.json", "cv_report.json", "feature_report.json", "correlation.csv"):
        _check_writable(out / name, force)
    out.mkdir(parents=True, exist_ok=True)
    forest.save_forest(
        model,
        str(out / "model.json"),
        extra={"config_hash": config.config_hash, "selected_features": list(selected)},
    )
    _write_json(
        out / "split.json",
        {
            "test_fraction": test_fraction,
            "train_ids": [normalized.row_ids[i] for i in train_idx],
            "test_ids": [normalized.row_ids[i] for i in test_idx],
        },
        config,
        force,
    )
    _write_json(
        out / "cv_report.json",
        {
            "folds": folds,
            "fold_weighted_f1": cv_scores,
            "mean_weighted_f1": float(np.mean(cv_scores)),
            "params": {
                "n_trees": params.n_trees,
                "max_depth": params.max_depth,
                "min_samples_split": params.min_samples_split,
                "features_per_split": params.features_per_split,
                "class_weight_mode": params.class_weight_mode,
            },
        },
        config,
        force,
    )
    _write_json(
        out / "feature_report.json",
        {
            "ranking": [[name, score] for name, score in score_report.ranking],
            "selected": list(selected),
            "correlation_columns": list(correlation.columns),
            "correlation": [
                [None if np.isnan(v) else float(v) for v in row] for row in correlation.matrix
            ],
            "zero_variance": list(correlation.zero_variance),
        },
        config,
        force,
    )
    grid = ["feature," + ",".join(correlation.columns)]
    for name, row in zip(correlation.columns, correlation.matrix):
        cells = ["" if np.isnan(v) else repr(float(v)) for v in row]
        grid.append(name + "," + ",".join(cells))
    _write_text(out / "correlation.csv", "\n".join(grid) + "\n", config, force)
    print(f"train: CV weighted f1 = {float(np.mean(cv_scores)):.4f} over {folds} folds")
    return 0


def _load_model_inputs(config: RunConfig):
    model_path = _require(config.out_dir / "model.json", "train")
    split_path = _require(config.out_dir / "split.json", "train")
    model = forest.load_forest(str(model_path))
    with open(split_path, "r", encoding="utf-8") as fh:
        split = json.load(fh)
    with open(model_path, "r", encoding="utf-8") as fh:
        selected = json.load(fh)["selected_features"]
    return model, split, selected


def cmd_evaluate(config: RunConfig, force: bool) -> int:
    model, split, selected = _load_model_inputs(config)
    profiles_path = _require(config.out_dir / "profiles.jsonl", "ingest (or synth)")
    profiles = ingest.read_profiles(str(profiles_path))
    labels = _load_labels_for_training(config)

    all_matrix = features.matrix_from_profiles(profiles)
    kept = [all_matrix.columns.index(name) for name in selected]
    full = features.FeatureMatrix(
        row_ids=all_matrix.row_ids,
        columns=tuple(selected),
        values=all_matrix.values[:, kept],
    )
    normalized = features.l1_normalize(full)

    id_to_row = {uid: i for i, uid in enumerate(normalized.row_ids)}
    test_ids = [uid for uid in split["test_ids"] if uid in id_to_row]
    if not test_ids:
        raise TrollmapError("held-out accounts have no profiles")
    test_rows = normalized.values[[id_to_row[uid] for uid in test_ids]]
    y_true = [labels.category_of(uid) for uid in test_ids]
    y_pred, _ = forest.predict_batch(model, test_rows)
    report = evaluation.classification_report(y_true, y_pred)

    predicted_all, _ = forest.predict_batch(model, normalized.values)
    predicted_labels = LabelSet(
        (uid, Label(cat, LabelSource.MODEL_PREDICTED))
        for uid, cat in zip(normalized.row_ids, predicted_all)
    )

    out = config.out_dir
    for name in ("evaluation_report.json", "evaluation_report.txt", "labels_predicted.csv"):
        _check_writable(out / name, force)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "evaluation_report.json",
        {"held_out": len(test_ids), "report": report.to_json_dict()},
        config,
        force,
    )
    _write_text(out / "evaluation_report.txt", report.to_text() + "\n", config, force)
    write_label_file(
        predicted_labels,
        str(out / "labels_predicted.csv"),
        header_comment=f"config_hash={config.config_hash} seed={config.seed}",
    )
    print(f"evaluate: weighted f1 = {report.weighted_f1:.4f} on {len(test_ids)} held-out accounts")
    return 0


def cmd_compare(config: RunConfig, force: bool) -> int:
    matrix, y, _ = _labeled_matrix(config)
    normalized = features.l1_normalize(matrix)
    params = _forest_params(config)
    rows = baselines.compare_classifiers(
        normalized,
        y,
        params,
        test_fraction=config.get_float("compare", "test_fraction"),
        seed=config.seed,
    )
    ranking_text = "\n".join(f"{name:<22}{score:>10.4f}" for name, score in rows) + "\n"

    out = config.out_dir
    for name in ("comparison_report.json", "comparison_report.txt"):
        _check_writable(out / name, force)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "comparison_report.json",
        {
            "ranking": [[name, score] for name, score in rows],
            "hyperparameters": baselines.DEFAULT_HYPERPARAMS,
        },
        config,
        force,
    )
    _write_text(out / "comparison_report.txt", ranking_text, config, force)
    print("compare: " + ", ".join(f"{name}={score:.3f}" for name, score in rows[:3]))
    return 0


def cmd_validate(config: RunConfig, force: bool) -> int:
    predicted_path = _require(config.out_dir / "labels_predicted.csv", "evaluate")
    predicted = parse_label_file(str(predicted_path))
    payload: dict = {}
    text_parts: list[str] = []

    overlap_ref = config.path("validate", "overlap_reference")
    if overlap_ref is None:
        candidate = config.out_dir / "reference_handles.txt"
        overlap_ref = candidate if candidate.is_file() else None
    if overlap_ref is not None:
        if not overlap_ref.is_file():
            raise ConfigError(f"input file not found: {overlap_ref}")
        handles = {
            line.strip()
            for line in open(overlap_ref, "r", encoding="utf-8")
            if line.strip() and not line.startswith("#")
        }
        manual_path = config.out_dir / "labels_manual.csv"
        if manual_path.is_file():
            manual = parse_label_file(str(manual_path))
        else:
            manual = parse_label_file(str(_input_file(config, "labels", "manual")))
        augmented_path = config.out_dir / "labels_augmented.csv"
        combined = predicted
        if augmented_path.is_file():
            combined = merge_labels(combined, parse_label_file(str(augmented_path)))
        combined = merge_labels(combined, manual)
        target = category_from_name(config.get("validate", "overlap_category"))
        overlap = evaluation.overlap_validation(combined, target, handles)
        payload["overlap"] = overlap.to_json_dict()
        rate_text = "undefined" if overlap.rate is None else f"{overlap.rate:.4f}"
        text_parts.append(
            f"overlap[{target.value}]: {overlap.matched}/{overlap.total} = {rate_text}"
        )

    agreement_ref = config.path("validate", "agreement_reference")
    if agreement_ref is None:
        candidate = config.out_dir / "labels_truth.csv"
        agreement_ref = candidate if candidate.is_file() else None
    if agreement_ref is not None:
        if not agreement_ref.is_file():
            raise ConfigError(f"input file not found: {agreement_ref}")
        reference = parse_label_file(str(agreement_ref))
        agreement = evaluation.agreement_validation(reference, predicted)
        payload["agreement"] = agreement.to_json_dict()
        text_parts.append(
            f"agreement: {agreement.matches}/{agreement.total} = {agreement.rate:.4f}"
        )
        _check_writable(config.out_dir / "agreement_counts.csv", force)
        _write_text(config.out_dir / "agreement_counts.csv", agreement.counts_csv(), config, force)

    if not payload:
        raise ConfigError(
            "validate needs [validate] overlap_reference and/or agreement_reference"
        )
    _write_json(config.out_dir / "validation_report.json", payload, config, force)
    print("validate: " + "; ".join(text_parts))
    return 0


# ---------------------------------------------------------------------------

_COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "propagate": cmd_propagate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file; defaults apply when omitted")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--out", help="override the output directory")
    common.add_argument(
        "--force", action="store_true", help="allow overwriting existing artifacts"
    )

    parser = argparse.ArgumentParser(
        prog="trollmap",
        description="Classify influence-network accounts into authenticity categories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    help_text = {
        "synth": "generate a synthetic fixture dataset with known truth",
        "ingest": "parse a tweet dump into per-account profiles",
        "propagate": "spread labels onto hashed accounts via hashtag similarity",
        "train": "rank features and train the random forest",
        "evaluate": "score the model on the held-out split and predict all accounts",
        "compare": "rank the forest against six baseline classifiers",
        "validate": "run the overlap and/or agreement validations",
    }
    for name in _COMMANDS:
        sub.add_parser(name, parents=[common], help=help_text[name])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, seed_override=args.seed, out_override=args.out)
        return _COMMANDS[args.command](config, args.force)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except TrollmapError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
