"""End-to-end experiment orchestration, reporting, and the ensemble-size sweep.

A run is: load data, split (or use predefined train/test files), z-score
normalize on the train side, build the segment-deletion plan, train the n
networks (optionally in parallel threads), predict on train and test, apply
the configured fusion strategies, and report. Every number in the result is
fixed by (config, master seed): per-learner seeds are stable hashes of the
master seed and the learner index, so thread scheduling cannot change them.
"""

from __future__ import annotations

import configparser
import copy
import json
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __about__, boosting, fusion, mlp
from .boosting import BoostConfig
from .diversify import build_plan, materialize, out_of_bag
from .errors import ConfigError, DataError, VoteStackError
from .fusion import PredictionMatrix
from .seeding import derive_seed
from .tabular import (
    Dataset,
    SplitSpec,
    apply_normalizer,
    fit_normalizer,
    load_csv,
    split,
)

STRATEGY_AVERAGE = "average"
STRATEGY_WEIGHTED = "weighted_average"
STRATEGY_PLURALITY = "plurality"
STRATEGY_MAJORITY = "majority"
STRATEGY_META = "meta"
STRATEGY_FILTERED = "filtered"

ALL_STRATEGIES = (
    STRATEGY_AVERAGE,
    STRATEGY_WEIGHTED,
    STRATEGY_PLURALITY,
    STRATEGY_MAJORITY,
    STRATEGY_META,
    STRATEGY_FILTERED,
)

WEIGHT_MODES = ("accuracy", "inverse_variance")

_CONFIG_SECTIONS = {
    "dataset": ("path", "train_path", "test_path", "label_column",
                "delimiter", "has_header"),
    "split": ("train_fraction", "stratified"),
    "ensemble": ("n_learners", "threshold", "strategies", "weight_mode",
                 "level1_mode"),
    "mlp": ("hidden_sizes", "epochs", "batch_size", "learning_rate",
            "momentum"),
    "boost": ("rounds", "max_depth", "learning_rate", "l2_lambda",
              "min_child_weight"),
    "run": ("seed", "output_dir", "workers"),
}


@contextmanager
def _stage(name: str):
    # Re-raise module errors with the pipeline stage prepended, same type
    # so exit-code mapping is preserved.
    try:
        yield
    except VoteStackError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; defaults mirror the reference setup (n=7,
    hidden 1200/800, 25 epochs, 80:20 split, filter threshold n-1)."""

    dataset_path: str | None = None
    train_path: str | None = None
    test_path: str | None = None
    label_column: int | str = -1
    delimiter: str = ","
    has_header: bool | None = None
    train_fraction: float = 0.8
    stratified: bool = True
    n_learners: int = 7
    threshold: int | None = None
    strategies: tuple[str, ...] = ALL_STRATEGIES
    weight_mode: str = "accuracy"
    level1_mode: str = fusion.LEVEL1_PROBA
    hidden_sizes: tuple[int, ...] = mlp.DEFAULT_HIDDEN_SIZES
    epochs: int = 25
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    boost: BoostConfig = field(default_factory=BoostConfig)
    seed: int = 0
    output_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.n_learners < 1:
            raise ConfigError("[ensemble] n_learners must be at least 1")
        if self.threshold is not None and not (1 <= self.threshold <= self.n_learners):
            raise ConfigError(
                f"[ensemble] threshold must lie in [1, {self.n_learners}], "
                f"got {self.threshold}"
            )
        seen = []
        for s in self.strategies:
            if s not in ALL_STRATEGIES:
                raise ConfigError(
                    f"[ensemble] unknown strategy {s!r}; valid: {', '.join(ALL_STRATEGIES)}"
                )
            if s not in seen:
                seen.append(s)
        if not seen:
            raise ConfigError("[ensemble] strategies must not be empty")
        object.__setattr__(
            self, "strategies", tuple(s for s in ALL_STRATEGIES if s in seen)
        )
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigError(
                f"[ensemble] weight_mode must be one of {', '.join(WEIGHT_MODES)}"
            )
        if self.level1_mode not in (fusion.LEVEL1_PROBA, fusion.LEVEL1_LABEL):
            raise ConfigError("[ensemble] level1_mode must be 'proba' or 'label'")
        hidden = tuple(int(h) for h in self.hidden_sizes)
        if not hidden or any(h < 1 for h in hidden):
            raise ConfigError("[mlp] hidden_sizes must be positive integers")
        object.__setattr__(self, "hidden_sizes", hidden)
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigError("[split] train_fraction must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("[run] workers must be at least 1")
        if (self.train_path is None) != (self.test_path is None):
            raise ConfigError(
                "[dataset] train_path and test_path must be given together"
            )
        if self.dataset_path is not None and self.train_path is not None:
            raise ConfigError(
                "[dataset] give either path or train_path/test_path, not both"
            )

    @property
    def effective_threshold(self) -> int:
        return self.threshold if self.threshold is not None else max(1, self.n_learners - 1)

    def learner_seed(self, learner_id: int) -> int:
        return derive_seed(self.seed, "learner", learner_id)

    def mlp_config(self, n_features: int, n_classes: int, seed: int) -> mlp.MlpConfig:
        return mlp.MlpConfig(
            layer_sizes=(n_features, *self.hidden_sizes, n_classes),
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            seed=seed,
        )

    def to_dict(self) -> dict:
        return {
            "dataset": {
                "path": self.dataset_path,
                "train_path": self.train_path,
                "test_path": self.test_path,
                "label_column": self.label_column,
                "delimiter": self.delimiter,
                "has_header": self.has_header,
            },
            "split": {
                "train_fraction": self.train_fraction,
                "stratified": self.stratified,
            },
            "ensemble": {
                "n_learners": self.n_learners,
                "threshold": self.threshold,
                "strategies": list(self.strategies),
                "weight_mode": self.weight_mode,
                "level1_mode": self.level1_mode,
            },
            "mlp": {
                "hidden_sizes": list(self.hidden_sizes),
                "epochs": self.epochs,
                "batch_size": self.batch_size,
                "learning_rate": self.learning_rate,
                "momentum": self.momentum,
            },
            "boost": self.boost.to_dict(),
            "run": {
                "seed": self.seed,
                "output_dir": self.output_dir,
                "workers": self.workers,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        ds = d.get("dataset", {})
        sp = d.get("split", {})
        en = d.get("ensemble", {})
        ml = d.get("mlp", {})
        bo = d.get("boost", {})
        rn = d.get("run", {})
        kwargs: dict = {}
        if "path" in ds:
            kwargs["dataset_path"] = ds["path"]
        for k_src, k_dst in (("train_path", "train_path"), ("test_path", "test_path"),
                             ("label_column", "label_column"),
                             ("delimiter", "delimiter"), ("has_header", "has_header")):
            if k_src in ds:
                kwargs[k_dst] = ds[k_src]
        for k in ("train_fraction", "stratified"):
            if k in sp:
                kwargs[k] = sp[k]
        for k in ("n_learners", "threshold", "weight_mode", "level1_mode"):
            if k in en:
                kwargs[k] = en[k]
        if "strategies" in en:
            kwargs["strategies"] = tuple(en["strategies"])
        for k in ("epochs", "batch_size", "learning_rate", "momentum"):
            if k in ml:
                kwargs[k] = ml[k]
        if "hidden_sizes" in ml:
            kwargs["hidden_sizes"] = tuple(ml["hidden_sizes"])
        if bo:
            kwargs["boost"] = BoostConfig.from_dict(bo)
        for k in ("seed", "output_dir", "workers"):
            if k in rn:
                kwargs[k] = rn[k]
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        """Parse a flat key-value config file with [section] headers.

        Requires a dataset location: either [dataset] path, or the
        train_path/test_path pair for data predefined as two files.
        """
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string(path.read_text(encoding="utf-8"))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc

        for section in parser.sections():
            if section not in _CONFIG_SECTIONS:
                raise ConfigError(f"{path}: unknown config section [{section}]")
            for key in parser[section]:
                if key not in _CONFIG_SECTIONS[section]:
                    raise ConfigError(
                        f"{path}: unknown key {key!r} in section [{section}]"
                    )

        def get(section, key, conv, default):
            if parser.has_option(section, key):
                raw = parser.get(section, key).strip()
                try:
                    return conv(raw)
                except (ValueError, TypeError) as exc:
                    raise ConfigError(
                        f"{path}: [{section}] {key}: cannot parse {raw!r}"
                    ) from exc
            return default

        def as_bool(raw: str) -> bool:
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)

        def as_tribool(raw: str) -> bool | None:
            return None if raw.lower() == "auto" else as_bool(raw)

        def as_label_column(raw: str):
            try:
                return int(raw)
            except ValueError:
                return raw

        def as_int_tuple(raw: str) -> tuple[int, ...]:
            return tuple(int(p) for p in raw.replace(",", " ").split())

        def as_str_tuple(raw: str) -> tuple[str, ...]:
            return tuple(p for p in raw.replace(",", " ").split())

        dataset_path = get("dataset", "path", str, None)
        train_path = get("dataset", "train_path", str, None)
        test_path = get("dataset", "test_path", str, None)
        if dataset_path is None and train_path is None:
            raise ConfigError(
                f"{path}: missing dataset location: set [dataset] path, or "
                "[dataset] train_path and test_path"
            )

        boost = BoostConfig(
            rounds=get("boost", "rounds", int, 50),
            max_depth=get("boost", "max_depth", int, 3),
            learning_rate=get("boost", "learning_rate", float, 0.3),
            l2_lambda=get("boost", "l2_lambda", float, 1.0),
            min_child_weight=get("boost", "min_child_weight", float, 1.0),
        )
        return cls(
            dataset_path=dataset_path,
            train_path=train_path,
            test_path=test_path,
            label_column=get("dataset", "label_column", as_label_column, -1),
            delimiter=get("dataset", "delimiter", str, ","),
            has_header=get("dataset", "has_header", as_tribool, None),
            train_fraction=get("split", "train_fraction", float, 0.8),
            stratified=get("split", "stratified", as_bool, True),
            n_learners=get("ensemble", "n_learners", int, 7),
            threshold=get("ensemble", "threshold", int, None),
            strategies=get("ensemble", "strategies", as_str_tuple, ALL_STRATEGIES),
            weight_mode=get("ensemble", "weight_mode", str, "accuracy"),
            level1_mode=get("ensemble", "level1_mode", str, fusion.LEVEL1_PROBA),
            hidden_sizes=get("mlp", "hidden_sizes", as_int_tuple, mlp.DEFAULT_HIDDEN_SIZES),
            epochs=get("mlp", "epochs", int, 25),
            batch_size=get("mlp", "batch_size", int, 32),
            learning_rate=get("mlp", "learning_rate", float, 0.01),
            momentum=get("mlp", "momentum", float, 0.9),
            boost=boost,
            seed=get("run", "seed", int, 0),
            output_dir=get("run", "output_dir", str, None),
            workers=get("run", "workers", int, 1),
        )


@dataclass(frozen=True)
class RunReport:
    """Complete result of one experiment; JSON round-trips exactly.

    Timings are wall-clock measurements and hence the one field excluded
    from determinism comparisons between repeated runs.
    """

    dataset_label: str
    seed: int
    n_learners: int
    threshold: int
    n_train: int
    n_test: int
    learner_seeds: tuple[int, ...]
    per_learner_accuracies: tuple[float, ...]
    mean_accuracy: float
    strategy_accuracies: dict[str, float]
    rejected_count: int
    route_counts: dict[str, int]
    warnings: tuple[str, ...]
    decisions: dict[str, tuple[int, ...]]
    routes: dict[str, tuple[str | None, ...] | None]
    config: dict
    timings: dict[str, float]
    plan_manifest: dict | None

    def to_dict(self) -> dict:
        return {
            "dataset_label": self.dataset_label,
            "seed": self.seed,
            "n_learners": self.n_learners,
            "threshold": self.threshold,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "learner_seeds": list(self.learner_seeds),
            "per_learner_accuracies": list(self.per_learner_accuracies),
            "mean_accuracy": self.mean_accuracy,
            "strategy_accuracies": dict(self.strategy_accuracies),
            "rejected_count": self.rejected_count,
            "route_counts": dict(self.route_counts),
            "warnings": list(self.warnings),
            "decisions": {k: list(v) for k, v in self.decisions.items()},
            "routes": {k: (list(v) if v is not None else None)
                       for k, v in self.routes.items()},
            "config": copy.deepcopy(self.config),
            "timings": dict(self.timings),
            "plan_manifest": copy.deepcopy(self.plan_manifest),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(
            dataset_label=d["dataset_label"],
            seed=d["seed"],
            n_learners=d["n_learners"],
            threshold=d["threshold"],
            n_train=d["n_train"],
            n_test=d["n_test"],
            learner_seeds=tuple(d["learner_seeds"]),
            per_learner_accuracies=tuple(d["per_learner_accuracies"]),
            mean_accuracy=d["mean_accuracy"],
            strategy_accuracies=dict(d["strategy_accuracies"]),
            rejected_count=d["rejected_count"],
            route_counts=dict(d["route_counts"]),
            warnings=tuple(d["warnings"]),
            decisions={k: tuple(v) for k, v in d["decisions"].items()},
            routes={k: (tuple(v) if v is not None else None)
                    for k, v in d["routes"].items()},
            config=copy.deepcopy(d["config"]),
            timings=dict(d["timings"]),
            plan_manifest=copy.deepcopy(d["plan_manifest"]),
        )


@dataclass(frozen=True)
class SweepRow:
    size: int
    filtered_accuracy: float
    mean_individual_accuracy: float


@dataclass(frozen=True)
class SweepReport:
    """Accuracy-vs-ensemble-size curve data plus the underlying run reports."""

    seed: int
    rows: tuple[SweepRow, ...]
    reports: tuple[RunReport, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "reports", tuple(self.reports))
        sizes = [r.size for r in self.rows]
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("sweep sizes must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "rows": [[r.size, r.filtered_accuracy, r.mean_individual_accuracy]
                     for r in self.rows],
            "reports": [r.to_dict() for r in self.reports],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepReport":
        return cls(
            seed=d["seed"],
            rows=tuple(SweepRow(int(s), float(p), float(m)) for s, p, m in d["rows"]),
            reports=tuple(RunReport.from_dict(r) for r in d["reports"]),
        )


def _load_data(config: ExperimentConfig,
               dataset: Dataset | None) -> tuple[Dataset, Dataset, str]:
    """Resolve (train, test, label) from an in-memory dataset or config paths."""
    if dataset is not None:
        label = "in-memory"
        spec = SplitSpec(config.train_fraction, config.stratified,
                         seed=derive_seed(config.seed, "split"))
        train, test = split(dataset, spec)
        return train, test, label
    if config.train_path is not None:
        train = load_csv(config.train_path, config.label_column,
                         config.delimiter, config.has_header)
        test = load_csv(config.test_path, config.label_column,
                        config.delimiter, config.has_header,
                        class_names=train.schema.class_names)
        if test.n_features != train.n_features:
            raise DataError(
                f"train file has {train.n_features} features but test file "
                f"has {test.n_features}"
            )
        return train, test, Path(config.train_path).stem
    if config.dataset_path is None:
        raise ConfigError(
            "missing dataset location: set [dataset] path, or "
            "[dataset] train_path and test_path"
        )
    full = load_csv(config.dataset_path, config.label_column,
                    config.delimiter, config.has_header)
    spec = SplitSpec(config.train_fraction, config.stratified,
                     seed=derive_seed(config.seed, "split"))
    train, test = split(full, spec)
    return train, test, Path(config.dataset_path).stem


def _train_learners(config: ExperimentConfig, train: Dataset,
                    plan) -> list[mlp.MlpModel]:
    n = config.n_learners
    n_classes = train.schema.n_classes

    def job(j: int) -> mlp.MlpModel:
        if plan is None:
            idx = np.arange(train.n_samples)
        else:
            idx = materialize(plan, j).indices
        cfg = config.mlp_config(train.n_features, n_classes, config.learner_seed(j))
        with _stage(f"training learner {j}"):
            return mlp.train(mlp.init(cfg), train.features[idx], train.labels[idx])

    if config.workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(job, j) for j in range(n)]
            return [f.result() for f in futures]
    return [job(j) for j in range(n)]


def _learner_weights(config: ExperimentConfig, plan, pm_train: PredictionMatrix,
                     train_labels: np.ndarray) -> fusion.WeightVector:
    """Out-of-bag accuracy or error-variance weights for weighted averaging."""
    n = config.n_learners
    if plan is None or n == 1:
        return fusion.WeightVector.uniform(n)
    C = pm_train.n_classes
    accs = np.empty(n)
    variances = np.empty(n)
    for j in range(n):
        oob = out_of_bag(plan, j)
        probs = pm_train.probs[j, oob]
        y = train_labels[oob]
        accs[j] = np.mean(np.argmax(probs, axis=1) == y)
        onehot = np.eye(C)[y]
        variances[j] = np.mean((probs - onehot) ** 2)
    if config.weight_mode == "accuracy":
        return fusion.weights_from_accuracy(accs)
    return fusion.weights_from_inverse_variance(variances)


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None,
                   dataset_label: str | None = None) -> RunReport:
    """Execute one full experiment; deterministic for a fixed config.

    `dataset` bypasses file loading (the 80:20 splitter still applies).
    Model binaries are persisted to <output_dir>/models before any fusion
    runs, so a failed fusion stage leaves the trained ensemble on disk.
    """
    t_start = time.perf_counter()
    with _stage("loading data"):
        train, test, inferred_label = _load_data(config, dataset)
    label = dataset_label if dataset_label is not None else inferred_label

    with _stage("normalizing"):
        norm = fit_normalizer(train)
        train = apply_normalizer(norm, train)
        test = apply_normalizer(norm, test)
    t_loaded = time.perf_counter()

    n = config.n_learners
    # A single learner has no segment to delete; it trains on the full set.
    with _stage("planning resamples"):
        plan = build_plan(train.n_samples, n, config.seed) if n > 1 else None

    models = _train_learners(config, train, plan)
    t_trained = time.perf_counter()

    out = Path(config.output_dir) if config.output_dir else None
    if out is not None:
        models_dir = out / "models"
        try:
            models_dir.mkdir(parents=True, exist_ok=True)
            for j, model in enumerate(models):
                mlp.save(model, models_dir / f"learner_{j}.mlp")
        except OSError as exc:
            raise ConfigError(f"cannot write model files to {models_dir}: {exc}") from exc

    with _stage("predicting"):
        pm_train = PredictionMatrix(
            np.stack([mlp.predict_proba(m, train.features) for m in models]))
        pm_test = PredictionMatrix(
            np.stack([mlp.predict_proba(m, test.features) for m in models]))

    test_votes = pm_test.votes()
    per_learner = tuple(
        float(np.mean(test_votes[j] == test.labels)) for j in range(n)
    )
    mean_accuracy = sum(per_learner) / n

    strategy_accuracies: dict[str, float] = {}
    decisions: dict[str, tuple[int, ...]] = {}
    routes: dict[str, tuple[str | None, ...] | None] = {}
    warnings: list[str] = []
    rejected_count = 0
    route_counts: dict[str, int] = {}

    def record(name: str, outcome: fusion.FusionOutcome) -> None:
        strategy_accuracies[name] = fusion.outcome_accuracy(outcome, test.labels)
        decisions[name] = tuple(int(v) for v in outcome.decisions)
        routes[name] = outcome.routes
        warnings.extend(outcome.warnings)

    with _stage("fusing"):
        if STRATEGY_AVERAGE in config.strategies:
            record(STRATEGY_AVERAGE, fusion.model_average(pm_test))
        if STRATEGY_WEIGHTED in config.strategies:
            weights = _learner_weights(config, plan, pm_train, train.labels)
            record(STRATEGY_WEIGHTED, fusion.model_average(pm_test, weights))
        if STRATEGY_PLURALITY in config.strategies:
            record(STRATEGY_PLURALITY, fusion.plurality_vote(pm_test))
        if STRATEGY_MAJORITY in config.strategies:
            outcome = fusion.majority_vote(pm_test)
            rejected_count = outcome.rejected_count
            record(STRATEGY_MAJORITY, outcome)
        if STRATEGY_META in config.strategies:
            meta_model = fusion.fit_meta(pm_train, train.labels, config.boost,
                                         config.level1_mode)
            if out is not None:
                boosting.save(meta_model, out / "models" / "meta.gbt")
            record(STRATEGY_META, fusion.meta_fuse(meta_model, pm_test,
                                                   config.level1_mode))
        if STRATEGY_FILTERED in config.strategies:
            fitted = fusion.fit_filtered(pm_train, train.labels, config.boost,
                                         config.effective_threshold,
                                         config.level1_mode)
            if out is not None and fitted.meta_model is not None:
                boosting.save(fitted.meta_model, out / "models" / "filtered_meta.gbt")
            outcome = fusion.apply_filtered(fitted, pm_test)
            route_counts = outcome.route_counts()
            record(STRATEGY_FILTERED, outcome)
    t_done = time.perf_counter()

    return RunReport(
        dataset_label=label,
        seed=config.seed,
        n_learners=n,
        threshold=config.effective_threshold,
        n_train=train.n_samples,
        n_test=test.n_samples,
        learner_seeds=tuple(config.learner_seed(j) for j in range(n)),
        per_learner_accuracies=per_learner,
        mean_accuracy=mean_accuracy,
        strategy_accuracies=strategy_accuracies,
        rejected_count=rejected_count,
        route_counts=route_counts,
        warnings=tuple(warnings),
        decisions=decisions,
        routes=routes,
        config=config.to_dict(),
        timings={
            "load_seconds": t_loaded - t_start,
            "train_seconds": t_trained - t_loaded,
            "fusion_seconds": t_done - t_trained,
            "total_seconds": t_done - t_start,
        },
        plan_manifest=plan.to_manifest() if plan is not None else None,
    )


def sweep(config: ExperimentConfig, max_size: int = 8,
          dataset: Dataset | None = None,
          dataset_label: str | None = None) -> SweepReport:
    """Run the experiment at every ensemble size 1..max_size, shared seed.

    Each size uses its own default filter threshold (size-1, floored at 1)
    and, when an output directory is set, its own size_<k> subdirectory.
    """
    if max_size < 1:
        raise ConfigError("sweep max_size must be at least 1")
    rows = []
    reports = []
    for size in range(1, max_size + 1):
        strategies = tuple(
            s for s in ALL_STRATEGIES
            if s in config.strategies or s == STRATEGY_FILTERED
        )
        sub_out = (str(Path(config.output_dir) / f"size_{size}")
                   if config.output_dir else None)
        sub = replace(config, n_learners=size, threshold=None,
                      strategies=strategies, output_dir=sub_out)
        report = run_experiment(sub, dataset=dataset, dataset_label=dataset_label)
        reports.append(report)
        rows.append(SweepRow(
            size=size,
            filtered_accuracy=report.strategy_accuracies[STRATEGY_FILTERED],
            mean_individual_accuracy=report.mean_accuracy,
        ))
    return SweepReport(seed=config.seed, rows=tuple(rows), reports=tuple(reports))


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


def _json_dumps(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit_report(report: RunReport, directory: str | Path) -> dict[str, Path]:
    """Write the run artifacts; returns the paths keyed by artifact name.

    report.json holds every report field; accuracy_table.csv is the one-row
    strategy summary (plurality | meta | filtered columns); decisions.csv
    lists every per-sample decision with its route; manifest.json records
    config, seeds, and tool version for exact re-runs.
    """
    directory = Path(directory)
    paths = {
        "report": directory / "report.json",
        "accuracy_table": directory / "accuracy_table.csv",
        "decisions": directory / "decisions.csv",
        "manifest": directory / "manifest.json",
    }
    _write_text(paths["report"], _json_dumps(report.to_dict()))

    def cell(name: str) -> str:
        acc = report.strategy_accuracies.get(name)
        return repr(acc) if acc is not None else ""

    table = "dataset,plurality,meta,filtered\n" + ",".join(
        [report.dataset_label, cell(STRATEGY_PLURALITY), cell(STRATEGY_META),
         cell(STRATEGY_FILTERED)]
    ) + "\n"
    _write_text(paths["accuracy_table"], table)

    lines = ["strategy,sample_id,decision,route"]
    for name in report.decisions:
        strategy_routes = report.routes.get(name)
        for i, decision in enumerate(report.decisions[name]):
            route = ""
            if strategy_routes is not None and strategy_routes[i] is not None:
                route = strategy_routes[i]
            lines.append(f"{name},{i},{decision},{route}")
    _write_text(paths["decisions"], "\n".join(lines) + "\n")

    manifest = {
        "tool": __about__.TOOL_NAME,
        "version": __about__.__version__,
        "seed": report.seed,
        "learner_seeds": list(report.learner_seeds),
        "plan": report.plan_manifest,
        "config": report.config,
    }
    _write_text(paths["manifest"], _json_dumps(manifest))
    return paths


def emit_sweep(report: SweepReport, directory: str | Path) -> dict[str, Path]:
    """Write sweep.csv (size, filtered, mean individual) and sweep.json."""
    directory = Path(directory)
    paths = {
        "sweep_csv": directory / "sweep.csv",
        "sweep_json": directory / "sweep.json",
    }
    lines = ["size,filtered,mean_individual"]
    for row in report.rows:
        lines.append(
            f"{row.size},{row.filtered_accuracy!r},{row.mean_individual_accuracy!r}"
        )
    _write_text(paths["sweep_csv"], "\n".join(lines) + "\n")
    _write_text(paths["sweep_json"], _json_dumps(report.to_dict()))
    return paths
