"""Decision fusion over a stack of per-learner probability predictions.

Implements averaging (uniform and weighted), plurality voting, strict
majority voting with rejection, plain meta-learner stacking, and the
vote-filtered variant: test samples where at least `threshold` learners
agree take the voted label directly, everything else is scored by a
meta-learner trained on the difficult training instances only. Ties break
toward the lowest class index everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import boosting
from .errors import (
    ConfigError,
    ContractError,
    DegenerateWeightsError,
    InsufficientDataError,
)

REJECTED = -1

ROUTE_CONFIDENT = "confident-vote"
ROUTE_META = "meta-learner"
ROUTE_FALLBACK = "fallback"

VARIANCE_FLOOR = 1e-12

LEVEL1_PROBA = "proba"
LEVEL1_LABEL = "label"


@dataclass(frozen=True)
class PredictionMatrix:
    """n_learners x n_samples x n_classes tensor of class probabilities."""

    probs: np.ndarray
    learner_ids: tuple[int, ...] | None = None
    sample_ids: tuple[int, ...] | None = None

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if probs is self.probs:
            probs = probs.copy()
        if probs.ndim != 3:
            raise ContractError(
                f"prediction matrix must be 3-D (learners, samples, classes), got {probs.shape}"
            )
        if probs.shape[2] < 2:
            raise ContractError("prediction matrix needs at least 2 classes")
        if probs.min() < 0.0 or probs.max() > 1.0 + 1e-9:
            raise ContractError("probabilities must lie in [0, 1]")
        sums = probs.sum(axis=2)
        if np.abs(sums - 1.0).max() > 1e-9:
            raise ContractError("every probability row must sum to 1 within 1e-9")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if self.learner_ids is not None:
            object.__setattr__(self, "learner_ids", tuple(self.learner_ids))
            if len(self.learner_ids) != probs.shape[0]:
                raise ContractError("learner_ids length must match learner count")
        if self.sample_ids is not None:
            object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
            if len(self.sample_ids) != probs.shape[1]:
                raise ContractError("sample_ids length must match sample count")

    @property
    def n_learners(self) -> int:
        return self.probs.shape[0]

    @property
    def n_samples(self) -> int:
        return self.probs.shape[1]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[2]

    def votes(self) -> np.ndarray:
        """Per-learner argmax labels, shape (n_learners, n_samples)."""
        return np.argmax(self.probs, axis=2)


@dataclass(frozen=True)
class VoteTally:
    """Per-sample label counts; rows sum to n_learners."""

    counts: np.ndarray
    n_learners: int

    def top_counts(self) -> np.ndarray:
        return self.counts.max(axis=1)

    def top_labels(self) -> np.ndarray:
        """Most frequent label per sample, lowest index on ties."""
        return np.argmax(self.counts, axis=1)


@dataclass(frozen=True)
class WeightVector:
    """Non-negative learner weights normalized to sum 1."""

    values: np.ndarray
    provenance: str

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values is self.values:
            values = values.copy()
        if values.ndim != 1:
            raise ContractError("weights must be a vector")
        if np.any(values < 0):
            raise ContractError("weights must be non-negative")
        if abs(values.sum() - 1.0) > 1e-12:
            raise ContractError("weights must sum to 1 within 1e-12")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls(np.full(n, 1.0 / n), "uniform")


@dataclass(frozen=True)
class FusionOutcome:
    """Per-sample fused decisions; REJECTED (-1) only from strict majority."""

    decisions: np.ndarray
    routes: tuple[str | None, ...] | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        decisions = np.ascontiguousarray(self.decisions, dtype=np.int64)
        if decisions is self.decisions:
            decisions = decisions.copy()
        decisions.setflags(write=False)
        object.__setattr__(self, "decisions", decisions)
        if self.routes is not None:
            object.__setattr__(self, "routes", tuple(self.routes))
            if len(self.routes) != decisions.shape[0]:
                raise ContractError("route tags must match decision count")
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def n_samples(self) -> int:
        return self.decisions.shape[0]

    @property
    def rejected_count(self) -> int:
        return int(np.sum(self.decisions == REJECTED))

    def route_counts(self) -> dict[str, int]:
        out = {ROUTE_CONFIDENT: 0, ROUTE_META: 0, ROUTE_FALLBACK: 0}
        if self.routes is not None:
            for r in self.routes:
                if r is not None:
                    out[r] += 1
        return out


@dataclass(frozen=True)
class VarianceReport:
    """Spread of individual learner outputs versus the ensemble mean output."""

    mean_individual_variance: float
    ensemble_variance: float
    ratio: float
    n_learners: int


def tally(pm: PredictionMatrix) -> VoteTally:
    votes = pm.votes()
    counts = np.zeros((pm.n_samples, pm.n_classes), dtype=np.int64)
    rows = np.arange(pm.n_samples)
    for j in range(pm.n_learners):
        counts[rows, votes[j]] += 1
    return VoteTally(counts=counts, n_learners=pm.n_learners)


def model_average(pm: PredictionMatrix,
                  weights: WeightVector | None = None) -> FusionOutcome:
    """Argmax of the (weighted) sum of predicted probabilities per sample."""
    if weights is None:
        weights = WeightVector.uniform(pm.n_learners)
    w = weights.values if isinstance(weights, WeightVector) else np.asarray(weights)
    if w.shape != (pm.n_learners,):
        raise ContractError(
            f"expected {pm.n_learners} weights, got shape {w.shape}"
        )
    fused = np.tensordot(w, pm.probs, axes=(0, 0))
    return FusionOutcome(decisions=np.argmax(fused, axis=1))


def weights_from_accuracy(accuracies) -> WeightVector:
    """Weights proportional to per-learner accuracies."""
    acc = np.asarray(accuracies, dtype=np.float64)
    if np.any(acc < 0) or np.any(acc > 1):
        raise ContractError("accuracies must lie in [0, 1]")
    total = acc.sum()
    if total <= 0:
        raise DegenerateWeightsError("all learner accuracies are zero")
    return WeightVector(acc / total, "accuracy-based")


def weights_from_inverse_variance(variances) -> WeightVector:
    """Weights proportional to 1/variance, variances floored at 1e-12."""
    var = np.maximum(np.asarray(variances, dtype=np.float64), VARIANCE_FLOOR)
    inv = 1.0 / var
    return WeightVector(inv / inv.sum(), "inverse-variance-based")


def plurality_vote(pm: PredictionMatrix) -> FusionOutcome:
    """Most frequent argmax label per sample; lowest class index on ties."""
    return FusionOutcome(decisions=tally(pm).top_labels())


def majority_vote(pm: PredictionMatrix) -> FusionOutcome:
    """Label with more than half the votes, else the sample is Rejected."""
    t = tally(pm)
    top = t.top_labels()
    decisions = np.where(t.top_counts() * 2 > pm.n_learners, top, REJECTED)
    return FusionOutcome(decisions=decisions)


def build_level1_features(pm: PredictionMatrix,
                          mode: str = LEVEL1_PROBA) -> np.ndarray:
    """Per-sample meta-learner inputs.

    "proba" concatenates the n probability vectors in learner-major order
    (column j*C + c holds learner j's probability for class c); "label"
    uses the n hard argmax labels instead.
    """
    if mode == LEVEL1_PROBA:
        return pm.probs.transpose(1, 0, 2).reshape(pm.n_samples, -1).copy()
    if mode == LEVEL1_LABEL:
        return pm.votes().T.astype(np.float64)
    raise ConfigError(f"unknown level-1 feature mode {mode!r}")


def fit_meta(pm_train: PredictionMatrix, train_labels,
             config: boosting.BoostConfig,
             mode: str = LEVEL1_PROBA) -> boosting.BoostedModel:
    """Train the level-2 learner on level-1 features of the training set."""
    labels = np.asarray(train_labels, dtype=np.int64)
    if labels.shape != (pm_train.n_samples,):
        raise ContractError("train labels must match the prediction matrix samples")
    return boosting.fit(
        build_level1_features(pm_train, mode), labels, config,
        n_classes=pm_train.n_classes,
    )


def meta_fuse(model: boosting.BoostedModel, pm_test: PredictionMatrix,
              mode: str = LEVEL1_PROBA) -> FusionOutcome:
    decisions = boosting.predict_label(model, build_level1_features(pm_test, mode))
    return FusionOutcome(decisions=decisions, routes=(ROUTE_META,) * pm_test.n_samples)


def _effective_threshold(threshold: int | None, n_learners: int) -> int:
    if threshold is None:
        return max(1, n_learners - 1)
    if not (1 <= threshold <= n_learners):
        raise ConfigError(
            f"filter threshold must lie in [1, {n_learners}], got {threshold}"
        )
    return int(threshold)


@dataclass(frozen=True)
class FilteredFusion:
    """Fitted state of the vote-filter + meta-learner pipeline."""

    threshold: int
    meta_model: boosting.BoostedModel | None
    level1_mode: str
    n_difficult: int
    warnings: tuple[str, ...] = ()


def fit_filtered(pm_train: PredictionMatrix, train_labels,
                 config: boosting.BoostConfig,
                 threshold: int | None = None,
                 mode: str = LEVEL1_PROBA) -> FilteredFusion:
    """Fit the meta-learner on training instances that fail the vote filter.

    Instances whose top vote count reaches the threshold are excluded; the
    meta-learner sees difficult cases only. If none remain (or they all
    share one class) meta fitting is skipped and application falls back to
    plurality voting for unfiltered samples.
    """
    labels = np.asarray(train_labels, dtype=np.int64)
    if labels.shape != (pm_train.n_samples,):
        raise ContractError("train labels must match the prediction matrix samples")
    thr = _effective_threshold(threshold, pm_train.n_learners)
    difficult = tally(pm_train).top_counts() < thr
    n_difficult = int(difficult.sum())
    if n_difficult == 0:
        return FilteredFusion(
            threshold=thr, meta_model=None, level1_mode=mode, n_difficult=0,
            warnings=("no difficult training instances at threshold "
                      f"{thr}; residual test samples fall back to plurality voting",),
        )
    hard_labels = labels[difficult]
    if np.unique(hard_labels).size < 2:
        return FilteredFusion(
            threshold=thr, meta_model=None, level1_mode=mode, n_difficult=n_difficult,
            warnings=("difficult training instances all share one class; "
                      "residual test samples fall back to plurality voting",),
        )
    meta = boosting.fit(
        build_level1_features(pm_train, mode)[difficult], hard_labels, config,
        n_classes=pm_train.n_classes,
    )
    return FilteredFusion(
        threshold=thr, meta_model=meta, level1_mode=mode, n_difficult=n_difficult,
    )


def apply_filtered(fitted: FilteredFusion, pm_test: PredictionMatrix) -> FusionOutcome:
    """Route test samples: confident votes directly, the rest to the meta-learner."""
    t = tally(pm_test)
    confident = t.top_counts() >= fitted.threshold
    decisions = t.top_labels().copy()
    routes: list[str] = [ROUTE_CONFIDENT] * pm_test.n_samples
    residual = np.flatnonzero(~confident)
    if residual.size:
        if fitted.meta_model is not None:
            feats = build_level1_features(pm_test, fitted.level1_mode)[residual]
            decisions[residual] = boosting.predict_label(fitted.meta_model, feats)
            for i in residual:
                routes[i] = ROUTE_META
        else:
            for i in residual:
                routes[i] = ROUTE_FALLBACK
    return FusionOutcome(
        decisions=decisions, routes=tuple(routes), warnings=fitted.warnings
    )


def filtered_fuse(pm_train: PredictionMatrix, train_labels,
                  pm_test: PredictionMatrix,
                  threshold: int | None = None,
                  config: boosting.BoostConfig | None = None,
                  mode: str = LEVEL1_PROBA) -> FusionOutcome:
    """Vote-filtered stacking end to end (fit on train, apply to test)."""
    if config is None:
        config = boosting.BoostConfig()
    fitted = fit_filtered(pm_train, train_labels, config, threshold, mode)
    return apply_filtered(fitted, pm_test)


def variance_report(outputs) -> VarianceReport:
    """Mean per-learner output variance vs. variance of the ensemble mean.

    Accepts a PredictionMatrix or a raw (n_learners, n_samples[, n_outputs])
    array of synthetic learner outputs. Variances are taken across samples
    and averaged over output coordinates.
    """
    arr = outputs.probs if isinstance(outputs, PredictionMatrix) else np.asarray(
        outputs, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ContractError("expected (learners, samples[, outputs]) array")
    if arr.shape[1] < 2:
        raise InsufficientDataError("variance needs at least 2 samples")
    mean_individual = float(arr.var(axis=1).mean())
    ensemble = float(arr.mean(axis=0).var(axis=0).mean())
    ratio = 1.0 if mean_individual == 0.0 else ensemble / mean_individual
    return VarianceReport(
        mean_individual_variance=mean_individual,
        ensemble_variance=ensemble,
        ratio=ratio,
        n_learners=arr.shape[0],
    )


def outcome_accuracy(outcome: FusionOutcome, labels) -> float:
    """Fraction of correct decisions; Rejected samples count as errors."""
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != outcome.decisions.shape:
        raise ContractError("labels must match decision count")
    return float(np.mean(outcome.decisions == y))
