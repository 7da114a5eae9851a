"""Fit/predict orchestration over the three survival estimators.

A FittedModel is a self-contained, versioned document: kind, feature
names, parameters, seed, and the holdout concordance index. Reloading the
JSON form reproduces predictions bit-identically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from retain.survival.concordance import concordance_index
from retain.survival.cox import ZeroVarianceError, fit_cox
from retain.survival.forest import (
    DEFAULT_MIN_NODE_SIZE,
    DEFAULT_TREES,
    RandomSurvivalForest,
    fit_forest,
)
from retain.survival.nncox import (
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN,
    DEFAULT_RATE,
    NeuralCoxNet,
    fit_nncox,
)
from retain.survival.records import FEATURE_NAMES, SurvivalRecord

MODEL_KINDS = ("cox", "rsf", "nncox")
DEFAULT_MIN_RECORDS = 10
MODEL_DOC_VERSION = 1


class InsufficientRecordsError(ValueError):
    pass


class FeatureMismatchError(ValueError):
    def __init__(self, feature: str):
        super().__init__(f"missing feature {feature!r}")
        self.feature = feature


@dataclass(frozen=True)
class FittedModel:
    model_id: str
    kind: str
    feature_names: tuple[str, ...]
    parameters: dict
    c_index: float | None
    train_fraction: float
    converged: bool
    iterations: int
    split_seed: int

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.c_index is not None and not 0.0 <= self.c_index <= 1.0:
            raise ValueError("c_index outside [0,1]")


@dataclass(frozen=True)
class RiskScore:
    contributor_id: str
    score: float
    rank: int


def _feature_matrix(
    records: list[SurvivalRecord], feature_names: tuple[str, ...]
) -> np.ndarray:
    """Select the model's columns out of each record's covariate vector.

    Records either match the model layout directly or carry the full
    canonical vector, from which the model's subset is sliced by name.
    """
    width = len(records[0].covariates)
    if any(len(r.covariates) != width for r in records):
        raise FeatureMismatchError("covariates")
    full = np.array([r.covariates for r in records], dtype=float)
    if width == len(feature_names):
        return full
    if width == len(FEATURE_NAMES):
        cols = []
        for name in feature_names:
            if name not in FEATURE_NAMES:
                raise FeatureMismatchError(name)
            cols.append(FEATURE_NAMES.index(name))
        return full[:, cols]
    raise FeatureMismatchError(feature_names[0])


def _default_feature_names(records: list[SurvivalRecord]) -> tuple[str, ...]:
    width = len(records[0].covariates)
    if width == len(FEATURE_NAMES):
        return FEATURE_NAMES
    return tuple(f"x{i}" for i in range(width))


def _split(n: int, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError("train_fraction must be in (0, 1]")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = min(n, max(1, int(round(train_fraction * n))))
    return perm[:n_train], perm[n_train:]


def _model_id(kind: str, feature_names, split_seed: int, n: int, train_fraction: float) -> str:
    payload = json.dumps(
        [kind, list(feature_names), split_seed, n, train_fraction], separators=(",", ":")
    )
    return f"{kind}-{hashlib.sha256(payload.encode()).hexdigest()[:12]}"


def fit_model(
    records: list[SurvivalRecord],
    kind: str,
    hyperparameters: dict | None = None,
    split_seed: int = 0,
    train_fraction: float = 0.7,
) -> FittedModel:
    """Split, fit, and score one survival model.

    Hyperparameters (all optional): features (name subset), min_records,
    n_trees / min_node_size / bootstrap (rsf), hidden / rate / epochs
    (nncox). Non-convergence is reported, not raised; zero-variance
    covariates and too-few records are contract errors.
    """
    hp = dict(hyperparameters or {})
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    min_records = int(hp.pop("min_records", DEFAULT_MIN_RECORDS))
    n_events = sum(r.event for r in records)
    if len(records) < min_records or n_events < 1:
        raise InsufficientRecordsError(
            f"insufficient records: need >= {min_records} with >= 1 event, "
            f"got {len(records)} with {n_events}"
        )

    feature_names = tuple(hp.pop("features", None) or _default_feature_names(records))
    x = _feature_matrix(records, feature_names)
    durations = np.array([r.duration_days for r in records])
    events = np.array([r.event for r in records])

    train_idx, holdout_idx = _split(len(records), train_fraction, split_seed)
    if events[train_idx].sum() < 1:
        raise InsufficientRecordsError("training split has no observed events")

    x_train, d_train, e_train = x[train_idx], durations[train_idx], events[train_idx]

    if kind == "cox":
        fit = fit_cox(x_train, d_train, e_train, feature_names=feature_names)
        parameters = {
            "beta": [float(b) for b in fit.beta],
            "baseline_times": [float(t) for t in fit.baseline_times],
            "baseline_cumhaz": [float(h) for h in fit.baseline_cumhaz],
        }
        converged, iterations = fit.converged, fit.iterations
        risk_fn = lambda m: m @ fit.beta
    elif kind == "rsf":
        _reject_unknown(hp, {"n_trees", "min_node_size", "bootstrap"})
        forest = fit_forest(
            x_train,
            d_train,
            e_train,
            seed=split_seed,
            n_trees=int(hp.get("n_trees", DEFAULT_TREES)),
            min_node_size=int(hp.get("min_node_size", DEFAULT_MIN_NODE_SIZE)),
            bootstrap=bool(hp.get("bootstrap", True)),
        )
        parameters = forest.to_dict()
        converged, iterations = True, forest.n_trees
        risk_fn = forest.predict_risk
    else:  # nncox
        _reject_unknown(hp, {"hidden", "rate", "epochs"})
        _check_variance_named(x_train, feature_names)
        net, _, epochs = fit_nncox(
            x_train,
            d_train,
            e_train,
            seed=split_seed,
            hidden=int(hp.get("hidden", DEFAULT_HIDDEN)),
            rate=float(hp.get("rate", DEFAULT_RATE)),
            epochs=int(hp.get("epochs", DEFAULT_EPOCHS)),
        )
        parameters = net.to_dict()
        converged, iterations = True, epochs
        risk_fn = net.risk

    c_index = None
    if len(holdout_idx) > 0:
        scores = np.asarray(risk_fn(x[holdout_idx]), dtype=float)
        c_index = concordance_index(
            [int(d) for d in durations[holdout_idx]],
            [int(e) for e in events[holdout_idx]],
            [float(s) for s in scores],
        )

    return FittedModel(
        model_id=_model_id(kind, feature_names, split_seed, len(records), train_fraction),
        kind=kind,
        feature_names=feature_names,
        parameters=parameters,
        c_index=c_index,
        train_fraction=train_fraction,
        converged=converged,
        iterations=iterations,
        split_seed=split_seed,
    )


def _reject_unknown(hp: dict, allowed: set[str]) -> None:
    unknown = set(hp) - allowed
    if unknown:
        raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")


def _check_variance_named(x: np.ndarray, feature_names) -> None:
    for j in range(x.shape[1]):
        if np.ptp(x[:, j]) == 0.0:
            raise ZeroVarianceError(feature_names[j])


def predict_risk(model: FittedModel, records: list[SurvivalRecord]) -> list[RiskScore]:
    """Score every record and rank 1..n descending; ties break on id.

    The returned list is in rank order (most at-risk first).
    """
    if not records:
        return []
    x = _feature_matrix(records, model.feature_names)
    if model.kind == "cox":
        beta = np.asarray(model.parameters["beta"], dtype=float)
        scores = x @ beta
    elif model.kind == "rsf":
        forest = RandomSurvivalForest.from_dict(model.parameters)
        scores = forest.predict_risk(x)
    else:
        net = NeuralCoxNet.from_dict(model.parameters)
        scores = net.risk(x)

    order = sorted(
        range(len(records)),
        key=lambda i: (-float(scores[i]), records[i].contributor_id),
    )
    return [
        RiskScore(
            contributor_id=records[i].contributor_id,
            score=float(scores[i]),
            rank=rank,
        )
        for rank, i in enumerate(order, start=1)
    ]


def model_to_dict(model: FittedModel) -> dict:
    return {
        "version": MODEL_DOC_VERSION,
        "model_id": model.model_id,
        "kind": model.kind,
        "feature_names": list(model.feature_names),
        "parameters": model.parameters,
        "c_index": model.c_index,
        "train_fraction": model.train_fraction,
        "converged": model.converged,
        "iterations": model.iterations,
        "split_seed": model.split_seed,
    }


def model_from_dict(obj: dict) -> FittedModel:
    if obj.get("version") != MODEL_DOC_VERSION:
        raise ValueError(f"unsupported model document version {obj.get('version')!r}")
    return FittedModel(
        model_id=obj["model_id"],
        kind=obj["kind"],
        feature_names=tuple(obj["feature_names"]),
        parameters=obj["parameters"],
        c_index=obj["c_index"],
        train_fraction=obj["train_fraction"],
        converged=obj["converged"],
        iterations=obj["iterations"],
        split_seed=obj["split_seed"],
    )
