"""Logistic regression and linear SVM trained with mini-batch SGD, plus
stratified k-fold cross-validation and grid search.

Both losses are L2-regularized and optimized with seeded shuffling and a
fixed epoch count, so one (matrix, kind, hyperparams) triple always yields
the same model. Only the dense feature block is standardized; lexicon flags
stay raw 0/1 so scale never washes them out. Trained models carry the
lexicon fingerprint of their feature matrix and refuse stale features.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import FingerprintMismatch, InputError
from .features import FeatureMatrix, FeatureVector
from .metrics import HATE, NORMAL, EvaluationReport, evaluate

LOGISTIC = "logistic"
LINEAR_SVM = "linear-svm"
KINDS = (LOGISTIC, LINEAR_SVM)


@dataclass(frozen=True)
class Hyperparams:
    l2_lambda: float = 1e-4
    learning_rate: float = 0.1
    epochs: int = 50
    seed: int = 0
    batch_size: int = 32


DEFAULT_GRID = [
    Hyperparams(l2_lambda=lam, learning_rate=lr)
    for lam in (1e-4, 1e-2, 1.0)
    for lr in (0.1, 0.01)
]


@dataclass
class Standardization:
    """Per-feature shift/scale for the dense block; flags pass through."""

    n_flags: int
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        out = X.astype(np.float64).copy()
        out[:, self.n_flags:] = (out[:, self.n_flags:] - self.mean) / self.scale
        return out


@dataclass
class TrainingReport:
    final_loss: float
    loss_curve: list[float]


@dataclass
class LinearModel:
    kind: str
    weights: np.ndarray
    bias: float
    lexicon_fingerprint: str
    hyperparams: Hyperparams
    standardization: Standardization
    training_report: TrainingReport


def _to_signed(labels: list[str]) -> np.ndarray:
    y = np.empty(len(labels), dtype=np.float64)
    for i, label in enumerate(labels):
        if label == HATE:
            y[i] = 1.0
        elif label == NORMAL:
            y[i] = -1.0
        else:
            raise ValueError(f"unknown label {label!r}")
    return y


def logistic_loss_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray,
                       l2_lambda: float) -> tuple[float, np.ndarray, float]:
    """Mean log-loss over {-1,+1} targets plus 0.5*lambda*||w||^2.

    Stable via logaddexp; bias is unregularized.
    """
    z = y * (X @ w + b)
    loss = float(np.mean(np.logaddexp(0.0, -z)) + 0.5 * l2_lambda * np.dot(w, w))
    # d/dz log(1+e^-z) = -sigmoid(-z)
    coeff = -y * _sigmoid(-z) / len(y)
    grad_w = X.T @ coeff + l2_lambda * w
    grad_b = float(np.sum(coeff))
    return loss, grad_w, grad_b


def hinge_loss_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray,
                    l2_lambda: float) -> tuple[float, np.ndarray, float]:
    """Mean hinge loss plus 0.5*lambda*||w||^2.

    At the kink (margin exactly 1) the zero branch is used, so the
    subgradient there has no data term.
    """
    margins = y * (X @ w + b)
    active = margins < 1.0
    loss = float(np.mean(np.maximum(0.0, 1.0 - margins)) + 0.5 * l2_lambda * np.dot(w, w))
    coeff = np.where(active, -y, 0.0) / len(y)
    grad_w = X.T @ coeff + l2_lambda * w
    grad_b = float(np.sum(coeff))
    return loss, grad_w, grad_b


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


_LOSSES = {LOGISTIC: logistic_loss_grad, LINEAR_SVM: hinge_loss_grad}


def train(matrix: FeatureMatrix, kind: str, hyperparams: Hyperparams | None = None
          ) -> LinearModel:
    """Mini-batch SGD from zero weights; deterministic for a fixed seed.

    The data term takes a plain gradient step; the L2 term is applied as the
    closed-form proximal shrinkage w/(1 + lr*lambda), which stays stable for
    any lambda (a plain gradient step diverges once lr*lambda > 2). Requires
    at least two examples of each class and finite features. The recorded
    loss curve is the per-epoch mean of mini-batch objectives.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    hp = hyperparams or Hyperparams()
    if hp.learning_rate <= 0 or hp.l2_lambda < 0 or hp.epochs < 1 or hp.batch_size < 1:
        raise ValueError(f"invalid hyperparams: {hp}")
    if matrix.labels is None:
        raise InputError("training needs a labeled feature matrix")
    y = _to_signed(matrix.labels)
    if np.sum(y > 0) < 2 or np.sum(y < 0) < 2:
        raise ValueError("need at least 2 examples of each class")

    X_raw = matrix.X
    bad = np.where(~np.isfinite(X_raw).all(axis=1))[0]
    if bad.size:
        raise ValueError(f"non-finite features in row {int(bad[0])}")

    n_flags = len(matrix.terms)
    dense = X_raw[:, n_flags:]
    mean = dense.mean(axis=0)
    var = dense.var(axis=0)
    scale = np.sqrt(var)
    scale[scale == 0.0] = 1.0
    standardization = Standardization(n_flags=n_flags, mean=mean, scale=scale)
    X = standardization.apply(X_raw)

    loss_grad = _LOSSES[kind]
    rng = np.random.default_rng(hp.seed)
    n, d = X.shape
    w = np.zeros(d, dtype=np.float64)
    b = 0.0
    curve: list[float] = []
    shrink = 1.0 + hp.learning_rate * hp.l2_lambda
    for _ in range(hp.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, hp.batch_size):
            idx = order[start:start + hp.batch_size]
            loss, gw, gb = loss_grad(w, b, X[idx], y[idx], 0.0)
            epoch_losses.append(loss + 0.5 * hp.l2_lambda * float(np.dot(w, w)))
            w -= hp.learning_rate * gw
            b -= hp.learning_rate * gb
            w /= shrink
        curve.append(float(np.mean(epoch_losses)))

    final_loss, _, _ = loss_grad(w, b, X, y, hp.l2_lambda)
    return LinearModel(kind=kind, weights=w, bias=b,
                       lexicon_fingerprint=matrix.lexicon_fingerprint,
                       hyperparams=hp, standardization=standardization,
                       training_report=TrainingReport(final_loss, curve))


def _features_of(features: "FeatureMatrix | FeatureVector | np.ndarray",
                 model: LinearModel) -> np.ndarray:
    if isinstance(features, FeatureMatrix):
        if features.lexicon_fingerprint != model.lexicon_fingerprint:
            raise FingerprintMismatch(
                f"features fingerprint {features.lexicon_fingerprint} != model "
                f"fingerprint {model.lexicon_fingerprint}; re-run featurize or retrain")
        X = features.X
    elif isinstance(features, FeatureVector):
        X = features.values.reshape(1, -1)
    else:
        X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if X.shape[1] != model.weights.size:
        raise ValueError(f"feature length {X.shape[1]} != model weights "
                         f"{model.weights.size}")
    return model.standardization.apply(X)


def predict_score(model: LinearModel, features) -> np.ndarray:
    """Logistic: sigmoid probability of hate in (0,1). SVM: signed margin."""
    X = _features_of(features, model)
    raw = X @ model.weights + model.bias
    if model.kind == LOGISTIC:
        return _sigmoid(raw)
    return raw


def predict(model: LinearModel, features) -> list[str]:
    scores = predict_score(model, features)
    cut = 0.5 if model.kind == LOGISTIC else 0.0
    return [HATE if s >= cut else NORMAL for s in scores]


def stratified_folds(labels: list[str], k: int = 10, seed: int = 0) -> np.ndarray:
    """Fold id per sample; per-class counts within 1 of proportional.

    Each class's shuffled members are dealt floor(n_c/k) per fold, with the
    remainder going to the currently smallest folds, which also balances
    total fold sizes. A class scarcer than k simply lands in a subset of the
    folds (counts 0 or 1), still within 1 of its proportional share.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > len(labels):
        raise ValueError(f"k={k} exceeds the sample count {len(labels)}")
    by_class: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)

    rng = np.random.default_rng(seed)
    assignment = np.empty(len(labels), dtype=np.int64)
    load = np.zeros(k, dtype=np.int64)
    for cls in sorted(by_class):
        idx = np.array(by_class[cls])
        idx = idx[rng.permutation(len(idx))]
        base, extra = divmod(len(idx), k)
        counts = np.full(k, base, dtype=np.int64)
        if extra:
            receivers = np.lexsort((np.arange(k), load))[:extra]
            counts[receivers] += 1
        pos = 0
        for fold in range(k):
            take = counts[fold]
            assignment[idx[pos:pos + take]] = fold
            pos += take
        load += counts
    return assignment


@dataclass
class CVReport:
    k: int
    fold_reports: list[EvaluationReport]
    mean_accuracy: float
    std_accuracy: float
    mean_macro_f1: float
    std_macro_f1: float
    pooled_accuracy: float

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "mean_macro_f1": self.mean_macro_f1,
            "std_macro_f1": self.std_macro_f1,
            "pooled_accuracy": self.pooled_accuracy,
            "folds": [r.to_dict() for r in self.fold_reports],
        }


def _submatrix(matrix: FeatureMatrix, idx: np.ndarray) -> FeatureMatrix:
    return FeatureMatrix(
        terms=matrix.terms,
        flags=matrix.flags[idx],
        dense=matrix.dense[idx],
        lexicon_fingerprint=matrix.lexicon_fingerprint,
        labels=[matrix.labels[i] for i in idx] if matrix.labels is not None else None,
        ids=[matrix.ids[i] for i in idx] if matrix.ids is not None else None,
    )


def cross_validate(matrix: FeatureMatrix, kind: str, hyperparams: Hyperparams,
                   k: int = 10, seed: int = 0) -> CVReport:
    """Stratified k-fold CV; both fold-mean and pooled accuracy reported."""
    if matrix.labels is None:
        raise InputError("cross-validation needs labels")
    folds = stratified_folds(matrix.labels, k=k, seed=seed)
    reports: list[EvaluationReport] = []
    pooled_correct = 0
    for fold in range(k):
        test_idx = np.where(folds == fold)[0]
        train_idx = np.where(folds != fold)[0]
        model = train(_submatrix(matrix, train_idx), kind, hyperparams)
        preds = predict(model, _submatrix(matrix, test_idx))
        gold = [matrix.labels[i] for i in test_idx]
        report = evaluate(preds, gold)
        pooled_correct += report.tp + report.tn
        reports.append(report)
    accs = np.array([r.accuracy for r in reports])
    f1s = np.array([r.macro_f1 for r in reports])
    return CVReport(k=k, fold_reports=reports,
                    mean_accuracy=float(accs.mean()), std_accuracy=float(accs.std()),
                    mean_macro_f1=float(f1s.mean()), std_macro_f1=float(f1s.std()),
                    pooled_accuracy=pooled_correct / matrix.n)


@dataclass
class GridPointResult:
    hyperparams: Hyperparams
    report: CVReport | None = None
    error: str | None = None


def grid_search(matrix: FeatureMatrix, kind: str, grid: list[Hyperparams],
                k: int = 10, seed: int = 0) -> tuple[Hyperparams, list[GridPointResult]]:
    """Best grid point by mean macro-F1; ties prefer lower l2_lambda, then
    lower learning rate. Failed points are recorded, not fatal, unless all
    points fail."""
    if not grid:
        raise ValueError("grid must not be empty")
    results: list[GridPointResult] = []
    for hp in grid:
        try:
            results.append(GridPointResult(hp, report=cross_validate(matrix, kind, hp, k, seed)))
        except (ValueError, InputError) as exc:
            results.append(GridPointResult(hp, error=str(exc)))
    ok = [r for r in results if r.report is not None]
    if not ok:
        causes = "; ".join(f"{r.hyperparams}: {r.error}" for r in results)
        raise InputError(f"every grid point failed: {causes}")
    best = max(ok, key=lambda r: (r.report.mean_macro_f1,
                                  -r.hyperparams.l2_lambda,
                                  -r.hyperparams.learning_rate))
    return best.hyperparams, results


def save_model(model: LinearModel, path: str | Path) -> None:
    doc = {
        "kind": model.kind,
        "dims": int(model.weights.size - model.standardization.n_flags),
        "fingerprint": model.lexicon_fingerprint,
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "standardization": {
            "n_flags": model.standardization.n_flags,
            "mean": model.standardization.mean.tolist(),
            "scale": model.standardization.scale.tolist(),
        },
        "hyperparams": asdict(model.hyperparams),
        "training_report": {
            "final_loss": model.training_report.final_loss,
            "loss_curve": model.training_report.loss_curve,
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LinearModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read model {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid model JSON") from exc
    std = doc["standardization"]
    return LinearModel(
        kind=doc["kind"],
        weights=np.asarray(doc["weights"], dtype=np.float64),
        bias=float(doc["bias"]),
        lexicon_fingerprint=doc["fingerprint"],
        hyperparams=Hyperparams(**doc["hyperparams"]),
        standardization=Standardization(
            n_flags=int(std["n_flags"]),
            mean=np.asarray(std["mean"], dtype=np.float64),
            scale=np.asarray(std["scale"], dtype=np.float64),
        ),
        training_report=TrainingReport(
            final_loss=float(doc["training_report"]["final_loss"]),
            loss_curve=[float(x) for x in doc["training_report"]["loss_curve"]],
        ),
    )
