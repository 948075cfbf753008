"""Linear softmax probe over propagated features.

Deliberately small: full-batch gradient descent on cross-entropy with L2,
deterministic for a fixed seed, so classification quality differences can be
attributed to the propagation stage and not the classifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .graph import SparseGraph, degrees

__all__ = [
    "ProbeConfig",
    "SplitSpec",
    "TrainedProbe",
    "DegreeGroupReport",
    "probe_loss_and_grad",
    "train_probe",
    "predict",
    "evaluate",
    "degree_group_report",
]


@dataclass
class ProbeConfig:
    learning_rate: float = 0.1
    epochs: int = 300
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValidationError("epochs must be at least 1")
        if self.l2 < 0:
            raise ValidationError("l2 must be non-negative")


@dataclass
class SplitSpec:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        self.train = np.asarray(self.train, dtype=np.int64)
        self.val = np.asarray(self.val, dtype=np.int64)
        self.test = np.asarray(self.test, dtype=np.int64)
        if len(self.train) == 0:
            raise ValidationError("train set must be non-empty")
        pools = np.concatenate([self.train, self.val, self.test])
        if len(np.unique(pools)) != len(pools):
            raise ValidationError("train/val/test sets must be pairwise disjoint")


@dataclass
class TrainedProbe:
    weights: np.ndarray  # (classes, features)
    train_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def probe_loss_and_grad(
    w: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy + (l2/2)*||W||^2 and its analytic gradient."""
    probs = _softmax(x @ w.T)
    n = len(y)
    loss = float(-np.log(probs[np.arange(n), y] + 1e-300).mean() + 0.5 * l2 * (w**2).sum())
    probs[np.arange(n), y] -= 1.0
    grad = probs.T @ x / n + l2 * w
    return loss, grad


def train_probe(
    x: np.ndarray, labels: np.ndarray, split: SplitSpec, cfg: ProbeConfig
) -> TrainedProbe:
    """Full-batch gradient descent; log carries per-epoch loss and val accuracy."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if x.shape[0] < max(split.train.max(initial=-1), split.val.max(initial=-1), split.test.max(initial=-1)) + 1:
        raise ValidationError("feature matrix does not cover all split node ids")
    for name, ids in (("train", split.train), ("val", split.val), ("test", split.test)):
        if len(ids) and labels[ids].min() < 0:
            raise ValidationError(f"{name} set contains unlabeled nodes")
    classes = int(labels.max()) + 1
    if classes < 1:
        raise ValidationError("need at least one labeled class")

    x_tr = x[split.train]
    y_tr = labels[split.train]
    rng = np.random.default_rng(cfg.seed)
    w = 0.01 * rng.standard_normal((classes, x.shape[1]))

    log = TrainedProbe(weights=w)
    for _ in range(cfg.epochs):
        loss, grad = probe_loss_and_grad(w, x_tr, y_tr, cfg.l2)
        w = w - cfg.learning_rate * grad
        log.train_loss.append(loss)
        if len(split.val):
            log.val_accuracy.append(evaluate(w, x, labels, split.val))
    log.weights = w
    return log


def predict(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties resolve to the lower class id."""
    return np.argmax(x @ w.T, axis=1)


def evaluate(w: np.ndarray, x: np.ndarray, labels: np.ndarray, node_set) -> float:
    node_set = np.asarray(node_set, dtype=np.int64)
    if len(node_set) == 0:
        raise ValidationError("evaluation node set must be non-empty")
    preds = predict(w, np.asarray(x, dtype=np.float64)[node_set])
    return float((preds == np.asarray(labels)[node_set]).mean())


@dataclass
class DegreeGroupReport:
    """Accuracy split into low-degree (deg <= threshold) and high-degree groups."""

    threshold: float
    low_size: int
    high_size: int
    low_accuracy: float | None
    high_accuracy: float | None


def degree_group_report(
    predictions: np.ndarray,
    labels: np.ndarray,
    g: SparseGraph,
    threshold_deg: float,
    node_ids=None,
) -> DegreeGroupReport:
    """Per-group accuracy over ``node_ids`` (default: all labeled nodes).

    Grouping uses the degrees of ``g``, which callers should pass as the
    original pre-mask graph.  An empty group is reported as absent, not an
    error.
    """
    if threshold_deg < 0:
        raise ValidationError("degree threshold must be non-negative")
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    d = degrees(g).values
    if node_ids is None:
        node_ids = np.flatnonzero(labels >= 0)
    node_ids = np.asarray(node_ids, dtype=np.int64)
    low = node_ids[d[node_ids] <= threshold_deg]
    high = node_ids[d[node_ids] > threshold_deg]

    def acc(ids: np.ndarray) -> float | None:
        if len(ids) == 0:
            return None
        return float((predictions[ids] == labels[ids]).mean())

    return DegreeGroupReport(
        threshold=threshold_deg,
        low_size=len(low),
        high_size=len(high),
        low_accuracy=acc(low),
        high_accuracy=acc(high),
    )
