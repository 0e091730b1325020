"""Per-topic binary relevance classifier.

Logistic regression fit by full-batch gradient descent from a zero
initialization, with optional minority-class oversampling to correct
label imbalance. Models are immutable after training, so topics can be
trained and scored concurrently without shared state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from .corpus import SparseVector
from .errors import ImbalanceError, NumericError
from .rng import child_rng

RELEVANT_THRESHOLD = 0.5  # p strictly above this counts as relevant


@dataclass(frozen=True)
class TrainConfig:
    l2_lambda: float = 1.0
    learning_rate: float = 0.1
    max_iters: int = 500
    grad_tolerance: float = 1e-6
    oversample: bool = True

    def __post_init__(self):
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.grad_tolerance <= 0:
            raise ValueError("grad_tolerance must be > 0")


@dataclass(frozen=True)
class LabeledItem:
    vector: SparseVector
    label: int


@dataclass
class LabeledSet:
    items: list[LabeledItem] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def add(self, vector: SparseVector, label: int) -> None:
        self.items.append(LabeledItem(vector, label))

    def labels(self) -> np.ndarray:
        return np.array([it.label for it in self.items], dtype=np.float64)

    def class_counts(self) -> tuple[int, int]:
        """(count of label 0, count of label 1)."""
        ones = sum(it.label for it in self.items)
        return len(self.items) - ones, ones

    def has_both_classes(self) -> bool:
        zeros, ones = self.class_counts()
        return zeros > 0 and ones > 0

    def to_matrix(self, dim: int) -> sparse.csr_matrix:
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for it in self.items:
            indices.extend(it.vector.indices.tolist())
            data.extend(it.vector.values.tolist())
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr)),
            shape=(len(self.items), dim),
        )


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    train_config: TrainConfig

    @property
    def dim(self) -> int:
        return len(self.weights)

    def to_json(self) -> dict:
        cfg = self.train_config
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "config": {
                "l2_lambda": cfg.l2_lambda,
                "learning_rate": cfg.learning_rate,
                "max_iters": cfg.max_iters,
                "grad_tolerance": cfg.grad_tolerance,
                "oversample": cfg.oversample,
            },
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh)
            fh.write("\n")

    @classmethod
    def from_json(cls, obj: dict) -> "LogisticModel":
        return cls(
            np.asarray(obj["weights"], dtype=np.float64),
            float(obj["bias"]),
            TrainConfig(**obj["config"]),
        )

    @classmethod
    def load(cls, path) -> "LogisticModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def oversample_indices(labels, rng_seed: int) -> list[int]:
    """Positions of the items to append so the class counts equalize.

    Whole passes over the minority positions come first, then a uniform
    sample (without replacement) covering the remainder.
    """
    labels = [int(l) for l in labels]
    ones = sum(labels)
    zeros = len(labels) - ones
    if zeros == 0 or ones == 0:
        raise ImbalanceError("cannot rebalance a single-class labeled set")
    if zeros == ones:
        return []
    minority_label = 1 if ones < zeros else 0
    minority = [i for i, l in enumerate(labels) if l == minority_label]
    deficit = abs(zeros - ones)
    full_passes, remainder = divmod(deficit, len(minority))
    extra = minority * full_passes
    if remainder:
        rng = child_rng(rng_seed, "oversample")
        picks = rng.choice(len(minority), size=remainder, replace=False)
        extra.extend(minority[i] for i in sorted(picks.tolist()))
    return extra


def oversample(data: LabeledSet, rng_seed: int) -> LabeledSet:
    """Duplicate minority-class items until the class counts are equal.

    Originals keep their order; duplicates are appended per
    :func:`oversample_indices`.
    """
    extra = oversample_indices([it.label for it in data.items], rng_seed)
    return LabeledSet(list(data.items) + [data.items[i] for i in extra])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grad(
    weights: np.ndarray,
    bias: float,
    X,
    y: np.ndarray,
    l2_lambda: float,
) -> tuple[float, np.ndarray, float]:
    """Mean-scaled regularized logistic loss and its exact gradient.

    J = (1/n) [ sum_i log(1 + exp(-s_i z_i)) + (lambda/2) ||w||^2 ]
    with z = Xw + b and s = +/-1 from y; the bias is not penalized.
    ``X`` may be a scipy sparse matrix or a dense ndarray.
    """
    n = X.shape[0]
    z = np.asarray(X @ weights).ravel() + bias
    # log(1 + e^z) - y z, computed stably
    losses = np.logaddexp(0.0, z) - y * z
    loss = (losses.sum() + 0.5 * l2_lambda * float(weights @ weights)) / n
    residual = _sigmoid(z) - y
    grad_w = (X.T @ residual + l2_lambda * weights) / n
    grad_b = float(residual.sum()) / n
    return float(loss), np.asarray(grad_w).ravel(), grad_b


def fit_matrix(
    X,
    y: np.ndarray,
    config: TrainConfig,
    track_loss: bool = False,
) -> LogisticModel | tuple[LogisticModel, list[float]]:
    """Fit by full-batch gradient descent from theta = 0.

    Deterministic given the row order and config. Stops when the
    infinity norm of the gradient (weights and bias jointly) falls below
    ``grad_tolerance`` or after ``max_iters`` steps. ``X`` may be sparse
    or dense.
    """
    y = np.asarray(y, dtype=np.float64)
    if not (0 < y.sum() < len(y)):
        raise ImbalanceError("training requires at least one example of each class")
    dim = X.shape[1]
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    history: list[float] = []
    for _ in range(config.max_iters):
        loss, grad_w, grad_b = loss_and_grad(w, b, X, y, config.l2_lambda)
        if not np.isfinite(loss):
            raise NumericError("non-finite training loss")
        if track_loss:
            history.append(loss)
        grad_inf = float(np.max(np.abs(grad_w))) if dim else 0.0
        if max(grad_inf, abs(grad_b)) < config.grad_tolerance:
            break
        w -= config.learning_rate * grad_w
        b -= config.learning_rate * grad_b
    w.setflags(write=False)
    model = LogisticModel(w, b, config)
    if track_loss:
        final_loss, _, _ = loss_and_grad(w, b, X, y, config.l2_lambda)
        history.append(float(final_loss))
        return model, history
    return model


def train(
    data: LabeledSet,
    config: TrainConfig,
    dim: int,
    track_loss: bool = False,
) -> LogisticModel | tuple[LogisticModel, list[float]]:
    """Fit a labeled set; see :func:`fit_matrix` for the optimizer."""
    return fit_matrix(data.to_matrix(dim), data.labels(), config, track_loss)


def train_balanced(
    data: LabeledSet, config: TrainConfig, dim: int, rng_seed: int
) -> LogisticModel:
    """Train after the configured imbalance correction.

    Oversampling is re-derived from the current labeled set on every
    call, never accumulated across calls.
    """
    if config.oversample:
        data = oversample(data, rng_seed)
    return train(data, config, dim)


def predict_proba(model: LogisticModel, x: SparseVector) -> float:
    """P(relevant | x) = sigmoid(w . x + bias)."""
    z = x.dot_dense(model.weights) + model.bias
    return float(_sigmoid(np.array([z]))[0])


def predict_proba_matrix(model: LogisticModel, X) -> np.ndarray:
    """Row-wise P(relevant | x) for a stacked document matrix (sparse or dense)."""
    if X.shape[1] != model.dim:
        raise ValueError(f"matrix dim {X.shape[1]} != model dim {model.dim}")
    return _sigmoid(np.asarray(X @ model.weights).ravel() + model.bias)


def classify(p: float) -> int:
    """Hybrid-label threshold: strictly above 0.5 is relevant."""
    return 1 if p > RELEVANT_THRESHOLD else 0


def flipped(model: LogisticModel) -> LogisticModel:
    """Model of the complementary class: probabilities become 1 - p."""
    return replace(model, weights=-model.weights, bias=-model.bias)
