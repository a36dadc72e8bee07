"""Softmax classifier (optional single tanh hidden layer) over fixed features.

Provides the predictive distributions, encodings, and last-layer gradient
embeddings consumed by the acquisition strategies. Training is plain
mini-batch gradient descent on cross-entropy plus an L2 weight penalty,
with periodic validation evaluations; the returned model is the checkpoint
with the lowest validation cross-entropy (earliest wins on ties).

All arithmetic runs in float64; parameters are float64 throughout. Training
is bit-deterministic given (config.seed, data).
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .dataset import FeatureMatrix, load_feature_matrix, write_feature_matrix
from .errors import ConfigError, NumericalError, ShapeError, ValidationError


@dataclass
class ClassifierConfig:
    """Training hyperparameters. ``hidden_dim=0`` means a linear model."""

    hidden_dim: int = 0
    learning_rate: float = 0.1
    epochs: int = 30
    batch_size: int = 32
    evals_per_epoch: int = 5
    l2_penalty: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.evals_per_epoch < 1:
            raise ValidationError(f"evals_per_epoch must be >= 1, got {self.evals_per_epoch}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.hidden_dim < 0:
            raise ValidationError(f"hidden_dim must be >= 0, got {self.hidden_dim}")
        if self.l2_penalty < 0:
            raise ValidationError(f"l2_penalty must be >= 0, got {self.l2_penalty}")


class Classifier:
    """Trained parameters plus bookkeeping from checkpoint selection.

    ``eval_history`` holds (global_batch_step, validation_ce) pairs for every
    scheduled evaluation; ``val_loss`` is the minimum of that sequence and
    belongs to the parameters stored here.
    """

    def __init__(self, W_out, b_out, W_hid, b_hid, C, input_dim, config,
                 val_loss=math.nan, eval_history=()):
        self.W_out = np.asarray(W_out, dtype=np.float64)
        self.b_out = np.asarray(b_out, dtype=np.float64)
        self.W_hid = None if W_hid is None else np.asarray(W_hid, dtype=np.float64)
        self.b_hid = None if b_hid is None else np.asarray(b_hid, dtype=np.float64)
        self.C = int(C)
        self.input_dim = int(input_dim)
        self.config = config
        self.val_loss = float(val_loss)
        self.eval_history = list(eval_history)

    @property
    def hidden_dim(self) -> int:
        return 0 if self.W_hid is None else self.W_hid.shape[0]


def _as_array(features) -> np.ndarray:
    values = features.values if isinstance(features, FeatureMatrix) else features
    return np.asarray(values, dtype=np.float64)


def _check_dim(model: Classifier, X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ShapeError(
            f"expected (*, {model.input_dim}) features, got {X.shape}"
        )


def _penultimate(model: Classifier, X: np.ndarray) -> np.ndarray:
    if model.W_hid is None:
        return X
    return np.tanh(X @ model.W_hid.T + model.b_hid)


def _logits(model: Classifier, X: np.ndarray) -> np.ndarray:
    return _penultimate(model, X) @ model.W_out.T + model.b_out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction stabilization."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict_proba(model: Classifier, features) -> np.ndarray:
    """Class probabilities, one row per input row, each summing to 1."""
    X = _as_array(features)
    _check_dim(model, X)
    return softmax(_logits(model, X))


def cross_entropy(model: Classifier, features, labels) -> float:
    """Mean cross-entropy in nats, computed from logits for stability."""
    X = _as_array(features)
    _check_dim(model, X)
    z = _logits(model, X)
    m = z.max(axis=1)
    lse = m + np.log(np.exp(z - m[:, None]).sum(axis=1))
    y = np.asarray(labels, dtype=np.int64)
    return float(np.mean(lse - z[np.arange(len(y)), y]))


def loss_and_gradients(model: Classifier, features, labels):
    """Batch loss (CE + l2*sum of squared weights) and analytic gradients.

    Returns (loss, grads) with grads keyed ``W_out``, ``b_out`` and, for a
    hidden model, ``W_hid``, ``b_hid``. Biases carry no penalty.
    """
    X = _as_array(features)
    _check_dim(model, X)
    y = np.asarray(labels, dtype=np.int64)
    n = X.shape[0]
    l2 = model.config.l2_penalty if model.config is not None else 0.0

    # overflow to inf is tolerated here; train() aborts on non-finite loss
    with np.errstate(over="ignore"):
        H = _penultimate(model, X)
        Z = H @ model.W_out.T + model.b_out
        P = softmax(Z)
        m = Z.max(axis=1)
        lse = m + np.log(np.exp(Z - m[:, None]).sum(axis=1))
        loss = float(np.mean(lse - Z[np.arange(n), y]))
        loss += l2 * float(np.sum(model.W_out**2))

        D = P.copy()
        D[np.arange(n), y] -= 1.0
        D /= n
        grads = {
            "W_out": D.T @ H + 2.0 * l2 * model.W_out,
            "b_out": D.sum(axis=0),
        }
        if model.W_hid is not None:
            loss += l2 * float(np.sum(model.W_hid**2))
            dH = D @ model.W_out
            dA = dH * (1.0 - H**2)  # tanh'
            grads["W_hid"] = dA.T @ X + 2.0 * l2 * model.W_hid
            grads["b_hid"] = dA.sum(axis=0)
    return loss, grads


def _eval_schedule(n_batches: int, evals_per_epoch: int) -> list[int]:
    # 1-based batch indices after which validation runs; always hits the
    # end of the epoch so the final parameters are among the checkpoints.
    return sorted({math.ceil(n_batches * j / evals_per_epoch) for j in range(1, evals_per_epoch + 1)})


def train(features, labels, val_features, val_labels, config: ClassifierConfig,
          n_classes: int | None = None) -> Classifier:
    """Fit by mini-batch gradient descent and return the best-validation checkpoint.

    Every class in [0, C) must appear among the training labels; the
    validation set must be non-empty. Raises NumericalError if the loss goes
    non-finite mid-training.
    """
    X = _as_array(features)
    Xval = _as_array(val_features)
    y = np.asarray(labels, dtype=np.int64)
    yval = np.asarray(val_labels, dtype=np.int64)
    if X.ndim != 2:
        raise ShapeError(f"training features must be 2-D, got {X.shape}")
    if len(y) != X.shape[0] or len(yval) != Xval.shape[0]:
        raise ShapeError("labels misaligned with feature rows")
    if Xval.shape[0] == 0:
        raise ValidationError("validation set is empty")
    C = int(n_classes) if n_classes is not None else int(max(y.max(), yval.max())) + 1
    present = np.unique(y)
    missing = sorted(set(range(C)) - set(present.tolist()))
    if missing:
        raise ValidationError(f"classes {missing} missing from training rows")

    d = X.shape[1]
    h = config.hidden_dim
    rng = np.random.default_rng(config.seed)
    if h > 0:
        W_hid = rng.normal(0.0, 1.0 / math.sqrt(d), size=(h, d))
        b_hid = np.zeros(h)
        W_out = rng.normal(0.0, 1.0 / math.sqrt(h), size=(C, h))
    else:
        W_hid = b_hid = None
        W_out = rng.normal(0.0, 1.0 / math.sqrt(d), size=(C, d))
    b_out = np.zeros(C)
    model = Classifier(W_out, b_out, W_hid, b_hid, C, d, config)

    n = X.shape[0]
    n_batches = math.ceil(n / config.batch_size)
    schedule = set(_eval_schedule(n_batches, config.evals_per_epoch))
    lr = config.learning_rate

    best_loss = math.inf
    best_params = None
    history = []
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for b in range(n_batches):
            rows = order[b * config.batch_size:(b + 1) * config.batch_size]
            loss, grads = loss_and_gradients(model, X[rows], y[rows])
            if not math.isfinite(loss):
                raise NumericalError(
                    f"non-finite training loss at epoch {epoch}, batch {b}"
                )
            model.W_out -= lr * grads["W_out"]
            model.b_out -= lr * grads["b_out"]
            if model.W_hid is not None:
                model.W_hid -= lr * grads["W_hid"]
                model.b_hid -= lr * grads["b_hid"]
            step += 1
            if (b + 1) in schedule:
                val_ce = cross_entropy(model, Xval, yval)
                if not math.isfinite(val_ce):
                    raise NumericalError(
                        f"non-finite validation loss at epoch {epoch}, batch {b}"
                    )
                history.append((step, val_ce))
                if val_ce < best_loss:  # strict: earliest checkpoint wins ties
                    best_loss = val_ce
                    best_params = (
                        model.W_out.copy(), model.b_out.copy(),
                        None if model.W_hid is None else model.W_hid.copy(),
                        None if model.b_hid is None else model.b_hid.copy(),
                    )

    W_out, b_out, W_hid, b_hid = best_params
    return Classifier(W_out, b_out, W_hid, b_hid, C, d, config,
                      val_loss=best_loss, eval_history=history)


def accuracy(model: Classifier, features, labels) -> float:
    """Fraction of rows whose argmax prediction matches the gold label."""
    probs = predict_proba(model, features)
    y = np.asarray(labels, dtype=np.int64)
    return float(np.mean(np.argmax(probs, axis=1) == y))


def encode(model: Classifier, features: FeatureMatrix, space: str,
           spaces: dict[str, FeatureMatrix] | None = None) -> FeatureMatrix:
    """Resolve an encoding selector to the feature matrix used for KNN/k-means.

    Selectors: ``model`` (hidden activation; identity for a linear model),
    ``input`` (the features as given), ``external:<name>`` (a registered
    matrix from ``spaces``, subset to the input rows in their order).
    """
    if space == "input":
        return features
    if space == "model":
        if model.W_hid is None:
            return features
        H = np.tanh(_as_array(features) @ model.W_hid.T + model.b_hid)
        return FeatureMatrix(H, features.row_ids)
    if space.startswith("external:"):
        name = space.split(":", 1)[1]
        if not spaces or name not in spaces:
            raise ConfigError(f"no registered feature space named {name!r}")
        return spaces[name].subset(features.row_ids)
    raise ConfigError(f"unknown encoding selector {space!r}")


def gradient_embedding(model: Classifier, features) -> FeatureMatrix:
    """Last-layer cross-entropy gradients at the argmax (hallucinated) label.

    For each row, g = vec((p - e_yhat) outer h~) where h~ is the penultimate
    representation with a constant-1 bias feature appended, laid out
    class-major. Output dimension is C * (h + 1).
    """
    if isinstance(features, FeatureMatrix):
        ids = features.row_ids
    else:
        ids = [str(i) for i in range(np.asarray(features).shape[0])]
    X = _as_array(features)
    _check_dim(model, X)
    P = softmax(_logits(model, X))
    H = _penultimate(model, X)
    Hb = np.concatenate([H, np.ones((H.shape[0], 1))], axis=1)
    yhat = np.argmax(P, axis=1)  # ties: lowest class index
    D = P.copy()
    D[np.arange(len(yhat)), yhat] -= 1.0
    G = D[:, :, None] * Hb[:, None, :]
    return FeatureMatrix(G.reshape(X.shape[0], -1), ids)


def save_checkpoint(model: Classifier, prefix) -> None:
    """Debug serialization: a JSON header plus one FMAT file per parameter."""
    header = {
        "kind": "alsim-classifier",
        "C": model.C,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "val_loss": model.val_loss,
        "config": asdict(model.config) if model.config is not None else None,
    }
    with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
        json.dump(header, fh, indent=2)
    parts = {"W_out": model.W_out, "b_out": model.b_out[None, :]}
    if model.W_hid is not None:
        parts["W_hid"] = model.W_hid
        parts["b_hid"] = model.b_hid[None, :]
    for name, arr in parts.items():
        ids = [f"r{i}" for i in range(arr.shape[0])]
        write_feature_matrix(FeatureMatrix(arr, ids), f"{prefix}.{name}.fmat")


def load_checkpoint(prefix) -> Classifier:
    with open(f"{prefix}.json", "r", encoding="utf-8") as fh:
        header = json.load(fh)
    if header.get("kind") != "alsim-classifier":
        raise ConfigError(f"{prefix}.json is not a classifier checkpoint")

    def part(name):
        return load_feature_matrix(f"{prefix}.{name}.fmat").values.astype(np.float64)

    W_out = part("W_out")
    b_out = part("b_out")[0]
    W_hid = b_hid = None
    if header["hidden_dim"] > 0:
        W_hid = part("W_hid")
        b_hid = part("b_hid")[0]
    config = ClassifierConfig(**header["config"]) if header.get("config") else None
    return Classifier(W_out, b_out, W_hid, b_hid, header["C"], header["input_dim"],
                      config, val_loss=header.get("val_loss", math.nan))
