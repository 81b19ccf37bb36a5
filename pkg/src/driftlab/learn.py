"""Classifiers for the delay prediction task, trained per window: Gaussian /
categorical Naive Bayes, a random forest of CART trees, and a single-hidden-
layer MLP, plus confusion metrics and k-fold grid search.

All three are seeded and deterministic given (spec, rows). Categorical
features (origin airport, destination state, week number) are handled
natively: NB keeps a smoothed unknown bucket, forest splits route unseen
levels to the majority child, the MLP one-hot encodes with unseen levels as
the zero vector.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import Normalizer, apply_normalizer, fit_normalizer

log = logging.getLogger(__name__)

KIND_NB = "NB"
KIND_RF = "RF"
KIND_MLP = "MLP"
MODEL_KINDS = (KIND_NB, KIND_RF, KIND_MLP)
# Alias used in experiment grids/configs for the multilayer perceptron.
KIND_ALIASES = {"NN": KIND_MLP}

_VAR_FLOOR = 1e-9
_PROB_EPS = 1e-12

MODEL_FORMAT = "driftlab-model"
MODEL_FORMAT_VERSION = 1


def canonical_kind(kind: str) -> str:
    kind = kind.upper()
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    return kind


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    hyperparameters: dict
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        required = {
            KIND_NB: ("smoothing",),
            KIND_RF: ("trees_count", "predictors_per_split"),
            KIND_MLP: ("hidden_neurons", "learning_rate", "epochs"),
        }[self.kind]
        missing = [k for k in required if k not in self.hyperparameters]
        if missing:
            raise ValueError(f"{self.kind} spec is missing hyperparameters: {missing}")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    """accuracy, precision, recall, f1 in [0, 1]; a None field marks an
    undefined metric (zero denominator), never silently 0."""
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None


def confusion_from_predictions(y_true, y_pred) -> ConfusionCounts:
    yt = np.asarray(y_true, dtype=int)
    yp = np.asarray(y_pred, dtype=int)
    if yt.shape != yp.shape:
        raise ValueError("prediction/label length mismatch")
    return ConfusionCounts(
        tp=int(np.sum((yt == 1) & (yp == 1))),
        fp=int(np.sum((yt == 0) & (yp == 1))),
        fn=int(np.sum((yt == 1) & (yp == 0))),
        tn=int(np.sum((yt == 0) & (yp == 0))),
    )


def compute_metrics(c: ConfusionCounts) -> Metrics:
    """accuracy (TP+TN)/(P+N), precision TP/(TP+FP), recall TP/(TP+FN),
    f1 = 2PR/(P+R); precision/recall are undefined on empty denominators and
    f1 is undefined whenever either of them is. When both are defined and
    zero, f1 is reported as 0.0 (the 2TP/(2TP+FP+FN) limit)."""
    if c.total == 0:
        raise ValueError("cannot compute metrics on all-zero confusion counts")
    accuracy = (c.tp + c.tn) / c.total
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else None
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None
    if precision is None or recall is None:
        f1 = None
    elif precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return Metrics(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


# ---------------------------------------------------------------------------
# Feature extraction / encoding
# ---------------------------------------------------------------------------

CAT_COLUMNS = ("origin_airport", "destination_state", "week_of_year")


def _extract(rows) -> tuple[np.ndarray, list[list], np.ndarray]:
    numeric = (np.vstack([r.numeric_features for r in rows])
               if rows else np.zeros((0, 0)))
    cats = [[r.origin_airport for r in rows],
            [r.destination_state for r in rows],
            [r.week_of_year for r in rows]]
    y = np.array([r.delayed for r in rows], dtype=int)
    return numeric, cats, y


def _build_vocabs(cats) -> tuple[dict, ...]:
    return tuple({value: code for code, value in enumerate(sorted(set(col), key=str))}
                 for col in cats)


def _encode(cats, vocabs) -> np.ndarray:
    n = len(cats[0])
    codes = np.zeros((n, len(vocabs)), dtype=int)
    for j, (col, vocab) in enumerate(zip(cats, vocabs)):
        unknown = len(vocab)
        codes[:, j] = [vocab.get(v, unknown) for v in col]
    return codes


# ---------------------------------------------------------------------------
# Naive Bayes: Gaussian numerics + smoothed categorical tables
# ---------------------------------------------------------------------------

class NaiveBayes:
    def __init__(self, smoothing: float):
        self.smoothing = float(smoothing)
        self.classes: np.ndarray | None = None
        self.log_priors: np.ndarray | None = None
        self.means: np.ndarray | None = None
        self.variances: np.ndarray | None = None
        self.cat_log_probs: list[np.ndarray] = []

    def fit(self, numeric: np.ndarray, codes: np.ndarray, y: np.ndarray,
            vocab_sizes: list[int]) -> "NaiveBayes":
        self.classes, counts = np.unique(y, return_counts=True)
        self.log_priors = np.log(counts / y.size)
        n_classes = self.classes.size
        k = numeric.shape[1]
        self.means = np.zeros((n_classes, k))
        self.variances = np.ones((n_classes, k))
        self.cat_log_probs = []
        for ci, cls in enumerate(self.classes):
            sub = numeric[y == cls]
            if k:
                self.means[ci] = sub.mean(axis=0)
                self.variances[ci] = np.maximum(sub.var(axis=0), _VAR_FLOOR)
        for j, v_size in enumerate(vocab_sizes):
            # one extra bucket for levels unseen at fit time
            table = np.zeros((n_classes, v_size + 1))
            for ci, cls in enumerate(self.classes):
                col = codes[y == cls, j]
                table[ci] = np.bincount(col, minlength=v_size + 1)
            smoothed = table + self.smoothing
            self.cat_log_probs.append(np.log(smoothed / smoothed.sum(axis=1, keepdims=True)))
        return self

    def joint_log_likelihood(self, numeric: np.ndarray, codes: np.ndarray) -> np.ndarray:
        n = numeric.shape[0]
        jll = np.tile(self.log_priors, (n, 1))
        if numeric.shape[1]:
            for ci in range(self.classes.size):
                var = self.variances[ci]
                ll = -0.5 * (np.log(2.0 * math.pi * var)
                             + (numeric - self.means[ci]) ** 2 / var)
                jll[:, ci] += ll.sum(axis=1)
        for j, table in enumerate(self.cat_log_probs):
            col = np.minimum(codes[:, j], table.shape[1] - 1)
            jll += table[:, col].T
        return jll

    def predict(self, numeric: np.ndarray, codes: np.ndarray) -> np.ndarray:
        if numeric.shape[0] == 0:
            return np.zeros(0, dtype=int)
        jll = self.joint_log_likelihood(numeric, codes)
        return self.classes[np.argmax(jll, axis=1)]


# ---------------------------------------------------------------------------
# CART decision tree + random forest
# ---------------------------------------------------------------------------

def _gini_split_cost(n_left, pos_left, n_right, pos_right):
    """Total weighted Gini impurity of a candidate children pair (vectorized)."""
    n_left = np.asarray(n_left, dtype=float)
    n_right = np.asarray(n_right, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        pl = np.where(n_left > 0, pos_left / n_left, 0.0)
        pr = np.where(n_right > 0, pos_right / n_right, 0.0)
    gini_l = 2.0 * pl * (1.0 - pl)
    gini_r = 2.0 * pr * (1.0 - pr)
    return n_left * gini_l + n_right * gini_r


class DecisionTree:
    """Binary CART with Gini splits; numeric thresholds plus exact binary
    categorical subset splits via the positive-rate ordering trick."""

    def __init__(self, predictors_per_split: int, rng: np.random.Generator,
                 min_samples_split: int = 2, max_depth: int | None = None):
        self.mtry = predictors_per_split
        self.rng = rng
        self.min_samples_split = min_samples_split
        self.max_depth = max_depth
        self.root: dict | None = None

    def fit(self, numeric: np.ndarray, codes: np.ndarray, y: np.ndarray) -> "DecisionTree":
        self.n_numeric = numeric.shape[1]
        n_features = self.n_numeric + codes.shape[1]
        if self.mtry > n_features:
            raise ValueError(f"predictors_per_split {self.mtry} exceeds feature count {n_features}")
        self.root = self._grow(numeric, codes, y, depth=0)
        return self

    @staticmethod
    def _leaf(y: np.ndarray) -> dict:
        pos = int(y.sum())
        return {"leaf": int(2 * pos >= y.size)}

    def _grow(self, numeric, codes, y, depth) -> dict:
        n = y.size
        pos = int(y.sum())
        if pos == 0 or pos == n or n < self.min_samples_split or \
                (self.max_depth is not None and depth >= self.max_depth):
            return self._leaf(y)
        n_features = self.n_numeric + codes.shape[1]
        features = self.rng.choice(n_features, size=self.mtry, replace=False)
        best = None  # (cost, split dict, mask_left)
        for f in features:
            cand = (self._best_numeric_split(numeric, y, int(f)) if f < self.n_numeric
                    else self._best_categorical_split(codes, y, int(f - self.n_numeric)))
            if cand is not None and (best is None or cand[0] < best[0]):
                best = cand
        p1 = pos / n
        parent_cost = n * 2.0 * p1 * (1.0 - p1)
        if best is None or best[0] >= parent_cost:
            return self._leaf(y)
        cost, split, mask_left = best
        split["majority"] = "left" if int(mask_left.sum()) * 2 >= n else "right"
        split["left"] = self._grow(numeric[mask_left], codes[mask_left], y[mask_left], depth + 1)
        split["right"] = self._grow(numeric[~mask_left], codes[~mask_left], y[~mask_left], depth + 1)
        return split

    def _best_numeric_split(self, numeric, y, f):
        values = numeric[:, f]
        order = np.argsort(values, kind="mergesort")
        v = values[order]
        ys = y[order]
        distinct = np.nonzero(v[1:] > v[:-1])[0]  # split after position i
        if distinct.size == 0:
            return None
        n = v.size
        cum_pos = np.cumsum(ys)
        n_left = distinct + 1
        pos_left = cum_pos[distinct]
        cost = _gini_split_cost(n_left, pos_left, n - n_left, cum_pos[-1] - pos_left)
        i = int(np.argmin(cost))
        thr = 0.5 * (v[distinct[i]] + v[distinct[i] + 1])
        mask_left = values <= thr
        return float(cost[i]), {"kind": "num", "feature": f, "threshold": float(thr)}, mask_left

    def _best_categorical_split(self, codes, y, j):
        col = codes[:, j]
        levels, inverse = np.unique(col, return_inverse=True)
        if levels.size < 2:
            return None
        n_per = np.bincount(inverse)
        pos_per = np.bincount(inverse, weights=y)
        rate = pos_per / n_per
        order = np.argsort(rate, kind="mergesort")
        n_sorted = n_per[order]
        pos_sorted = pos_per[order]
        cum_n = np.cumsum(n_sorted)[:-1]
        cum_pos = np.cumsum(pos_sorted)[:-1]
        n = col.size
        total_pos = float(y.sum())
        cost = _gini_split_cost(cum_n, cum_pos, n - cum_n, total_pos - cum_pos)
        i = int(np.argmin(cost))
        left_levels = sorted(int(levels[k]) for k in order[:i + 1])
        right_levels = sorted(int(levels[k]) for k in order[i + 1:])
        mask_left = np.isin(col, left_levels)
        return (float(cost[i]),
                {"kind": "cat", "feature": j, "left_levels": left_levels,
                 "right_levels": right_levels},
                mask_left)

    def predict(self, numeric: np.ndarray, codes: np.ndarray) -> np.ndarray:
        out = np.zeros(numeric.shape[0], dtype=int)
        for i in range(numeric.shape[0]):
            out[i] = self._predict_one(self.root, numeric[i], codes[i])
        return out

    def _predict_one(self, node, x_num, x_cat) -> int:
        while "leaf" not in node:
            if node["kind"] == "num":
                go_left = x_num[node["feature"]] <= node["threshold"]
            else:
                code = int(x_cat[node["feature"]])
                if code in node["left_levels"]:
                    go_left = True
                elif code in node["right_levels"]:
                    go_left = False
                else:
                    # level unseen at this node during fit
                    go_left = node["majority"] == "left"
            node = node["left"] if go_left else node["right"]
        return node["leaf"]


class RandomForest:
    def __init__(self, trees_count: int, predictors_per_split: int, seed: int,
                 bootstrap: bool = True, min_samples_split: int = 2,
                 max_depth: int | None = None):
        self.trees_count = trees_count
        self.mtry = predictors_per_split
        self.seed = seed
        self.bootstrap = bootstrap
        self.min_samples_split = min_samples_split
        self.max_depth = max_depth
        self.trees: list[DecisionTree] = []

    def fit(self, numeric: np.ndarray, codes: np.ndarray, y: np.ndarray) -> "RandomForest":
        self.trees = []
        n = y.size
        for t in range(self.trees_count):
            rng = np.random.default_rng([self.seed, t])
            idx = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            tree = DecisionTree(self.mtry, rng, self.min_samples_split, self.max_depth)
            tree.fit(numeric[idx], codes[idx], y[idx])
            self.trees.append(tree)
        return self

    def predict(self, numeric: np.ndarray, codes: np.ndarray) -> np.ndarray:
        if numeric.shape[0] == 0:
            return np.zeros(0, dtype=int)
        votes = np.zeros(numeric.shape[0])
        for tree in self.trees:
            votes += tree.predict(numeric, codes)
        return (2 * votes >= len(self.trees)).astype(int)


# ---------------------------------------------------------------------------
# Multilayer perceptron (one logistic hidden layer, BCE, mini-batch GD)
# ---------------------------------------------------------------------------

def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


class MLP:
    def __init__(self, hidden_neurons: int, learning_rate: float, epochs: int,
                 seed: int, batch_size: int = 32):
        self.hidden = hidden_neurons
        self.lr = learning_rate
        self.epochs = epochs
        self.seed = seed
        self.batch_size = batch_size
        self.loss_history: list[float] = []
        self.W1 = self.b1 = self.W2 = self.b2 = None

    def _init_params(self, n_inputs: int, rng: np.random.Generator):
        self.W1 = rng.normal(0.0, 1.0 / math.sqrt(max(n_inputs, 1)), size=(n_inputs, self.hidden))
        self.b1 = np.zeros(self.hidden)
        self.W2 = rng.normal(0.0, 1.0 / math.sqrt(self.hidden), size=(self.hidden, 1))
        self.b2 = np.zeros(1)

    def _forward(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = _sigmoid(X @ self.W1 + self.b1)
        p = _sigmoid(h @ self.W2 + self.b2).ravel()
        return h, p

    def loss(self, X: np.ndarray, y: np.ndarray) -> float:
        _, p = self._forward(X)
        p = np.clip(p, _PROB_EPS, 1.0 - _PROB_EPS)
        return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))

    def loss_and_gradients(self, X: np.ndarray, y: np.ndarray):
        """Binary cross-entropy and its analytic gradients w.r.t. all four
        parameter arrays; exposed so the training loop and the
        finite-difference checks share one code path."""
        n = X.shape[0]
        h, p = self._forward(X)
        p_safe = np.clip(p, _PROB_EPS, 1.0 - _PROB_EPS)
        loss = float(-np.mean(y * np.log(p_safe) + (1.0 - y) * np.log(1.0 - p_safe)))
        delta_out = ((p - y) / n)[:, None]          # d loss / d z2
        grad_W2 = h.T @ delta_out
        grad_b2 = delta_out.sum(axis=0)
        delta_h = (delta_out @ self.W2.T) * h * (1.0 - h)
        grad_W1 = X.T @ delta_h
        grad_b1 = delta_h.sum(axis=0)
        return loss, {"W1": grad_W1, "b1": grad_b1, "W2": grad_W2, "b2": grad_b2}

    def fit(self, X: np.ndarray, y: np.ndarray) -> "MLP":
        rng = np.random.default_rng(self.seed)
        self._init_params(X.shape[1], rng)
        y = y.astype(float)
        n = X.shape[0]
        self.loss_history = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                _, grads = self.loss_and_gradients(X[batch], y[batch])
                self.W1 -= self.lr * grads["W1"]
                self.b1 -= self.lr * grads["b1"]
                self.W2 -= self.lr * grads["W2"]
                self.b2 -= self.lr * grads["b2"]
            self.loss_history.append(self.loss(X, y))
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if X.shape[0] == 0:
            return np.zeros(0, dtype=int)
        _, p = self._forward(X)
        return (p >= 0.5).astype(int)


def one_hot(codes: np.ndarray, vocab_sizes: list[int]) -> np.ndarray:
    """Concatenated one-hot blocks per categorical column; an unseen level
    (code == vocab size) encodes as the zero vector of its block."""
    n = codes.shape[0]
    blocks = []
    for j, v in enumerate(vocab_sizes):
        block = np.zeros((n, v))
        col = codes[:, j]
        seen = col < v
        block[np.nonzero(seen)[0], col[seen]] = 1.0
        blocks.append(block)
    return np.hstack(blocks) if blocks else np.zeros((n, 0))


# ---------------------------------------------------------------------------
# TrainedModel facade
# ---------------------------------------------------------------------------

@dataclass
class TrainedModel:
    spec: ModelSpec
    classifier: object
    normalizer: Normalizer
    vocabs: tuple[dict, ...]
    training_window: tuple[int, int] | None = None  # (end year, b)
    single_class: bool = False

    @property
    def vocab_sizes(self) -> list[int]:
        return [len(v) for v in self.vocabs]


def feature_count(rows) -> int:
    """Predictor count as seen by the forest: numeric features plus one per
    categorical column."""
    if not rows:
        raise ValueError("feature_count requires at least one row")
    return int(np.asarray(rows[0].numeric_features).size) + len(CAT_COLUMNS)


def train(spec: ModelSpec, rows, training_window: tuple[int, int] | None = None) -> TrainedModel:
    """Fit the spec'd classifier on the rows: refit the min-max normalizer
    on this window, encode categories from this window's vocabularies, then
    fit. Single-class windows are allowed but flagged (NB/RF degenerate to a
    constant predictor)."""
    rows = list(rows)
    if not rows:
        raise ValueError("train requires a non-empty training window")
    normalizer = fit_normalizer(rows)
    scaled = apply_normalizer(normalizer, rows)
    numeric, cats, y = _extract(scaled)
    vocabs = _build_vocabs(cats)
    codes = _encode(cats, vocabs)
    vocab_sizes = [len(v) for v in vocabs]

    single_class = np.unique(y).size < 2
    if single_class:
        log.warning("train: single-class training window (all delayed=%d); "
                    "model degenerates to a constant predictor", int(y[0]))

    hp = spec.hyperparameters
    if spec.kind == KIND_NB:
        clf = NaiveBayes(smoothing=hp["smoothing"]).fit(numeric, codes, y, vocab_sizes)
    elif spec.kind == KIND_RF:
        clf = RandomForest(
            trees_count=int(hp["trees_count"]),
            predictors_per_split=int(hp["predictors_per_split"]),
            seed=spec.seed,
            bootstrap=bool(hp.get("bootstrap", True)),
            min_samples_split=int(hp.get("min_samples_split", 2)),
            max_depth=hp.get("max_depth"),
        ).fit(numeric, codes, y)
    else:
        X = np.hstack([numeric, one_hot(codes, vocab_sizes)])
        clf = MLP(
            hidden_neurons=int(hp["hidden_neurons"]),
            learning_rate=float(hp["learning_rate"]),
            epochs=int(hp["epochs"]),
            seed=spec.seed,
            batch_size=int(hp.get("batch_size", 32)),
        ).fit(X, y)
    return TrainedModel(spec=spec, classifier=clf, normalizer=normalizer,
                        vocabs=vocabs, training_window=training_window,
                        single_class=single_class)


def predict(model: TrainedModel, rows) -> np.ndarray:
    """One {0,1} label per row; deterministic; empty input gives empty output."""
    rows = list(rows)
    if not rows:
        return np.zeros(0, dtype=int)
    scaled = apply_normalizer(model.normalizer, rows)
    numeric, cats, _ = _extract(scaled)
    codes = _encode(cats, model.vocabs)
    if model.spec.kind == KIND_MLP:
        X = np.hstack([numeric, one_hot(codes, model.vocab_sizes)])
        return model.classifier.predict(X)
    return model.classifier.predict(numeric, codes)


# ---------------------------------------------------------------------------
# Grid search with k-fold cross-validation
# ---------------------------------------------------------------------------

def default_grid(kind: str, n_features: int) -> list[dict]:
    kind = canonical_kind(kind)
    if kind == KIND_NB:
        return [{"smoothing": s} for s in (0.1, 0.5, 1.0)]
    if kind == KIND_RF:
        p = max(1, n_features)
        mtries = []
        for m in (math.ceil(math.sqrt(p)), math.ceil(p / 3), math.ceil(p / 2)):
            m = min(max(1, m), p)
            if m not in mtries:
                mtries.append(m)
        return [{"trees_count": 100, "predictors_per_split": m} for m in mtries]
    return [{"hidden_neurons": h, "learning_rate": lr, "epochs": 50}
            for h in (4, 8, 16, 32) for lr in (0.01, 0.1)]


def _size_key(kind: str, hp: dict) -> tuple:
    if kind == KIND_NB:
        return (hp["smoothing"],)
    if kind == KIND_RF:
        return (hp["predictors_per_split"], hp["trees_count"])
    return (hp["hidden_neurons"], hp["learning_rate"], hp["epochs"])


def grid_search_cv(kind: str, grid: list[dict], rows, k: int, seed: int = 0) -> ModelSpec:
    """Pick the grid point with the best mean k-fold CV accuracy; ties break
    toward the smaller model (fewer neurons / fewer predictors / smaller
    smoothing). The normalizer is refit inside every fold."""
    kind = canonical_kind(kind)
    if not grid:
        raise ValueError("hyperparameter grid is empty")
    if k < 2:
        raise ValueError("cross-validation needs k >= 2 folds")
    rows = list(rows)
    if len(rows) < k:
        raise ValueError(f"{len(rows)} rows cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(rows))
    folds = np.array_split(order, k)

    best_hp = None
    best_acc = -1.0
    for hp in sorted(grid, key=lambda h: _size_key(kind, h)):
        accs = []
        for f in range(k):
            val_idx = folds[f]
            train_idx = np.concatenate([folds[g] for g in range(k) if g != f])
            model = train(ModelSpec(kind=kind, hyperparameters=hp, seed=seed),
                          [rows[i] for i in train_idx])
            preds = predict(model, [rows[i] for i in val_idx])
            truth = np.array([rows[i].delayed for i in val_idx])
            accs.append(float(np.mean(preds == truth)))
        mean_acc = float(np.mean(accs))
        if mean_acc > best_acc:
            best_acc = mean_acc
            best_hp = hp
    log.info("grid_search_cv(%s): best %s with CV accuracy %.4f", kind, best_hp, best_acc)
    return ModelSpec(kind=kind, hyperparameters=best_hp, seed=seed)


# ---------------------------------------------------------------------------
# Serialization (versioned, self-describing JSON)
# ---------------------------------------------------------------------------

def model_to_dict(model: TrainedModel) -> dict:
    clf = model.classifier
    if model.spec.kind == KIND_NB:
        payload = {
            "classes": clf.classes.tolist(),
            "log_priors": clf.log_priors.tolist(),
            "means": clf.means.tolist(),
            "variances": clf.variances.tolist(),
            "cat_log_probs": [t.tolist() for t in clf.cat_log_probs],
            "smoothing": clf.smoothing,
        }
    elif model.spec.kind == KIND_RF:
        payload = {
            "trees": [t.root for t in clf.trees],
            "n_numeric": clf.trees[0].n_numeric if clf.trees else 0,
            "params": {"trees_count": clf.trees_count, "predictors_per_split": clf.mtry,
                       "seed": clf.seed, "bootstrap": clf.bootstrap,
                       "min_samples_split": clf.min_samples_split, "max_depth": clf.max_depth},
        }
    else:
        payload = {
            "W1": clf.W1.tolist(), "b1": clf.b1.tolist(),
            "W2": clf.W2.tolist(), "b2": clf.b2.tolist(),
            "params": {"hidden_neurons": clf.hidden, "learning_rate": clf.lr,
                       "epochs": clf.epochs, "seed": clf.seed, "batch_size": clf.batch_size},
        }
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "kind": model.spec.kind,
        "spec": {"kind": model.spec.kind, "hyperparameters": model.spec.hyperparameters,
                 "seed": model.spec.seed},
        "normalizer": {"mins": model.normalizer.mins.tolist(),
                       "maxs": model.normalizer.maxs.tolist(),
                       "means": model.normalizer.means.tolist()},
        "vocabs": [[str(k) for k in sorted(v, key=v.get)] for v in model.vocabs],
        "vocab_kinds": ["int" if model.vocabs[j] and
                        all(isinstance(k, int) for k in model.vocabs[j]) else "str"
                        for j in range(len(model.vocabs))],
        "training_window": list(model.training_window) if model.training_window else None,
        "single_class": model.single_class,
        "payload": payload,
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')}")
    spec = ModelSpec(kind=doc["spec"]["kind"],
                     hyperparameters=doc["spec"]["hyperparameters"],
                     seed=doc["spec"]["seed"])
    payload = doc["payload"]
    if spec.kind == KIND_NB:
        clf = NaiveBayes(smoothing=payload["smoothing"])
        clf.classes = np.array(payload["classes"], dtype=int)
        clf.log_priors = np.array(payload["log_priors"])
        clf.means = np.array(payload["means"])
        clf.variances = np.array(payload["variances"])
        clf.cat_log_probs = [np.array(t) for t in payload["cat_log_probs"]]
    elif spec.kind == KIND_RF:
        params = payload["params"]
        clf = RandomForest(trees_count=params["trees_count"],
                           predictors_per_split=params["predictors_per_split"],
                           seed=params["seed"], bootstrap=params["bootstrap"],
                           min_samples_split=params["min_samples_split"],
                           max_depth=params["max_depth"])
        clf.trees = []
        for root in payload["trees"]:
            tree = DecisionTree(params["predictors_per_split"], np.random.default_rng(0))
            tree.root = root
            tree.n_numeric = payload["n_numeric"]
            clf.trees.append(tree)
    else:
        params = payload["params"]
        clf = MLP(hidden_neurons=params["hidden_neurons"], learning_rate=params["learning_rate"],
                  epochs=params["epochs"], seed=params["seed"], batch_size=params["batch_size"])
        clf.W1 = np.array(payload["W1"])
        clf.b1 = np.array(payload["b1"])
        clf.W2 = np.array(payload["W2"])
        clf.b2 = np.array(payload["b2"])
    vocabs = []
    for j, values in enumerate(doc["vocabs"]):
        cast = int if doc["vocab_kinds"][j] == "int" else str
        vocabs.append({cast(v): code for code, v in enumerate(values)})
    normalizer = Normalizer(mins=np.array(doc["normalizer"]["mins"]),
                            maxs=np.array(doc["normalizer"]["maxs"]),
                            means=np.array(doc["normalizer"]["means"]))
    window = tuple(doc["training_window"]) if doc["training_window"] else None
    return TrainedModel(spec=spec, classifier=clf, normalizer=normalizer,
                        vocabs=tuple(vocabs), training_window=window,
                        single_class=doc.get("single_class", False))


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
