"""Pairwise learning-to-rank disambiguation, abstaining, and tuning.

Training data pairs each gold link (positive) with sampled incorrect
candidates of the same surface form (negatives). Two model kinds share
one scoring interface: an exactly-differentiable pairwise linear model
and gradient-boosted regression trees trained on the same pairwise
logistic loss with second-order leaf weights. The abstain model reuses
the machinery as a binary classifier over the top-ranked candidate's
features, thresholded at a tuned probability.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .candidates import CandidateList, candidates
from .corpus import (
    EntityId,
    GoldAnnotation,
    Passage,
    SurfaceForm,
    phrase_key,
    tokenize_unigrams,
)
from .features import FEATURE_COUNT, SCHEMA_VERSION, FeatureConfig, PassageContext, assemble_features
from .segmentation import SegmentationParams, segment
from .store import StoreHandle

LABEL_POSITIVE = "positive"
LABEL_NEGATIVE = "negative"
LABEL_NONE = "none"


class SchemaMismatchError(ValueError):
    """Feature schema does not match the model's training schema."""


class RankerTrainingError(ValueError):
    """No usable (positive, negative) pair or single-class input."""


@dataclass(frozen=True)
class TrainingExample:
    group: str
    surface_key: str
    entity: Optional[EntityId]
    features: np.ndarray
    label: str
    prior: float = 0.0


# ---------------------------------------------------------------------------
# Linear pairwise model
# ---------------------------------------------------------------------------


def pairwise_loss(weights: np.ndarray, diffs: np.ndarray) -> float:
    """Mean logistic pairwise loss over rows of (positive - negative)
    standardized feature differences."""
    margins = diffs @ weights
    return float(np.mean(np.logaddexp(0.0, -margins)))


def pairwise_loss_grad(weights: np.ndarray, diffs: np.ndarray) -> np.ndarray:
    margins = diffs @ weights
    coeff = -_sigmoid_vec(-margins)
    return diffs.T @ coeff / len(diffs)


def _sigmoid_vec(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500, 500)))


def _descend(
    loss_fn: Callable[[np.ndarray], float],
    grad_fn: Callable[[np.ndarray], np.ndarray],
    params: np.ndarray,
    epochs: int,
    learning_rate: float,
) -> tuple[np.ndarray, list[float]]:
    """Gradient descent with step halving so the loss never increases."""
    loss = loss_fn(params)
    history = [loss]
    lr = learning_rate
    for _ in range(epochs):
        grad = grad_fn(params)
        stepped = False
        while lr > 1e-14:
            candidate = params - lr * grad
            new_loss = loss_fn(candidate)
            if new_loss <= loss:
                params, loss = candidate, new_loss
                stepped = True
                break
            lr /= 2.0
        history.append(loss)
        if not stepped:
            break
    return params, history


# ---------------------------------------------------------------------------
# Gradient-boosted trees
# ---------------------------------------------------------------------------


def _build_tree(
    X: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    indices: np.ndarray,
    depth: int,
    max_depth: int,
    min_child_weight: float,
    gamma: float,
    reg_lambda: float,
) -> dict:
    g_total = float(grad[indices].sum())
    h_total = float(hess[indices].sum())
    leaf = {"leaf": -g_total / (h_total + reg_lambda)}
    if depth >= max_depth or len(indices) < 2:
        return leaf
    parent_score = g_total * g_total / (h_total + reg_lambda)
    best_gain = 0.0
    best: Optional[tuple[int, float, np.ndarray, np.ndarray]] = None
    for feature in range(X.shape[1]):
        order = indices[np.argsort(X[indices, feature], kind="stable")]
        values = X[order, feature]
        g_prefix = np.cumsum(grad[order])
        h_prefix = np.cumsum(hess[order])
        for pos in range(len(order) - 1):
            if values[pos] == values[pos + 1]:
                continue
            h_left = float(h_prefix[pos])
            h_right = h_total - h_left
            if h_left < min_child_weight or h_right < min_child_weight:
                continue
            g_left = float(g_prefix[pos])
            g_right = g_total - g_left
            gain = 0.5 * (
                g_left * g_left / (h_left + reg_lambda)
                + g_right * g_right / (h_right + reg_lambda)
                - parent_score
            ) - gamma
            if gain > best_gain + 1e-12:
                best_gain = gain
                threshold = (values[pos] + values[pos + 1]) / 2.0
                best = (feature, threshold, order[: pos + 1], order[pos + 1 :])
    if best is None:
        return leaf
    feature, threshold, left_idx, right_idx = best
    return {
        "feature": int(feature),
        "split": float(threshold),
        "left": _build_tree(
            X, grad, hess, left_idx, depth + 1, max_depth,
            min_child_weight, gamma, reg_lambda,
        ),
        "right": _build_tree(
            X, grad, hess, right_idx, depth + 1, max_depth,
            min_child_weight, gamma, reg_lambda,
        ),
    }


def _tree_predict(tree: dict, x: np.ndarray) -> float:
    node = tree
    while "leaf" not in node:
        node = node["left"] if x[node["feature"]] <= node["split"] else node["right"]
    return node["leaf"]


def _tree_predict_batch(tree: dict, X: np.ndarray) -> np.ndarray:
    return np.array([_tree_predict(tree, x) for x in X])


def _scale_tree(tree: dict, factor: float) -> dict:
    if "leaf" in tree:
        return {"leaf": tree["leaf"] * factor}
    return {
        "feature": tree["feature"],
        "split": tree["split"],
        "left": _scale_tree(tree["left"], factor),
        "right": _scale_tree(tree["right"], factor),
    }


DEFAULT_TREE_PARAMS = {
    "learning_rate": 0.3,
    "n_estimators": 60,
    "max_depth": 3,
    "min_child_weight": 1e-3,
    "gamma": 0.0,
    "reg_lambda": 1.0,
}

DEFAULT_LINEAR_PARAMS = {"learning_rate": 0.5, "epochs": 300, "l2": 0.0}


# ---------------------------------------------------------------------------
# Ranker model
# ---------------------------------------------------------------------------


@dataclass
class RankerModel:
    kind: str  # "pairwise-linear" | "gbt"
    schema_version: int
    params: dict
    meta: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return int(self.params["n_features"])

    def score(self, features: np.ndarray) -> float:
        features = np.asarray(features, dtype=np.float64)
        if features.shape[0] != self.n_features:
            raise SchemaMismatchError(
                f"model expects {self.n_features} features, got {features.shape[0]}"
            )
        if self.kind == "pairwise-linear":
            z = (features - np.asarray(self.params["means"])) / np.asarray(
                self.params["scales"]
            )
            return float(np.dot(np.asarray(self.params["weights"]), z)
                         + self.params["bias"])
        return sum(_tree_predict(tree, features) for tree in self.params["trees"])

    def score_batch(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.score(x) for x in np.asarray(X, dtype=np.float64)])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "schema_version": self.schema_version,
            "params": _jsonable(self.params),
            "meta": _jsonable(self.meta),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RankerModel":
        return cls(
            kind=data["kind"],
            schema_version=int(data["schema_version"]),
            params=data["params"],
            meta=data.get("meta", {}),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path: str) -> "RankerModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [float(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _pair_indices(examples: Sequence[TrainingExample]) -> list[tuple[int, int]]:
    groups: dict[str, tuple[list[int], list[int]]] = {}
    for i, ex in enumerate(examples):
        pos, neg = groups.setdefault(ex.group, ([], []))
        if ex.label == LABEL_POSITIVE:
            pos.append(i)
        elif ex.label == LABEL_NEGATIVE:
            neg.append(i)
    pairs = []
    for pos, neg in groups.values():
        for p in pos:
            for n in neg:
                pairs.append((p, n))
    return pairs


def train_ranker(
    examples: Sequence[TrainingExample],
    hyperparams: Optional[dict] = None,
    kind: str = "gbt",
    seed: int = 0,
) -> RankerModel:
    """Fit a ranker on (positive, negative) pairs sharing a surface form.

    The recorded training loss history is non-increasing for both kinds.
    """
    pairs = _pair_indices(examples)
    if not pairs:
        raise RankerTrainingError("no (positive, negative) pair shares a surface form")
    X = np.stack([ex.features for ex in examples])
    meta = {"seed": seed, "hyperparams": dict(hyperparams or {}), "pairs": len(pairs)}

    if kind == "pairwise-linear":
        hp = {**DEFAULT_LINEAR_PARAMS, **(hyperparams or {})}
        means = X.mean(axis=0)
        scales = X.std(axis=0)
        scales[scales == 0.0] = 1.0
        Z = (X - means) / scales
        diffs = np.stack([Z[p] - Z[n] for p, n in pairs])
        l2 = float(hp["l2"])

        def loss_fn(w):
            return pairwise_loss(w, diffs) + 0.5 * l2 * float(np.dot(w, w))

        def grad_fn(w):
            return pairwise_loss_grad(w, diffs) + l2 * w

        weights, history = _descend(
            loss_fn, grad_fn, np.zeros(X.shape[1]),
            int(hp["epochs"]), float(hp["learning_rate"]),
        )
        params = {
            "n_features": X.shape[1],
            "weights": weights,
            "bias": 0.0,
            "means": means,
            "scales": scales,
        }
        meta["loss_history"] = history
        return RankerModel("pairwise-linear", SCHEMA_VERSION, _jsonable(params), _jsonable(meta))

    if kind != "gbt":
        raise ValueError(f"unknown ranker kind {kind!r}")
    hp = {**DEFAULT_TREE_PARAMS, **(hyperparams or {})}
    scores = np.zeros(len(examples))
    pair_arr = np.array(pairs)
    trees: list[dict] = []

    def current_loss() -> float:
        margins = scores[pair_arr[:, 0]] - scores[pair_arr[:, 1]]
        return float(np.mean(np.logaddexp(0.0, -margins)))

    history = [current_loss()]
    eta = float(hp["learning_rate"])
    for _ in range(int(hp["n_estimators"])):
        grad = np.zeros(len(examples))
        hess = np.zeros(len(examples))
        margins = scores[pair_arr[:, 0]] - scores[pair_arr[:, 1]]
        sig = _sigmoid_vec(-margins)
        curvature = np.maximum(sig * (1.0 - sig), 1e-9)
        np.add.at(grad, pair_arr[:, 0], -sig)
        np.add.at(grad, pair_arr[:, 1], sig)
        np.add.at(hess, pair_arr[:, 0], curvature)
        np.add.at(hess, pair_arr[:, 1], curvature)
        tree = _build_tree(
            X, grad, hess, np.arange(len(examples)), 0,
            int(hp["max_depth"]), float(hp["min_child_weight"]),
            float(hp["gamma"]), float(hp["reg_lambda"]),
        )
        tree = _scale_tree(tree, eta)
        delta = _tree_predict_batch(tree, X)
        prev_loss = history[-1]
        trial_scores = scores + delta
        margins = trial_scores[pair_arr[:, 0]] - trial_scores[pair_arr[:, 1]]
        new_loss = float(np.mean(np.logaddexp(0.0, -margins)))
        halvings = 0
        while new_loss > prev_loss and halvings < 10:
            tree = _scale_tree(tree, 0.5)
            delta *= 0.5
            trial_scores = scores + delta
            margins = trial_scores[pair_arr[:, 0]] - trial_scores[pair_arr[:, 1]]
            new_loss = float(np.mean(np.logaddexp(0.0, -margins)))
            halvings += 1
        if new_loss > prev_loss:
            history.append(prev_loss)  # tree dropped; scores unchanged
            continue
        trees.append(tree)
        scores = trial_scores
        history.append(new_loss)
    params = {"n_features": X.shape[1], "trees": trees}
    meta["loss_history"] = history
    return RankerModel("gbt", SCHEMA_VERSION, _jsonable(params), _jsonable(meta))


def score_candidates(
    model: RankerModel, scored: Sequence[tuple[EntityId, np.ndarray]]
) -> list[tuple[int, float]]:
    """Rank candidates by model score, descending; ties break on entity
    id so the order is total."""
    results = []
    for i, (entity, features) in enumerate(scored):
        results.append((i, model.score(features), entity.value))
    results.sort(key=lambda item: (-item[1], item[2]))
    return [(i, score) for i, score, _ in results]


def pairwise_accuracy(
    model: RankerModel, examples: Sequence[TrainingExample]
) -> float:
    pairs = _pair_indices(examples)
    if not pairs:
        return 0.0
    scores = [model.score(ex.features) for ex in examples]
    correct = sum(1 for p, n in pairs if scores[p] > scores[n])
    return correct / len(pairs)


# ---------------------------------------------------------------------------
# Abstain model
# ---------------------------------------------------------------------------


@dataclass
class AbstainModel:
    kind: str
    schema_version: int
    params: dict
    threshold: float
    meta: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return int(self.params["n_features"])

    def predict_proba(self, features: np.ndarray) -> float:
        features = np.asarray(features, dtype=np.float64)
        if features.shape[0] != self.n_features:
            raise SchemaMismatchError(
                f"model expects {self.n_features} features, got {features.shape[0]}"
            )
        if self.kind == "pairwise-linear":
            z = (features - np.asarray(self.params["means"])) / np.asarray(
                self.params["scales"]
            )
            raw = float(np.dot(np.asarray(self.params["weights"]), z)
                        + self.params["bias"])
        else:
            raw = sum(_tree_predict(tree, features) for tree in self.params["trees"])
        prob = 1.0 / (1.0 + math.exp(-max(min(raw, 500.0), -500.0)))
        return min(max(prob, 1e-12), 1.0 - 1e-12)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "schema_version": self.schema_version,
            "params": _jsonable(self.params),
            "threshold": self.threshold,
            "meta": _jsonable(self.meta),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AbstainModel":
        return cls(
            kind=data["kind"],
            schema_version=int(data["schema_version"]),
            params=data["params"],
            threshold=float(data["threshold"]),
            meta=data.get("meta", {}),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path: str) -> "AbstainModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def should_abstain(model: AbstainModel, top_features: np.ndarray) -> bool:
    """Abstain when P(link) falls below the threshold; ties link."""
    return model.predict_proba(top_features) < model.threshold


def train_abstain(
    examples: Sequence[tuple[np.ndarray, bool]],
    hyperparams: Optional[dict] = None,
    kind: str = "pairwise-linear",
    seed: int = 0,
) -> AbstainModel:
    """Fit the link-vs-none classifier on top-candidate features and tune
    the threshold on a held-out split to maximize link-class F1."""
    labels = np.array([1.0 if y else 0.0 for _, y in examples])
    if len(examples) < 2 or labels.min() == labels.max():
        raise RankerTrainingError("abstain training needs both link and none classes")
    X = np.stack([x for x, _ in examples])
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(examples))
    held = max(1, len(examples) // 5)
    val_idx, train_idx = order[:held], order[held:]
    if labels[train_idx].min() == labels[train_idx].max():
        train_idx = order  # tiny input: fall back to training on all
    meta = {"seed": seed, "hyperparams": dict(hyperparams or {})}

    if kind == "pairwise-linear":
        hp = {**DEFAULT_LINEAR_PARAMS, **(hyperparams or {})}
        means = X[train_idx].mean(axis=0)
        scales = X[train_idx].std(axis=0)
        scales[scales == 0.0] = 1.0
        Z = (X[train_idx] - means) / scales
        y = labels[train_idx]

        def loss_fn(p):
            margins = Z @ p[:-1] + p[-1]
            signed = np.where(y > 0, margins, -margins)
            return float(np.mean(np.logaddexp(0.0, -signed)))

        def grad_fn(p):
            margins = Z @ p[:-1] + p[-1]
            residual = _sigmoid_vec(margins) - y
            return np.concatenate([Z.T @ residual / len(y), [float(residual.mean())]])

        packed, history = _descend(
            loss_fn, grad_fn, np.zeros(X.shape[1] + 1),
            int(hp["epochs"]), float(hp["learning_rate"]),
        )
        params = {
            "n_features": X.shape[1],
            "weights": packed[:-1],
            "bias": float(packed[-1]),
            "means": means,
            "scales": scales,
        }
        model = AbstainModel(
            "pairwise-linear", SCHEMA_VERSION, _jsonable(params), 0.5, _jsonable(meta)
        )
    elif kind == "gbt":
        hp = {**DEFAULT_TREE_PARAMS, **(hyperparams or {})}
        scores = np.zeros(len(train_idx))
        Xt, y = X[train_idx], labels[train_idx]
        trees: list[dict] = []
        for _ in range(int(hp["n_estimators"])):
            prob = _sigmoid_vec(scores)
            grad = prob - y
            hess = np.maximum(prob * (1.0 - prob), 1e-9)
            tree = _scale_tree(
                _build_tree(
                    Xt, grad, hess, np.arange(len(train_idx)), 0,
                    int(hp["max_depth"]), float(hp["min_child_weight"]),
                    float(hp["gamma"]), float(hp["reg_lambda"]),
                ),
                float(hp["learning_rate"]),
            )
            trees.append(tree)
            scores = scores + _tree_predict_batch(tree, Xt)
        params = {"n_features": X.shape[1], "trees": trees}
        model = AbstainModel("gbt", SCHEMA_VERSION, _jsonable(params), 0.5, _jsonable(meta))
    else:
        raise ValueError(f"unknown abstain kind {kind!r}")

    probs = np.array([model.predict_proba(x) for x in X[val_idx]])
    truth = labels[val_idx]
    best_tau, best_f1 = 0.0, -1.0
    for tau in np.linspace(0.0, 1.0, 101):
        predicted = probs >= tau  # link unless P(link) < tau
        tp = float(np.sum(predicted & (truth == 1.0)))
        fp = float(np.sum(predicted & (truth == 0.0)))
        fn = float(np.sum(~predicted & (truth == 1.0)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        if f1 > best_f1 + 1e-12:
            best_tau, best_f1 = float(tau), f1
    model.threshold = best_tau
    model.meta["validation_f1"] = best_f1
    return model


# ---------------------------------------------------------------------------
# Training data generation
# ---------------------------------------------------------------------------


def _stable_rng(seed: int, *parts: str) -> np.random.Generator:
    tokens = [seed] + [zlib.crc32(p.encode("utf-8")) for p in parts]
    return np.random.default_rng(np.random.SeedSequence(tokens))


def find_surface_span(passage: Passage, surface: str) -> Optional[tuple[int, int]]:
    """First token-aligned occurrence of a surface string in a passage."""
    key = phrase_key(surface)
    tokens = tokenize_unigrams(passage.normalized)
    width = len(tokenize_unigrams(key))
    if width == 0:
        return None
    for i in range(len(tokens) - width + 1):
        start, end = tokens[i][1], tokens[i + width - 1][2]
        if phrase_key(passage.normalized[start:end]) == key:
            return start, end
    return None


def resolve_gold_span(
    passage: Passage, annotation: GoldAnnotation
) -> Optional[SurfaceForm]:
    if annotation.start is not None and annotation.end is not None:
        return SurfaceForm.from_span(passage.normalized, annotation.start, annotation.end)
    span = find_surface_span(passage, annotation.surface)
    if span is None:
        return None
    return SurfaceForm.from_span(passage.normalized, span[0], span[1])


def splice_form(forms: Sequence[SurfaceForm], target: SurfaceForm) -> list[SurfaceForm]:
    """Insert a span into a form list, displacing whatever overlaps it."""
    kept = [
        f for f in forms if f.end <= target.start or f.start >= target.end
    ]
    if any(f.start == target.start and f.end == target.end for f in forms):
        return list(forms)
    kept.append(target)
    kept.sort(key=lambda f: (f.start, f.end))
    return kept


def generate_training_data(
    gold: Sequence[tuple[Passage, Sequence[GoldAnnotation]]],
    store: StoreHandle,
    feature_config: Optional[FeatureConfig] = None,
    seg_params: Optional[SegmentationParams] = None,
    negatives_per_positive: int = 4,
    seed: int = 0,
) -> tuple[list[TrainingExample], int]:
    """Build one positive plus sampled negatives per gold link.

    Negatives are drawn from the surface's other candidates by prior,
    without replacement, deterministically per (seed, passage, span).
    Returns the examples and the count of skipped gold links (no
    candidates, or gold entity absent from the candidate list).
    """
    feature_config = feature_config or FeatureConfig()
    seg_params = seg_params or SegmentationParams()
    examples: list[TrainingExample] = []
    skipped = 0
    for passage, annotations in gold:
        linked = [a for a in annotations if a.entity is not None]
        if not linked:
            continue
        forms = segment(passage, store, seg_params)
        resolved: list[tuple[GoldAnnotation, SurfaceForm]] = []
        for annotation in linked:
            target = resolve_gold_span(passage, annotation)
            if target is None:
                skipped += 1
                continue
            forms = splice_form(forms, target)
            resolved.append((annotation, target))
        if not resolved:
            continue
        context = PassageContext(passage, forms, store, feature_config)
        for annotation, target in resolved:
            cand_list = candidates(target, store, feature_config.max_candidates)
            priors = {e.value: p for e, p in cand_list.candidates}
            if annotation.entity.value not in priors:
                skipped += 1
                continue
            group = f"{passage.id}:{target.start}-{target.end}"
            gold_entity = annotation.entity
            examples.append(
                TrainingExample(
                    group=group,
                    surface_key=target.phrase_key,
                    entity=gold_entity,
                    features=assemble_features(
                        context, target, gold_entity, priors[gold_entity.value], store
                    ),
                    label=LABEL_POSITIVE,
                    prior=priors[gold_entity.value],
                )
            )
            pool = [
                (e, p) for e, p in cand_list.candidates if e != gold_entity
            ]
            rng = _stable_rng(seed, passage.id, f"{target.start}:{target.end}")
            for entity, prior in _weighted_sample(pool, negatives_per_positive, rng):
                examples.append(
                    TrainingExample(
                        group=group,
                        surface_key=target.phrase_key,
                        entity=entity,
                        features=assemble_features(context, target, entity, prior, store),
                        label=LABEL_NEGATIVE,
                        prior=prior,
                    )
                )
    return examples, skipped


def _weighted_sample(
    pool: list[tuple[EntityId, float]], k: int, rng: np.random.Generator
) -> list[tuple[EntityId, float]]:
    remaining = list(pool)
    chosen: list[tuple[EntityId, float]] = []
    while remaining and len(chosen) < k:
        weights = np.array([max(p, 1e-12) for _, p in remaining])
        probs = weights / weights.sum()
        idx = int(rng.choice(len(remaining), p=probs))
        chosen.append(remaining.pop(idx))
    return chosen


# ---------------------------------------------------------------------------
# Cross-validation by random search
# ---------------------------------------------------------------------------


def sample_param_space(
    space: dict, iterations: int, rng: np.random.Generator
) -> list[dict]:
    if not space:
        raise ValueError("empty parameter space")
    configs = []
    for _ in range(iterations):
        config = {}
        for name in sorted(space):
            spec = space[name]
            # A 2-tuple of numbers is a range; a list enumerates choices.
            if isinstance(spec, tuple) and len(spec) == 2 and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in spec
            ):
                lo, hi = spec
                if isinstance(lo, int) and isinstance(hi, int):
                    config[name] = int(rng.integers(lo, hi + 1))
                else:
                    config[name] = float(rng.uniform(lo, hi))
            elif isinstance(spec, (list, tuple)):
                config[name] = spec[int(rng.integers(len(spec)))]
            else:
                config[name] = spec
        configs.append(config)
    return configs


def cross_validate(
    examples: Sequence[TrainingExample],
    param_space: dict,
    folds: int = 3,
    iterations: int = 8,
    seed: int = 0,
    kind: str = "gbt",
) -> tuple[dict, list[tuple[dict, float]]]:
    """Random-search hyperparameter tuning scored by k-fold mean pairwise
    accuracy. Returns the winning config and every (config, score)."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = np.random.default_rng(seed)
    configs = sample_param_space(param_space, iterations, rng)
    groups = sorted({ex.group for ex in examples})
    rng.shuffle(groups)
    fold_of = {g: i % folds for i, g in enumerate(groups)}
    results: list[tuple[dict, float]] = []
    best_config, best_score = configs[0], -1.0
    for config in configs:
        fold_scores = []
        for fold in range(folds):
            train = [ex for ex in examples if fold_of[ex.group] != fold]
            val = [ex for ex in examples if fold_of[ex.group] == fold]
            if not _pair_indices(train) or not _pair_indices(val):
                continue
            model = train_ranker(train, config, kind=kind, seed=seed)
            fold_scores.append(pairwise_accuracy(model, val))
        score = float(np.mean(fold_scores)) if fold_scores else 0.0
        results.append((config, score))
        if score > best_score:
            best_config, best_score = config, score
    return best_config, results
