"""Joint word/phrase/entity embeddings via skip-gram with negative sampling.

The training corpus is rewritten so that multi-token segments become
single tokens joined with underscores (``power_steering``) and a token
naming the knowledge-base entry (``uri:wiki/<id>``) is inserted right
after each hyperlink's anchor text. Training one space over both token
kinds makes word-entity cosine similarity meaningful.

Training is single-threaded and fully deterministic for a fixed seed:
identical inputs reproduce the table bitwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .corpus import Passage, normalized_link_spans
from .segmentation import PhraseSource, SegmentationParams, segment

logger = logging.getLogger(__name__)

ENTITY_TOKEN_PREFIX = "uri:wiki/"


class EmbeddingTrainingError(ValueError):
    """Raised when the vocabulary is empty after frequency filtering."""


class UndefinedSimilarityError(ValueError):
    """Cosine requested against a zero vector."""


@dataclass(frozen=True)
class EmbeddingTrainConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_token_freq: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")


@dataclass
class EmbeddingTable:
    """Token to vector map over one shared space."""

    dim: int
    vectors: dict[str, np.ndarray]
    frequencies: dict[str, int] = field(default_factory=dict)

    def get(self, token: str) -> Optional[np.ndarray]:
        return self.vectors.get(token)

    def export_text(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for token in sorted(self.vectors):
                values = " ".join(repr(float(x)) for x in self.vectors[token])
                fh.write(f"{token} {values}\n")


def entity_token(entity_id: str) -> str:
    return ENTITY_TOKEN_PREFIX + entity_id


def vector_store_key(token: str) -> str:
    """Map a training token back to its vector-store key: entity tokens
    keep their spelling, phrase tokens trade underscores for spaces."""
    if token.startswith(ENTITY_TOKEN_PREFIX):
        return token
    return token.replace("_", " ")


def prepare_training_corpus(
    pages: Iterable[dict],
    source: PhraseSource,
    params: Optional[SegmentationParams] = None,
) -> Iterator[list[str]]:
    """Yield one token list per page, segmented and entity-annotated.

    Overlapping link spans keep the earlier link; the later one is
    skipped with a warning.
    """
    params = params or SegmentationParams()
    for page in pages:
        passage = Passage.from_text(str(page.get("id", "")), page["text"])
        links = normalized_link_spans(passage, page.get("links", []))
        forms = segment(passage, source, params)
        tokens: list[str] = []
        link_idx = 0
        for form in forms:
            tokens.append(form.phrase_key.replace(" ", "_"))
            while link_idx < len(links) and links[link_idx][1] <= form.end:
                tokens.append(entity_token(links[link_idx][2]))
                link_idx += 1
        while link_idx < len(links):
            tokens.append(entity_token(links[link_idx][2]))
            link_idx += 1
        yield tokens


# ---------------------------------------------------------------------------
# Skip-gram negative sampling
# ---------------------------------------------------------------------------


def pair_loss(center: np.ndarray, context: np.ndarray, negatives: np.ndarray) -> float:
    """Negative log likelihood of one (center, context, negatives) pair:
    -log s(u_ctx . v) - sum_neg log s(-u_neg . v)."""
    pos = float(np.dot(context, center))
    loss = float(np.logaddexp(0.0, -pos))
    for neg in negatives:
        loss += float(np.logaddexp(0.0, float(np.dot(neg, center))))
    return loss


def pair_gradients(
    center: np.ndarray, context: np.ndarray, negatives: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of pair_loss w.r.t. center, context, negatives."""
    pos_score = _sigmoid(float(np.dot(context, center)))
    grad_center = (pos_score - 1.0) * context
    grad_context = (pos_score - 1.0) * center
    grad_negs = np.zeros_like(negatives)
    for i, neg in enumerate(negatives):
        neg_score = _sigmoid(float(np.dot(neg, center)))
        grad_center = grad_center + neg_score * neg
        grad_negs[i] = neg_score * center
    return grad_center, grad_context, grad_negs


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def train_embeddings(
    sentences: Iterable[Sequence[str]], config: EmbeddingTrainConfig
) -> EmbeddingTable:
    """Train input-side vectors with skip-gram and negative sampling.

    Negatives are drawn proportionally to frequency^0.75. The context
    window is fixed (no random shrinkage) so a seed pins the result.
    """
    corpus = [list(s) for s in sentences if s]
    freqs: dict[str, int] = {}
    for sentence in corpus:
        for token in sentence:
            freqs[token] = freqs.get(token, 0) + 1
    vocab = sorted(t for t, c in freqs.items() if c >= config.min_token_freq)
    if not vocab:
        raise EmbeddingTrainingError("vocabulary empty after min-frequency filter")
    index = {t: i for i, t in enumerate(vocab)}
    counts = np.array([freqs[t] for t in vocab], dtype=np.float64)

    rng = np.random.default_rng(config.seed)
    dim = config.dim
    w_in = (rng.random((len(vocab), dim)) - 0.5) / dim
    w_out = np.zeros((len(vocab), dim))

    weights = counts**0.75
    cumulative = np.cumsum(weights / weights.sum())
    cumulative[-1] = 1.0

    sentence_ids = [
        np.array([index[t] for t in sentence if t in index], dtype=np.int64)
        for sentence in corpus
    ]
    window = config.window
    k = config.negatives
    lr = config.learning_rate

    for _ in range(config.epochs):
        for ids in sentence_ids:
            n = len(ids)
            if n < 2:
                continue
            pair_count = sum(
                min(i, window) + min(n - 1 - i, window) for i in range(n)
            )
            neg_draws = np.searchsorted(cumulative, rng.random((pair_count, k)))
            pair_idx = 0
            for i in range(n):
                center = ids[i]
                lo = max(0, i - window)
                hi = min(n, i + window + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    targets = np.empty(k + 1, dtype=np.int64)
                    targets[0] = ids[j]
                    targets[1:] = neg_draws[pair_idx]
                    pair_idx += 1
                    v = w_in[center]
                    u = w_out[targets]
                    logits = np.clip(u @ v, -30.0, 30.0)
                    scores = 1.0 / (1.0 + np.exp(-logits))
                    scores[0] -= 1.0  # residuals: sigma - label
                    grad_v = scores @ u
                    np.add.at(w_out, targets, np.outer(scores, v) * (-lr))
                    w_in[center] = v - lr * grad_v
    vectors = {t: w_in[i].astype(np.float32) for t, i in index.items()}
    return EmbeddingTable(dim=dim, vectors=vectors, frequencies=dict(freqs))


# ---------------------------------------------------------------------------
# Similarity primitives
# ---------------------------------------------------------------------------


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; zero vectors are undefined."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise UndefinedSimilarityError("cosine undefined for zero vector")
    return float(np.dot(u, v) / (nu * nv))


def euclidean(u: np.ndarray, v: np.ndarray) -> float:
    """Euclidean distance between equal-dimension vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.linalg.norm(u - v))
