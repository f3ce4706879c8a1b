"""Disambiguation features for (passage, surface form, candidate) triples.

Four slices share one fixed, versioned schema: semantic similarity
between the candidate's vector and weighted centroids of the passage
(global, density clusters, local window), anchor-text statistics per
corpus, entity popularity, and string/morphology comparisons against the
entity slug. Missing data never becomes NaN; it is encoded with the
documented sentinels plus explicit 0/1 flag features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .clustering import ClusterSet, density_cluster
from .corpus import EntityId, Passage, SurfaceForm
from .embedding import cosine, entity_token, euclidean
from .store import CORPORA, AnchorStats, EntityStats, StoreHandle
from .strings import (
    jaro_winkler,
    minhash_jaccard,
    normalized_damerau_levenshtein,
    slug_to_text,
)

SCHEMA_VERSION = 1
MISSING_EUCLID_SENTINEL = 1e6

FEATURE_NAMES: tuple[str, ...] = (
    "cos_global",
    "cluster_sim_max",
    "cluster_sim_min",
    "cluster_sim_mean",
    "cluster_sim_std",
    "window_cos",
    "window_euclid",
    "window_count",
    *(
        f"anchor_{name}_{corpus}"
        for corpus in CORPORA
        for name in ("p", "n", "entropy", "targets", "surface_link_prob")
    ),
    "pop_log_inbound",
    "pop_log_views",
    "pop_log_redirect_views",
    "pop_log_out_total",
    "pop_log_out_unique",
    *(f"pop_link_share_{corpus}" for corpus in CORPORA),
    "str_jaro_winkler",
    "str_damerau_levenshtein",
    "str_minhash_jaccard",
    "str_surface_chars",
    "str_surface_upper_chars",
    "str_surface_words",
    "str_mean_word_len",
    "str_max_word_len",
    "str_entity_chars",
    "str_entity_words",
    "candidate_prior",
    "semantic_missing",
    "entity_stats_missing",
)

FEATURE_COUNT = len(FEATURE_NAMES)
_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}


class CentroidUnavailableError(ValueError):
    """No contributing form has a known vector."""


@dataclass(frozen=True)
class DocumentCentroid:
    vector: np.ndarray
    contributing: int
    source: str = "global"


@dataclass(frozen=True)
class SimilaritySummary:
    max: float
    min: float
    mean: float
    std: float


@dataclass(frozen=True)
class FeatureConfig:
    window_w: int = 5
    min_cluster_size: int = 3
    max_candidates: int = 32
    corpus_link_totals: dict[str, int] = field(
        default_factory=lambda: {c: 0 for c in CORPORA}
    )


def weighted_centroid(
    forms: Sequence[tuple[str, float, float, Optional[np.ndarray]]],
) -> DocumentCentroid:
    """tf-idf weighted centroid over (surface, tf, idf, vector) rows:
    sum(tf * idf * v) / sum(tf), skipping rows without a vector."""
    total = np.zeros(0)
    tf_sum = 0.0
    contributing = 0
    for _, tf, idf_value, vector in forms:
        if vector is None:
            continue
        if contributing == 0:
            total = np.zeros(len(vector), dtype=np.float64)
        total += tf * idf_value * np.asarray(vector, dtype=np.float64)
        tf_sum += tf
        contributing += 1
    if contributing == 0:
        raise CentroidUnavailableError("no contributing form has a vector")
    return DocumentCentroid(vector=total / tf_sum, contributing=contributing)


def idf(term: str, store: StoreHandle) -> float:
    """Smoothed inverse document frequency against the background corpus."""
    n_docs = store.get_doc_count()
    df = store.get_doc_frequency(term)
    return math.log((n_docs + 1) / (df + 1)) + 1.0


def local_window_features(
    forms: Sequence[tuple[str, float, float, Optional[np.ndarray]]],
    target_index: int,
    window_w: int,
    entity_vector: np.ndarray,
) -> tuple[float, float, float]:
    """Similarity of the entity vector to the centroid of up to
    ``window_w`` nearest vector-bearing forms on each side of the target.

    Returns (cosine, euclidean, contributing count); with no usable
    neighbor the sentinel triple (0, 1e6, 0).
    """
    if not 0 <= target_index < len(forms):
        raise IndexError(f"target index {target_index} out of range")
    if window_w < 1:
        raise ValueError("window_w must be >= 1")
    chosen: list[tuple[str, float, float, Optional[np.ndarray]]] = []
    taken = 0
    for i in range(target_index - 1, -1, -1):
        if taken == window_w:
            break
        if forms[i][3] is not None:
            chosen.append(forms[i])
            taken += 1
    taken = 0
    for i in range(target_index + 1, len(forms)):
        if taken == window_w:
            break
        if forms[i][3] is not None:
            chosen.append(forms[i])
            taken += 1
    if not chosen:
        return 0.0, MISSING_EUCLID_SENTINEL, 0.0
    centroid = weighted_centroid(chosen)
    if not np.any(centroid.vector):
        return 0.0, MISSING_EUCLID_SENTINEL, 0.0
    return (
        cosine(entity_vector, centroid.vector),
        euclidean(entity_vector, centroid.vector),
        float(centroid.contributing),
    )


def cluster_similarity_summary(
    entity_vector: np.ndarray,
    clusters: ClusterSet,
    forms: Sequence[tuple[str, float, float, Optional[np.ndarray]]],
) -> SimilaritySummary:
    """Summary statistics of cosine(entity, cluster centroid) over all
    clusters; with zero clusters the global centroid stands in and the
    spread is zero."""
    sims: list[float] = []
    for members in clusters.clusters:
        centroid = weighted_centroid([forms[i] for i in members])
        sims.append(cosine(entity_vector, centroid.vector))
    if not sims:
        centroid = weighted_centroid(forms)
        value = cosine(entity_vector, centroid.vector)
        return SimilaritySummary(max=value, min=value, mean=value, std=0.0)
    arr = np.array(sims)
    return SimilaritySummary(
        max=float(arr.max()),
        min=float(arr.min()),
        mean=float(arr.mean()),
        std=float(arr.std()),
    )


# ---------------------------------------------------------------------------
# Anchor-statistics features
# ---------------------------------------------------------------------------


def link_probability(stats: AnchorStats, corpus: str, entity: str) -> float:
    """P(entity | surface links) within one corpus; 0 when the surface
    never links there."""
    per_corpus = stats.linked.get(corpus, {})
    denom = sum(per_corpus.values())
    if denom == 0:
        return 0.0
    return per_corpus.get(entity, 0) / denom


def normalized_link_rate(stats: AnchorStats, corpus: str, entity: str) -> float:
    """Link count over all occurrences, linked or not; controls for
    surfaces that are certain when linked but rarely linked at all."""
    per_corpus = stats.linked.get(corpus, {})
    denom = sum(per_corpus.values()) + stats.unlinked.get(corpus, 0)
    if denom == 0:
        return 0.0
    return per_corpus.get(entity, 0) / denom


def anchor_entropy(stats: AnchorStats, corpus: str) -> float:
    """Shannon entropy (bits) of the link-target distribution."""
    per_corpus = stats.linked.get(corpus, {})
    total = sum(per_corpus.values())
    if total == 0:
        return 0.0
    entropy = 0.0
    for count in per_corpus.values():
        if count == 0:
            continue
        p = count / total
        entropy -= p * math.log2(p)
    return entropy


# ---------------------------------------------------------------------------
# Popularity and string features
# ---------------------------------------------------------------------------


def popularity_features(
    stats: Optional[EntityStats],
    corpus_inbound: dict[str, int],
    corpus_totals: dict[str, int],
) -> np.ndarray:
    """log1p of the raw popularity counters plus the entity's share of
    all links per corpus."""
    if stats is None:
        stats = EntityStats()
    values = [
        math.log1p(stats.inbound_links),
        math.log1p(stats.page_views),
        math.log1p(stats.redirect_views),
        math.log1p(stats.out_links_total),
        math.log1p(stats.out_links_unique),
    ]
    for corpus in CORPORA:
        total = corpus_totals.get(corpus, 0)
        values.append(corpus_inbound.get(corpus, 0) / total if total else 0.0)
    return np.array(values, dtype=np.float64)


def string_features(surface_text: str, entity_slug: str) -> np.ndarray:
    """Similarity of the surface to the slug (qualifier stripped) plus
    surface morphology counts."""
    slug_text = slug_to_text(entity_slug)
    folded = " ".join(surface_text.lower().split())
    words = surface_text.split()
    word_lengths = [len(w) for w in words] or [0]
    return np.array(
        [
            jaro_winkler(folded, slug_text),
            normalized_damerau_levenshtein(folded, slug_text),
            minhash_jaccard(folded, slug_text),
            float(len(surface_text)),
            float(sum(1 for c in surface_text if c.isupper())),
            float(len(words)),
            float(np.mean(word_lengths)),
            float(max(word_lengths)),
        ],
        dtype=np.float64,
    )


# ---------------------------------------------------------------------------
# Passage context and assembly
# ---------------------------------------------------------------------------


class PassageContext:
    """Per-passage state shared by every candidate: forms with tf/idf and
    vectors, the global centroid, and the density clusters with their
    centroids. Built once, then read-only."""

    def __init__(
        self,
        passage: Passage,
        forms: Sequence[SurfaceForm],
        store: StoreHandle,
        config: FeatureConfig,
    ):
        self.passage = passage
        self.forms = list(forms)
        self.config = config
        tf: dict[str, int] = {}
        for form in self.forms:
            tf[form.phrase_key] = tf.get(form.phrase_key, 0) + 1
        self._idf = {key: idf(key, store) for key in tf}
        vectors = {key: store.get_vector(key) for key in tf}
        # Instance rows drive window features; distinct rows drive the
        # global centroid and clustering.
        self.instance_rows = [
            (f.phrase_key, 1.0, self._idf[f.phrase_key], vectors[f.phrase_key])
            for f in self.forms
        ]
        self.distinct_rows = [
            (key, float(count), self._idf[key], vectors[key])
            for key, count in sorted(tf.items())
        ]
        vectored = [row for row in self.distinct_rows if row[3] is not None]
        self.vectored_rows = vectored
        if vectored:
            self.global_centroid = weighted_centroid(vectored)
            matrix = np.stack([row[3] for row in vectored])
            self.clusters = density_cluster(matrix, config.min_cluster_size)
        else:
            self.global_centroid = None
            self.clusters = ClusterSet(clusters=(), noise=())

    def form_index(self, surface: SurfaceForm) -> int:
        for i, form in enumerate(self.forms):
            if form.start == surface.start and form.end == surface.end:
                return i
        raise ValueError(f"surface {surface} not among passage forms")


def assemble_features(
    context: PassageContext,
    surface: SurfaceForm,
    candidate: EntityId,
    prior: float,
    store: StoreHandle,
) -> np.ndarray:
    """Full fixed-schema feature vector for one candidate."""
    config = context.config
    out = np.zeros(FEATURE_COUNT, dtype=np.float64)
    entity_vector = store.get_vector(entity_token(candidate.value))

    # Semantic slice.
    if entity_vector is not None and context.global_centroid is not None:
        out[_INDEX["cos_global"]] = cosine(entity_vector, context.global_centroid.vector)
        summary = cluster_similarity_summary(
            entity_vector, context.clusters, context.vectored_rows
        )
        out[_INDEX["cluster_sim_max"]] = summary.max
        out[_INDEX["cluster_sim_min"]] = summary.min
        out[_INDEX["cluster_sim_mean"]] = summary.mean
        out[_INDEX["cluster_sim_std"]] = summary.std
        target = context.form_index(surface)
        win_cos, win_euclid, win_count = local_window_features(
            context.instance_rows, target, config.window_w, entity_vector
        )
        out[_INDEX["window_cos"]] = win_cos
        out[_INDEX["window_euclid"]] = win_euclid
        out[_INDEX["window_count"]] = win_count
    else:
        out[_INDEX["window_euclid"]] = MISSING_EUCLID_SENTINEL
        out[_INDEX["semantic_missing"]] = 1.0

    # Anchor slice, one block per corpus.
    anchor = store.get_anchor_stats(surface.phrase_key)
    surface_stats = store.get_surface_stats(surface.phrase_key)
    if anchor is not None:
        for corpus in CORPORA:
            base = _INDEX[f"anchor_p_{corpus}"]
            out[base] = link_probability(anchor, corpus, candidate.value)
            out[base + 1] = normalized_link_rate(anchor, corpus, candidate.value)
            out[base + 2] = anchor_entropy(anchor, corpus)
            out[base + 3] = float(len(anchor.linked.get(corpus, {})))
    if surface_stats is not None:
        for corpus in CORPORA:
            linked, unlinked = surface_stats.counts.get(corpus, (0, 0))
            total = linked + unlinked
            out[_INDEX[f"anchor_surface_link_prob_{corpus}"]] = (
                linked / total if total else 0.0
            )

    # Popularity slice.
    entity_stats = store.get_entity_stats(candidate.value)
    corpus_inbound = {
        corpus: store.get_entity_corpus_links(corpus, candidate.value)
        for corpus in CORPORA
    }
    pop = popularity_features(entity_stats, corpus_inbound, config.corpus_link_totals)
    out[_INDEX["pop_log_inbound"] : _INDEX["pop_log_inbound"] + len(pop)] = pop
    if entity_stats is None:
        out[_INDEX["entity_stats_missing"]] = 1.0

    # String slice; surface text keeps its original casing.
    surface_text = context.passage.normalized[surface.start : surface.end]
    strs = string_features(surface_text, candidate.value)
    out[_INDEX["str_jaro_winkler"] : _INDEX["str_jaro_winkler"] + len(strs)] = strs
    if entity_stats is not None:
        out[_INDEX["str_entity_chars"]] = float(entity_stats.char_count)
        out[_INDEX["str_entity_words"]] = float(entity_stats.word_count)

    out[_INDEX["candidate_prior"]] = prior
    return out
