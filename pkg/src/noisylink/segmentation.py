"""Surface form extraction: offline phrase mining and query-time
dynamic-programming segmentation.

Offline, the miner counts sliding n-gram windows, scores candidate
phrases with a trained quality classifier, and re-counts each phrase's
frequency crediting only occurrences chosen as whole segments
("rectified" counts). At query time an exact DP picks, per run of word
tokens, the partition maximizing the sum of segment scores::

    score(seg) = log((rectified + 1) / (total + V)) [+ log(max(quality, eps))]

with the quality term applied to multi-token segments only. Unknown
tokens score a fixed floor. Multi-token segments are only admissible
when the phrase is known; chosen segments whose quality falls below
``min_quality`` are split back into unigrams on output.

Before probing the phrase table for spans starting at a token, the
store's first-token trie is consulted; a rejection skips every probe at
that position without changing the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Sequence, Union

import numpy as np

from .corpus import Passage, SurfaceForm, tokenize_unigrams
from .stopwords import STOPWORDS
from .store import PhraseStats, StoreHandle, decode_u64, encode_u64

QUALITY_EPS = 1e-6

# Reserved 'p' key carrying (total rectified count, distinct phrase count).
TOTALS_KEY = "#totals"


class UndefinedPmiError(ValueError):
    """PMI requested for a phrase or constituent with zero count."""


class DegenerateTrainingError(ValueError):
    """Quality-model training input contains a single class."""


@dataclass
class NgramCounts:
    """Sliding-window counts of 1..max_n token phrases (lowercased,
    space-joined) plus the total word-token count."""

    counts: dict[str, int] = field(default_factory=dict)
    total_tokens: int = 0
    max_n: int = 1

    def get(self, phrase: str) -> int:
        return self.counts.get(phrase, 0)


@dataclass(frozen=True)
class SegmentationParams:
    max_phrase_tokens: int = 6
    min_quality: float = 0.4
    unknown_token_logprob_floor: float = -15.0

    def __post_init__(self) -> None:
        if self.max_phrase_tokens < 1:
            raise ValueError("max_phrase_tokens must be >= 1")
        if not 0.0 <= self.min_quality <= 1.0:
            raise ValueError("min_quality must be in [0, 1]")
        if self.unknown_token_logprob_floor >= 0:
            raise ValueError("unknown_token_logprob_floor must be negative")


def word_token_runs(
    tokens: Sequence[tuple[str, int, int]],
) -> list[list[tuple[str, int, int]]]:
    """Split a token sequence into maximal runs of letter/digit tokens.

    Punctuation tokens terminate runs; phrases never span punctuation.
    """
    runs: list[list[tuple[str, int, int]]] = []
    current: list[tuple[str, int, int]] = []
    for tok in tokens:
        if tok[0][0].isalnum():
            current.append(tok)
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    return runs


def count_ngrams(corpus: Iterable[str], max_n: int) -> NgramCounts:
    """Count every token window of length 1..max_n over normalized docs.

    Windows slide within word-token runs; punctuation breaks them and is
    not counted.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    out = NgramCounts(max_n=max_n)
    counts = out.counts
    for doc in corpus:
        for run in word_token_runs(tokenize_unigrams(doc)):
            words = [t[0].lower() for t in run]
            out.total_tokens += len(words)
            for n in range(1, max_n + 1):
                for i in range(len(words) - n + 1):
                    key = " ".join(words[i : i + n])
                    counts[key] = counts.get(key, 0) + 1
    return out


def phrase_pmi(phrase: str, counts: NgramCounts) -> float:
    """Pointwise mutual information of a phrase against independence.

    Probabilities are windowed counts over the total token count, for the
    phrase and its constituent unigrams alike.
    """
    phrase_count = counts.get(phrase)
    if phrase_count == 0:
        raise UndefinedPmiError(f"phrase {phrase!r} has zero count")
    total = counts.total_tokens
    log_p = math.log2(phrase_count / total)
    for tok in phrase.split(" "):
        tok_count = counts.get(tok)
        if tok_count == 0:
            raise UndefinedPmiError(f"constituent {tok!r} has zero count")
        log_p -= math.log2(tok_count / total)
    return log_p


QUALITY_FEATURE_NAMES = (
    "pmi",
    "stopword_fraction",
    "token_count",
    "mean_token_length",
    "anchor_probability",
    "log1p_raw_frequency",
)


def quality_features(
    phrase: str, counts: NgramCounts, anchor_info: Optional[dict[str, float]] = None
) -> np.ndarray:
    """Fixed-schema feature vector for the phrase quality classifier."""
    tokens = phrase.split(" ")
    try:
        pmi = phrase_pmi(phrase, counts) if len(tokens) > 1 else 0.0
    except UndefinedPmiError:
        pmi = 0.0
    stop_frac = sum(1 for t in tokens if t in STOPWORDS) / len(tokens)
    mean_len = sum(len(t) for t in tokens) / len(tokens)
    anchor_prob = (anchor_info or {}).get(phrase, 0.0)
    return np.array(
        [pmi, stop_frac, float(len(tokens)), mean_len, anchor_prob,
         math.log1p(counts.get(phrase))],
        dtype=np.float64,
    )


@dataclass(frozen=True)
class PhraseQualityModel:
    """Logistic classifier over quality features, with the training-set
    standardization baked in."""

    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_scales: np.ndarray

    def predict(self, features: np.ndarray) -> float:
        z = (np.asarray(features, dtype=np.float64) - self.feature_means) / self.feature_scales
        return float(_sigmoid(float(np.dot(self.weights, z) + self.bias)))

    def predict_batch(self, features: np.ndarray) -> np.ndarray:
        z = (np.asarray(features, dtype=np.float64) - self.feature_means) / self.feature_scales
        return _sigmoid(z @ self.weights + self.bias)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def quality_log_loss(params: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Mean logistic loss for parameter vector [w..., b]."""
    z = X @ params[:-1] + params[-1]
    # log(1 + exp(-m)) computed stably for both signs of the margin
    margins = np.where(y > 0, z, -z)
    return float(np.mean(np.logaddexp(0.0, -margins)))


def quality_log_loss_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Analytic gradient of quality_log_loss."""
    z = X @ params[:-1] + params[-1]
    residual = _sigmoid(z) - y
    grad_w = X.T @ residual / len(y)
    grad_b = float(np.mean(residual))
    return np.concatenate([grad_w, [grad_b]])


def train_quality_model(
    labeled: Sequence[tuple[str, bool]],
    counts: NgramCounts,
    anchor_info: Optional[dict[str, float]] = None,
    epochs: int = 500,
    learning_rate: float = 1.0,
) -> PhraseQualityModel:
    """Fit the logistic quality classifier by full-batch gradient descent.

    The step is halved whenever it would increase the loss, so the
    training loss is non-increasing. Raises DegenerateTrainingError when
    only one class is present.
    """
    if len(labeled) < 2:
        raise DegenerateTrainingError("need at least two labeled phrases")
    y = np.array([1.0 if label else 0.0 for _, label in labeled])
    if y.min() == y.max():
        raise DegenerateTrainingError("labels contain a single class")
    X = np.stack([quality_features(p, counts, anchor_info) for p, _ in labeled])
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    scales[scales == 0.0] = 1.0
    Xz = (X - means) / scales
    params = np.zeros(Xz.shape[1] + 1)
    loss = quality_log_loss(params, Xz, y)
    lr = learning_rate
    for _ in range(epochs):
        grad = quality_log_loss_grad(params, Xz, y)
        while lr > 1e-12:
            candidate = params - lr * grad
            new_loss = quality_log_loss(candidate, Xz, y)
            if new_loss <= loss:
                params, loss = candidate, new_loss
                break
            lr /= 2.0
    return PhraseQualityModel(
        weights=params[:-1], bias=float(params[-1]),
        feature_means=means, feature_scales=scales,
    )


# ---------------------------------------------------------------------------
# Phrase sources
# ---------------------------------------------------------------------------


class PhraseSource(Protocol):
    """Phrase-statistics lookups plus the smoothing constants the DP needs."""

    total_rectified: int
    distinct_phrases: int

    def lookup(self, phrase_key: str) -> Optional[PhraseStats]: ...

    def admits(self, first_token: str, planned_lookups: int) -> bool: ...


class InMemoryPhraseSource:
    """Dict-backed phrase source used during rectification and tests."""

    def __init__(self, stats: dict[str, PhraseStats]):
        self._stats = stats
        self.total_rectified = sum(s.rectified_count for s in stats.values())
        self.distinct_phrases = len(stats)
        self._first_tokens = {k.split(" ", 1)[0] for k in stats}

    def lookup(self, phrase_key: str) -> Optional[PhraseStats]:
        return self._stats.get(phrase_key)

    def admits(self, first_token: str, planned_lookups: int) -> bool:
        return first_token in self._first_tokens


class StorePhraseSource:
    """Store-backed phrase source; gates probes through the prefix trie."""

    def __init__(self, store: StoreHandle, use_trie: bool = True):
        self.store = store
        self.use_trie = use_trie
        raw = store.table.get(b"p|" + TOTALS_KEY.encode("utf-8"))
        if raw is None:
            self.total_rectified = 0
            self.distinct_phrases = 0
        else:
            self.total_rectified = decode_u64(raw[:8])
            self.distinct_phrases = decode_u64(raw[8:])

    def lookup(self, phrase_key: str) -> Optional[PhraseStats]:
        return self.store.get_phrase_stats(phrase_key)

    def admits(self, first_token: str, planned_lookups: int) -> bool:
        if not self.use_trie:
            return True
        return self.store.admits_phrase_start(first_token, planned_lookups)


def encode_totals(total_rectified: int, distinct_phrases: int) -> bytes:
    return encode_u64(total_rectified) + encode_u64(distinct_phrases)


# ---------------------------------------------------------------------------
# Query-time segmentation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunSegmentation:
    """DP result for one word-token run; spans index into the run."""

    segments: tuple[tuple[int, int, Optional[PhraseStats]], ...]
    score: float


def segment_run(
    words: Sequence[str], source: PhraseSource, params: SegmentationParams
) -> RunSegmentation:
    """Exact DP over one run of lowercased word tokens.

    Maximizes the summed segment score; equal-score partitions prefer
    fewer segments, then the lexicographically earliest boundary vector.
    """
    n = len(words)
    denom = math.log(source.total_rectified + max(source.distinct_phrases, 1))
    floor = params.unknown_token_logprob_floor

    # One trie consultation per start position covers every probe there.
    span_scores: dict[tuple[int, int], tuple[float, Optional[PhraseStats]]] = {}
    for j in range(n):
        planned = min(params.max_phrase_tokens, n - j)
        if not source.admits(words[j], planned):
            span_scores[(j, 1)] = (floor, None)
            continue
        for length in range(1, planned + 1):
            key = " ".join(words[j : j + length])
            stats = source.lookup(key)
            if stats is None:
                if length == 1:
                    span_scores[(j, 1)] = (floor, None)
                continue
            score = math.log(stats.rectified_count + 1) - denom
            if length > 1:
                score += math.log(max(stats.quality, QUALITY_EPS))
            span_scores[(j, length)] = (score, stats)

    # best[i]: (score, segment count, boundary tuple, segment tuple) for
    # the prefix of length i; additive scores give optimal substructure
    # under the composite tie key.
    best: list[Optional[tuple[float, int, tuple, tuple]]] = [None] * (n + 1)
    best[0] = (0.0, 0, (), ())
    for i in range(1, n + 1):
        chosen = None
        for length in range(1, min(params.max_phrase_tokens, i) + 1):
            j = i - length
            if (j, length) not in span_scores or best[j] is None:
                continue
            span_score, stats = span_scores[(j, length)]
            prev = best[j]
            cand = (
                prev[0] + span_score,
                prev[1] + 1,
                prev[2] + ((j,) if j > 0 else ()),
                prev[3] + ((j, i, stats),),
            )
            if chosen is None or (-cand[0], cand[1], cand[2]) < (
                -chosen[0], chosen[1], chosen[2]
            ):
                chosen = cand
        best[i] = chosen
    final = best[n]
    if final is None:
        return RunSegmentation(segments=(), score=0.0)
    return RunSegmentation(segments=final[3], score=final[0])


def segment(
    passage: Passage,
    source: Union[PhraseSource, StoreHandle],
    params: Optional[SegmentationParams] = None,
) -> list[SurfaceForm]:
    """Segment a passage into surface forms.

    Word-token runs are partitioned by the DP; punctuation tokens become
    single-token surface forms. Chosen multi-token segments with quality
    below ``min_quality`` are split back into unigrams.
    """
    params = params or SegmentationParams()
    if isinstance(source, StoreHandle):
        source = StorePhraseSource(source)
    tokens = tokenize_unigrams(passage.normalized)
    forms: list[SurfaceForm] = []
    run: list[tuple[str, int, int]] = []

    def flush_run() -> None:
        if not run:
            return
        words = [t[0].lower() for t in run]
        result = segment_run(words, source, params)
        for j, i, stats in result.segments:
            if i - j > 1 and stats is not None and stats.quality < params.min_quality:
                for tok, start, end in run[j:i]:
                    forms.append(SurfaceForm.from_span(passage.normalized, start, end))
            else:
                forms.append(
                    SurfaceForm.from_span(passage.normalized, run[j][1], run[i - 1][2])
                )
        run.clear()

    for tok in tokens:
        if tok[0][0].isalnum():
            run.append(tok)
        else:
            flush_run()
            forms.append(SurfaceForm.from_span(passage.normalized, tok[1], tok[2]))
    flush_run()
    return forms


# ---------------------------------------------------------------------------
# Rectification
# ---------------------------------------------------------------------------


def build_quality_scores(
    counts: NgramCounts,
    model: PhraseQualityModel,
    anchor_info: Optional[dict[str, float]] = None,
) -> dict[str, float]:
    """Quality per counted phrase: model score for multi-token phrases,
    1.0 for unigrams."""
    qualities: dict[str, float] = {}
    multi = [p for p in counts.counts if " " in p]
    if multi:
        X = np.stack([quality_features(p, counts, anchor_info) for p in multi])
        scores = model.predict_batch(X)
        qualities.update(zip(multi, (float(s) for s in scores)))
    for p in counts.counts:
        if " " not in p:
            qualities[p] = 1.0
    return qualities


def rectify_counts(
    corpus: Iterable[str],
    counts: NgramCounts,
    quality_model: PhraseQualityModel,
    params: Optional[SegmentationParams] = None,
    anchor_info: Optional[dict[str, float]] = None,
    qualities: Optional[dict[str, float]] = None,
) -> dict[str, int]:
    """Re-segment the corpus and credit a phrase once per time it is
    chosen as a whole segment. Rectified counts never exceed raw counts.
    """
    params = params or SegmentationParams()
    if qualities is None:
        qualities = build_quality_scores(counts, quality_model, anchor_info)
    # First pass seeds the segmenter with raw window counts.
    stats = {
        p: PhraseStats(quality=qualities[p], rectified_count=c, raw_count=c)
        for p, c in counts.counts.items()
    }
    source = InMemoryPhraseSource(stats)
    rectified: dict[str, int] = {}
    for doc in corpus:
        for run in word_token_runs(tokenize_unigrams(doc)):
            words = [t[0].lower() for t in run]
            result = segment_run(words, source, params)
            for j, i, seg_stats in result.segments:
                # Mirror segment(): low-quality multi-token choices are
                # returned as unigrams and credited as such.
                if i - j > 1 and seg_stats is not None and seg_stats.quality < params.min_quality:
                    for w in words[j:i]:
                        rectified[w] = rectified.get(w, 0) + 1
                else:
                    key = " ".join(words[j:i])
                    rectified[key] = rectified.get(key, 0) + 1
    return rectified
