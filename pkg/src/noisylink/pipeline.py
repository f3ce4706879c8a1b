"""End-to-end orchestration: offline asset building, real-time linking,
evaluation, benchmarking, and uncertainty export.

The offline pipeline turns ingestion corpora plus labeled phrases and
gold links into an asset bundle: one sorted table holding every
namespace, the phrase prefix trie, the trained ranker and abstain
models, and a meta.json tying the versions together. Linking then runs
normalize -> segment -> candidates -> features -> rank -> abstain per
passage against an opened bundle.
"""

from __future__ import annotations

import json
import logging
import math
import os
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import candidates as candidates_mod
from .candidates import aggregate_anchor_stats, candidates
from .corpus import (
    EntityId,
    GoldAnnotation,
    LinkPrediction,
    Passage,
    SurfaceForm,
    normalize_text,
    parse_gold,
    phrase_key,
)
from .embedding import (
    EmbeddingTrainConfig,
    entity_token,
    prepare_training_corpus,
    train_embeddings,
    vector_store_key,
)
from .features import (
    FEATURE_NAMES,
    SCHEMA_VERSION,
    FeatureConfig,
    PassageContext,
    assemble_features,
)
from .ranking import (
    AbstainModel,
    RankerModel,
    TrainingExample,
    cross_validate,
    generate_training_data,
    resolve_gold_span,
    score_candidates,
    should_abstain,
    splice_form,
    train_abstain,
    train_ranker,
)
from .segmentation import (
    InMemoryPhraseSource,
    SegmentationParams,
    StorePhraseSource,
    TOTALS_KEY,
    build_quality_scores,
    count_ngrams,
    encode_totals,
    rectify_counts,
    segment,
    train_quality_model,
)
from .store import (
    CORPORA,
    DF_KEY_PREFIX,
    DOC_COUNT_KEY,
    ENTITY_LINKS_PREFIX,
    AnchorStats,
    EntityStats,
    LruCacheConfig,
    PhraseStats,
    StoreHandle,
    SurfaceStats,
    build_prefix_trie,
    build_table,
    encode_anchor_stats,
    encode_entity_stats,
    encode_phrase_stats,
    encode_surface_stats,
    encode_u64,
    encode_vector,
    full_key,
    open_store,
)

logger = logging.getLogger(__name__)

META_FILENAME = "meta.json"
STORE_FILENAME = "store.kv"
TRIE_FILENAME = "prefix.trie"
RANKER_FILENAME = "ranker.model"
ABSTAIN_FILENAME = "abstain.model"


class BuildStageError(RuntimeError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class BuildConfig:
    seed: int = 0
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    embedding: EmbeddingTrainConfig = field(default_factory=EmbeddingTrainConfig)
    window_w: int = 5
    min_cluster_size: int = 3
    max_candidates: int = 32
    negatives_per_positive: int = 4
    ranker_kind: str = "gbt"
    abstain_kind: str = "pairwise-linear"
    ranker_params: dict = field(default_factory=dict)
    abstain_params: dict = field(default_factory=dict)
    cv_space: dict = field(default_factory=dict)
    cv_folds: int = 3
    cv_iterations: int = 0  # 0 skips the random search and uses ranker_params


@dataclass
class AssetBundle:
    directory: str

    @property
    def meta_path(self) -> str:
        return os.path.join(self.directory, META_FILENAME)

    @property
    def store_path(self) -> str:
        return os.path.join(self.directory, STORE_FILENAME)

    @property
    def trie_path(self) -> str:
        return os.path.join(self.directory, TRIE_FILENAME)

    @property
    def ranker_path(self) -> str:
        return os.path.join(self.directory, RANKER_FILENAME)

    @property
    def abstain_path(self) -> str:
        return os.path.join(self.directory, ABSTAIN_FILENAME)


class BundleHandle:
    """An opened bundle: shared store handle, models, and configuration."""

    def __init__(
        self,
        bundle: AssetBundle,
        cache_config: Optional[LruCacheConfig] = None,
        use_trie: bool = True,
    ):
        self.bundle = bundle
        with open(bundle.meta_path, "r", encoding="utf-8") as fh:
            self.meta = json.load(fh)
        if self.meta.get("schema_version") != SCHEMA_VERSION:
            raise BuildStageError(
                "open", ValueError("meta.json schema version mismatch")
            )
        self.store = open_store(bundle.store_path, bundle.trie_path, cache_config)
        self.ranker = RankerModel.load(bundle.ranker_path)
        self.abstain = AbstainModel.load(bundle.abstain_path)
        seg = self.meta["segmentation"]
        self.seg_params = SegmentationParams(
            max_phrase_tokens=seg["max_phrase_tokens"],
            min_quality=seg["min_quality"],
            unknown_token_logprob_floor=seg["unknown_token_logprob_floor"],
        )
        self.feature_config = FeatureConfig(
            window_w=self.meta["window_w"],
            min_cluster_size=self.meta["min_cluster_size"],
            max_candidates=self.meta["max_candidates"],
            corpus_link_totals=dict(self.meta["corpus_link_totals"]),
        )
        self.source = StorePhraseSource(self.store, use_trie=use_trie)

    def close(self) -> None:
        self.store.close()


def open_bundle(
    directory: str,
    cache_config: Optional[LruCacheConfig] = None,
    use_trie: bool = True,
) -> BundleHandle:
    return BundleHandle(AssetBundle(directory), cache_config, use_trie)


# ---------------------------------------------------------------------------
# Offline asset building
# ---------------------------------------------------------------------------


def load_pages(paths: Sequence[str]) -> list[dict]:
    pages = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    pages.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed JSON ({exc.msg})")
    return pages


def load_labeled_phrases(path: str) -> list[tuple[str, bool]]:
    labeled = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                phrase, label = line.split("\t")
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected phrase<TAB>{{0,1}}")
            labeled.append((phrase_key(phrase), label.strip() == "1"))
    return labeled


def _anchor_probabilities(pages: Sequence[dict], counts) -> dict[str, float]:
    """Fraction of a phrase's windowed occurrences that are link anchors."""
    anchored: dict[str, int] = {}
    for page in pages:
        for link in page.get("links", []):
            anchor = phrase_key(link.get("anchor", ""))
            if anchor:
                anchored[anchor] = anchored.get(anchor, 0) + 1
    return {
        phrase: min(1.0, hits / counts.counts[phrase])
        for phrase, hits in anchored.items()
        if counts.counts.get(phrase)
    }


def build_assets(
    corpus_paths: Sequence[str],
    phrases_path: str,
    gold_path: str,
    out_dir: str,
    config: Optional[BuildConfig] = None,
) -> AssetBundle:
    """Run the full offline pipeline and write the asset bundle.

    Stage failures abort with the stage name and remove the partial
    bundle. A fixed seed reproduces every byte of the output.
    """
    config = config or BuildConfig()
    os.makedirs(out_dir, exist_ok=True)
    bundle = AssetBundle(out_dir)
    created: list[str] = []
    stage = "load_corpus"
    try:
        pages = load_pages(corpus_paths)
        page_texts = [normalize_text(p["text"])[0] for p in pages]

        stage = "count_ngrams"
        counts = count_ngrams(page_texts, config.segmentation.max_phrase_tokens)
        if not counts.counts:
            raise ValueError("corpus produced no n-grams")

        stage = "train_quality_model"
        labeled = load_labeled_phrases(phrases_path)
        anchor_info = _anchor_probabilities(pages, counts)
        quality_model = train_quality_model(labeled, counts, anchor_info)
        qualities = build_quality_scores(counts, quality_model, anchor_info)

        stage = "rectify_counts"
        rectified = rectify_counts(
            page_texts, counts, quality_model, config.segmentation,
            anchor_info, qualities,
        )

        stage = "aggregate_anchor_stats"
        anchor_stats = aggregate_anchor_stats(pages)

        stage = "select_phrases"
        phrase_entries = _select_phrases(
            counts, rectified, qualities, anchor_stats, config.segmentation
        )
        source = InMemoryPhraseSource(phrase_entries)

        stage = "prepare_training_corpus"
        sentences = list(
            prepare_training_corpus(pages, source, config.segmentation)
        )

        stage = "train_embeddings"
        table = train_embeddings(sentences, config.embedding)

        stage = "document_frequencies"
        doc_freq, doc_count = _document_frequencies(
            page_texts, source, config.segmentation
        )

        stage = "entity_statistics"
        entity_stats, entity_corpus_links, corpus_link_totals = _entity_statistics(pages)

        stage = "build_table"
        entries = _assemble_entries(
            table, phrase_entries, source, anchor_stats,
            entity_stats, entity_corpus_links, doc_freq, doc_count,
        )
        build_table(entries, bundle.store_path)
        created.append(bundle.store_path)

        stage = "build_prefix_trie"
        build_prefix_trie(sorted(phrase_entries), bundle.trie_path)
        created.append(bundle.trie_path)

        stage = "write_meta"
        meta = {
            "format_version": 1,
            "schema_version": SCHEMA_VERSION,
            "feature_names": list(FEATURE_NAMES),
            "embedding_dim": config.embedding.dim,
            "segmentation": {
                "max_phrase_tokens": config.segmentation.max_phrase_tokens,
                "min_quality": config.segmentation.min_quality,
                "unknown_token_logprob_floor": config.segmentation.unknown_token_logprob_floor,
                "total_rectified": source.total_rectified,
                "distinct_phrases": source.distinct_phrases,
            },
            "window_w": config.window_w,
            "min_cluster_size": config.min_cluster_size,
            "max_candidates": config.max_candidates,
            "corpus_link_totals": corpus_link_totals,
            "doc_count": doc_count,
            "seed": config.seed,
            "ranker_kind": config.ranker_kind,
            "abstain_kind": config.abstain_kind,
        }
        with open(bundle.meta_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, sort_keys=True, indent=2)
        created.append(bundle.meta_path)

        stage = "generate_training_data"
        store = open_store(bundle.store_path, bundle.trie_path)
        feature_config = FeatureConfig(
            window_w=config.window_w,
            min_cluster_size=config.min_cluster_size,
            max_candidates=config.max_candidates,
            corpus_link_totals=corpus_link_totals,
        )
        gold = parse_gold(gold_path)
        examples, skipped = generate_training_data(
            gold, store, feature_config, config.segmentation,
            config.negatives_per_positive, config.seed,
        )
        if skipped:
            logger.info("training data: %d gold links skipped", skipped)
        if not examples:
            raise ValueError("no usable training examples")

        stage = "cross_validate"
        ranker_params = dict(config.ranker_params)
        if config.cv_iterations > 0 and config.cv_space:
            best, _scores = cross_validate(
                examples, config.cv_space, config.cv_folds,
                config.cv_iterations, config.seed, config.ranker_kind,
            )
            ranker_params.update(best)

        stage = "train_ranker"
        ranker = train_ranker(
            examples, ranker_params, kind=config.ranker_kind, seed=config.seed
        )
        ranker.save(bundle.ranker_path)
        created.append(bundle.ranker_path)

        stage = "train_abstain"
        abstain_examples = build_abstain_examples(
            gold, store, ranker, feature_config, config.segmentation
        )
        abstain = train_abstain(
            abstain_examples, config.abstain_params,
            kind=config.abstain_kind, seed=config.seed,
        )
        abstain.save(bundle.abstain_path)
        created.append(bundle.abstain_path)
        store.close()
    except Exception as exc:
        for path in created:
            if os.path.exists(path):
                os.remove(path)
        if isinstance(exc, BuildStageError):
            raise
        raise BuildStageError(stage, exc) from exc
    return bundle


def _select_phrases(
    counts, rectified: dict[str, int], qualities: dict[str, float],
    anchor_stats: dict[str, AnchorStats], params: SegmentationParams,
) -> dict[str, PhraseStats]:
    """Choose the phrase store contents: every unigram, plus multi-token
    phrases that were chosen during rectification, passed the quality
    bar, or occur as link anchors."""
    selected: dict[str, PhraseStats] = {}
    for phrase, raw in counts.counts.items():
        quality = qualities.get(phrase, 0.0)
        rect = rectified.get(phrase, 0)
        keep = (
            " " not in phrase
            or rect > 0
            or quality >= params.min_quality
            or phrase in anchor_stats
        )
        if keep:
            selected[phrase] = PhraseStats(
                quality=quality, rectified_count=rect, raw_count=raw
            )
    return selected


def _document_frequencies(
    page_texts: Sequence[str], source, params: SegmentationParams
) -> tuple[dict[str, int], int]:
    doc_freq: dict[str, int] = {}
    count = 0
    for text in page_texts:
        count += 1
        passage = Passage.from_text(f"doc{count}", text)
        keys = {f.phrase_key for f in segment(passage, source, params)}
        for key in keys:
            doc_freq[key] = doc_freq.get(key, 0) + 1
    return doc_freq, count


def _entity_statistics(
    pages: Sequence[dict],
) -> tuple[dict[str, EntityStats], dict[str, dict[str, int]], dict[str, int]]:
    inbound: dict[str, int] = {}
    per_corpus_inbound: dict[str, dict[str, int]] = {c: {} for c in CORPORA}
    corpus_totals = {c: 0 for c in CORPORA}
    page_meta: dict[str, dict] = {}
    for page in pages:
        corpus = page.get("corpus", "wiki")
        links = page.get("links", [])
        for link in links:
            target = link.get("target", "")
            if not target:
                continue
            inbound[target] = inbound.get(target, 0) + 1
            bucket = per_corpus_inbound[corpus]
            bucket[target] = bucket.get(target, 0) + 1
            corpus_totals[corpus] += 1
        if corpus == "wiki":
            page_meta[str(page.get("id", ""))] = page

    stats: dict[str, EntityStats] = {}
    entity_ids = set(inbound) | set(page_meta)
    for entity in entity_ids:
        page = page_meta.get(entity)
        if page is not None:
            text = page.get("text", "")
            targets = [l.get("target", "") for l in page.get("links", [])]
            targets = [t for t in targets if t]
            stats[entity] = EntityStats(
                inbound_links=inbound.get(entity, 0),
                page_views=int(page.get("page_views", 0)),
                redirect_views=int(page.get("redirect_views", 0)),
                out_links_total=len(targets),
                out_links_unique=len(set(targets)),
                char_count=len(text),
                word_count=len(text.split()),
            )
        else:
            stats[entity] = EntityStats(inbound_links=inbound.get(entity, 0))
    per_corpus = {
        corpus: dict(bucket) for corpus, bucket in per_corpus_inbound.items()
    }
    return stats, per_corpus, corpus_totals


def _assemble_entries(
    table, phrase_entries: dict[str, PhraseStats], source,
    anchor_stats: dict[str, AnchorStats],
    entity_stats: dict[str, EntityStats],
    entity_corpus_links: dict[str, dict[str, int]],
    doc_freq: dict[str, int], doc_count: int,
) -> list[tuple[bytes, bytes]]:
    entries: list[tuple[bytes, bytes]] = []
    for token, vector in table.vectors.items():
        entries.append((full_key("v", vector_store_key(token)), encode_vector(vector)))
    for phrase, stats in phrase_entries.items():
        entries.append((full_key("p", phrase), encode_phrase_stats(stats)))
    entries.append(
        (
            full_key("p", TOTALS_KEY),
            encode_totals(source.total_rectified, source.distinct_phrases),
        )
    )
    for surface, stats in anchor_stats.items():
        entries.append((full_key("a", surface), encode_anchor_stats(stats)))
    for entity, stats in entity_stats.items():
        entries.append((full_key("e", entity), encode_entity_stats(stats)))
    for corpus, bucket in entity_corpus_links.items():
        for entity, count in bucket.items():
            entries.append(
                (
                    full_key("e", f"{ENTITY_LINKS_PREFIX}{corpus}|{entity}"),
                    encode_u64(count),
                )
            )
    for surface, stats in anchor_stats.items():
        counts_by_corpus = {
            corpus: (stats.total_linked(corpus), stats.unlinked.get(corpus, 0))
            for corpus in CORPORA
        }
        entries.append(
            (
                full_key("s", surface),
                encode_surface_stats(SurfaceStats(counts=counts_by_corpus)),
            )
        )
    for term, df in doc_freq.items():
        entries.append((full_key("s", DF_KEY_PREFIX + term), encode_u64(df)))
    entries.append((full_key("s", DOC_COUNT_KEY), encode_u64(doc_count)))
    # Vector keys can repeat a phrase key only if two tokens map to one
    # store key, which vector_store_key construction rules out.
    entries.sort(key=lambda kv: kv[0])
    return entries


def build_abstain_examples(
    gold: Sequence[tuple[Passage, Sequence[GoldAnnotation]]],
    store: StoreHandle,
    ranker: RankerModel,
    feature_config: FeatureConfig,
    seg_params: SegmentationParams,
) -> list[tuple[np.ndarray, bool]]:
    """Top-ranked-candidate features per gold mention, labeled link when
    the mention carries an entity and none when annotated null."""
    examples: list[tuple[np.ndarray, bool]] = []
    for passage, annotations in gold:
        if not annotations:
            continue
        forms = segment(passage, store, seg_params)
        resolved = []
        for annotation in annotations:
            target = resolve_gold_span(passage, annotation)
            if target is None:
                continue
            forms = splice_form(forms, target)
            resolved.append((annotation, target))
        if not resolved:
            continue
        context = PassageContext(passage, forms, store, feature_config)
        for annotation, target in resolved:
            cand_list = candidates(target, store, feature_config.max_candidates)
            if not cand_list.candidates:
                continue
            scored = [
                (entity, assemble_features(context, target, entity, prior, store))
                for entity, prior in cand_list.candidates
            ]
            ranked = score_candidates(ranker, scored)
            top_features = scored[ranked[0][0]][1]
            examples.append((top_features, annotation.entity is not None))
    return examples


# ---------------------------------------------------------------------------
# Real-time linking
# ---------------------------------------------------------------------------


def link_passage(text: str, bundle: BundleHandle) -> list[LinkPrediction]:
    """Link one passage end to end; pure for a fixed bundle."""
    passage = Passage.from_text("query", text)
    forms = segment(passage, bundle.source, bundle.seg_params)
    if not forms:
        return []
    context = PassageContext(passage, forms, bundle.store, bundle.feature_config)
    predictions: list[LinkPrediction] = []
    for form in forms:
        try:
            prediction = _link_form(form, context, bundle)
        except Exception:
            logger.warning(
                "linking failed for %r at [%d, %d)",
                form.phrase_key, form.start, form.end, exc_info=True,
            )
            continue
        if prediction is not None:
            predictions.append(prediction)
    return predictions


def _link_form(
    form: SurfaceForm, context: PassageContext, bundle: BundleHandle
) -> Optional[LinkPrediction]:
    cand_list = candidates(form, bundle.store, bundle.feature_config.max_candidates)
    if not cand_list.candidates:
        return None
    scored = [
        (entity, assemble_features(context, form, entity, prior, bundle.store))
        for entity, prior in cand_list.candidates
    ]
    ranked = score_candidates(bundle.ranker, scored)
    top_index, top_score = ranked[0]
    top_entity = scored[top_index][0]
    abstained = should_abstain(bundle.abstain, scored[top_index][1])
    return LinkPrediction(
        surface_form=form,
        entity=None if abstained else top_entity,
        score=top_score,
        abstained=abstained,
        ranked_candidates=tuple(
            (scored[i][0], score) for i, score in ranked
        ),
    )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    mode: str
    per_document: dict[str, dict]


def _prf(tp: float, fp: float, fn: float) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2 * precision * recall / (precision + recall) if precision + recall else 0.0
    )
    return precision, recall, f1


def evaluate(
    predictions: dict[str, Sequence[LinkPrediction]],
    gold: Sequence[tuple[Passage, Sequence[GoldAnnotation]]],
    mode: str = "doc",
) -> EvalReport:
    """Micro-averaged precision/recall/F1 against gold annotations.

    ``doc`` mode compares per-document entity sets; ``span`` mode also
    requires exact offsets. Precision with zero predictions is 0.
    """
    if mode not in ("doc", "span"):
        raise ValueError(f"unknown evaluation mode {mode!r}")
    gold_ids = {passage.id for passage, _ in gold}
    unknown = set(predictions) - gold_ids
    if unknown:
        raise ValueError(f"predictions reference unknown passage ids: {sorted(unknown)}")
    tp = fp = fn = 0.0
    per_document: dict[str, dict] = {}
    for passage, annotations in gold:
        preds = [p for p in predictions.get(passage.id, []) if not p.abstained]
        if mode == "doc":
            pred_set = {p.entity.value for p in preds}
            gold_set = {a.entity.value for a in annotations if a.entity is not None}
            doc_tp = len(pred_set & gold_set)
            doc_fp = len(pred_set - gold_set)
            doc_fn = len(gold_set - pred_set)
        else:
            pred_spans = {
                (p.surface_form.start, p.surface_form.end, p.entity.value)
                for p in preds
            }
            gold_spans = {
                (a.start, a.end, a.entity.value)
                for a in annotations
                if a.entity is not None and a.start is not None
            }
            doc_tp = len(pred_spans & gold_spans)
            doc_fp = len(pred_spans - gold_spans)
            # Offset-free gold links can never match in span mode.
            unmatched_docless = sum(
                1 for a in annotations if a.entity is not None and a.start is None
            )
            doc_fn = len(gold_spans - pred_spans) + unmatched_docless
        tp += doc_tp
        fp += doc_fp
        fn += doc_fn
        p, r, f1 = _prf(doc_tp, doc_fp, doc_fn)
        per_document[passage.id] = {
            "tp": doc_tp, "fp": doc_fp, "fn": doc_fn,
            "precision": p, "recall": r, "f1": f1,
        }
    precision, recall, f1 = _prf(tp, fp, fn)
    return EvalReport(
        precision=precision, recall=recall, f1=f1, mode=mode,
        per_document=per_document,
    )


def annotator_agreement(
    annotations_a: dict[str, set[str]], annotations_b: dict[str, set[str]]
) -> float:
    """Mean per-document Jaccard overlap of two annotators' entity sets."""
    if set(annotations_a) != set(annotations_b):
        raise ValueError("annotator document ids do not match")
    if not annotations_a:
        return 1.0
    total = 0.0
    for doc_id, set_a in annotations_a.items():
        set_b = annotations_b[doc_id]
        union = set_a | set_b
        total += len(set_a & set_b) / len(union) if union else 1.0
    return total / len(annotations_a)


# ---------------------------------------------------------------------------
# Benchmarking and uncertainty export
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchReport:
    docs_per_sec: float
    docs_processed: int
    cache_hit_rates: dict[str, float]
    trie_avoided: int
    trie_avoided_pct: float
    peak_cache_entries: dict[str, int]
    capacities: dict[str, Optional[int]]
    threads: int


def bench(
    texts: Sequence[str],
    bundle: BundleHandle,
    warmup_docs: Optional[int] = None,
    threads: int = 1,
) -> BenchReport:
    """Steady-state throughput over a document list, excluding a warm-up
    pass, plus cache and trie-filter effectiveness counters."""
    texts = list(texts)
    if not texts:
        raise ValueError("bench needs at least one document")
    warmup = len(texts) if warmup_docs is None else min(warmup_docs, len(texts))
    for text in texts[:warmup]:
        link_passage(text, bundle)
    peak = bundle.store.cache_entry_counts()
    before = bundle.store.cache_stats()
    started = time.perf_counter()
    if threads <= 1:
        for text in texts:
            link_passage(text, bundle)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda t: link_passage(t, bundle), texts))
    elapsed = time.perf_counter() - started
    after = bundle.store.cache_stats()
    for ns, count in bundle.store.cache_entry_counts().items():
        peak[ns] = max(peak[ns], count)
    hit_rates = {}
    for ns in after.hits:
        hits = after.hits[ns] - before.hits[ns]
        misses = after.misses[ns] - before.misses[ns]
        hit_rates[ns] = hits / (hits + misses) if hits + misses else 0.0
    avoided = after.trie_rejections["p"] - before.trie_rejections["p"]
    p_lookups = (
        after.hits["p"] + after.misses["p"] - before.hits["p"] - before.misses["p"]
    )
    return BenchReport(
        docs_per_sec=len(texts) / elapsed if elapsed > 0 else float("inf"),
        docs_processed=len(texts),
        cache_hit_rates=hit_rates,
        trie_avoided=avoided,
        trie_avoided_pct=avoided / (avoided + p_lookups) if avoided + p_lookups else 0.0,
        peak_cache_entries=peak,
        capacities=dict(bundle.store.cache_config.capacities),
        threads=threads,
    )


def export_uncertain(
    bundle: BundleHandle, passages: Sequence[tuple[str, str]], k: int
) -> list[dict]:
    """The k least-certain predictions (smallest top-two score margin)
    across the given (id, text) passages, ascending by margin."""
    records: list[dict] = []
    for passage_id, text in passages:
        for prediction in link_passage(text, bundle):
            ranked = prediction.ranked_candidates
            margin = (
                ranked[0][1] - ranked[1][1] if len(ranked) > 1 else math.inf
            )
            records.append(
                {
                    "passage_id": passage_id,
                    "text": text,
                    "surface": prediction.surface_form.phrase_key,
                    "start": prediction.surface_form.start,
                    "end": prediction.surface_form.end,
                    "margin": margin,
                    "candidates": [
                        {"entity": e.value, "score": s} for e, s in ranked[:2]
                    ],
                }
            )
    records.sort(key=lambda r: (r["margin"], r["passage_id"], r["start"]))
    return records[:k]
