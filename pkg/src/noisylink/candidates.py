"""Anchor-text statistics aggregation and candidate entity retrieval.

Hyperlink anchors from the ingestion corpora act as a lookup table from
surface forms to the entities they have historically linked to. For
each anchor phrase the aggregator counts, per corpus, how often it
links to each target and how often it occurs unlinked; at query time
candidates come back ranked by the cross-corpus link prior.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

from .corpus import (
    EntityId,
    Passage,
    SurfaceForm,
    normalized_link_spans,
    phrase_key,
    tokenize_unigrams,
)
from .store import CORPORA, AnchorStats, StoreHandle

logger = logging.getLogger(__name__)

DEFAULT_MAX_CANDIDATES = 32


@dataclass(frozen=True)
class CandidateList:
    surface: SurfaceForm
    candidates: tuple[tuple[EntityId, float], ...]
    truncated: bool


def aggregate_anchor_stats(pages: Iterable[dict]) -> dict[str, AnchorStats]:
    """Build per-surface anchor statistics from ingestion pages.

    Linked counts come straight from the link records. Unlinked counts
    scan each page for token-aligned occurrences of every known anchor
    phrase, skipping only spans that are that phrase's own links, so one
    surface's statistics never depend on another's links.
    """
    pages = list(pages)
    stats: dict[str, AnchorStats] = {}

    def entry(surface: str) -> AnchorStats:
        if surface not in stats:
            stats[surface] = AnchorStats(
                linked={c: {} for c in CORPORA}, unlinked={c: 0 for c in CORPORA}
            )
        return stats[surface]

    page_links: list[tuple[Passage, str, list[tuple[int, int, str]]]] = []
    for page in pages:
        corpus = page.get("corpus", "wiki")
        if corpus not in CORPORA:
            raise ValueError(f"unknown corpus tag {corpus!r}")
        passage = Passage.from_text(str(page.get("id", "")), page["text"])
        links = normalized_link_spans(passage, page.get("links", []))
        kept: list[tuple[int, int, str]] = []
        for start, end, target in links:
            anchor = phrase_key(passage.normalized[start:end])
            if not anchor:
                continue
            per_corpus = entry(anchor).linked[corpus]
            per_corpus[target] = per_corpus.get(target, 0) + 1
            kept.append((start, end, anchor))
        page_links.append((passage, corpus, kept))

    # Group anchor phrases by token count for the window scan.
    by_length: dict[int, set[str]] = {}
    for surface in stats:
        length = len(tokenize_unigrams(surface))
        by_length.setdefault(length, set()).add(surface)

    for passage, corpus, kept in page_links:
        tokens = tokenize_unigrams(passage.normalized)
        own_spans = {(start, end, anchor) for start, end, anchor in kept}
        for length, surfaces in by_length.items():
            for i in range(len(tokens) - length + 1):
                span_start = tokens[i][1]
                span_end = tokens[i + length - 1][2]
                key = phrase_key(passage.normalized[span_start:span_end])
                if key not in surfaces:
                    continue
                if (span_start, span_end, key) in own_spans:
                    continue
                stats[key].unlinked[corpus] += 1
    return stats


def candidates(
    surface: SurfaceForm,
    store: StoreHandle,
    max_k: int = DEFAULT_MAX_CANDIDATES,
) -> CandidateList:
    """Retrieve candidate entities for a surface form, ranked by the
    summed-over-corpora link prior. Unknown surfaces yield an empty list.
    """
    stats = store.get_anchor_stats(surface.phrase_key)
    if stats is None:
        return CandidateList(surface=surface, candidates=(), truncated=False)
    merged = stats.merged_counts()
    total = sum(merged.values())
    if total == 0:
        return CandidateList(surface=surface, candidates=(), truncated=False)
    ranked = sorted(
        ((EntityId(entity), count / total) for entity, count in merged.items()),
        key=lambda item: (-item[1], item[0].value),
    )
    truncated = len(ranked) > max_k
    return CandidateList(
        surface=surface, candidates=tuple(ranked[:max_k]), truncated=truncated
    )
