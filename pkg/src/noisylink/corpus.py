"""Core domain types, text normalization, and the gold-annotation format.

Everything downstream (segmentation, candidate retrieval, features,
evaluation) shares these types. All character offsets are Unicode scalar
value indices into the *normalized* text, never bytes.
"""

from __future__ import annotations

import json
import logging
import unicodedata
from bisect import bisect_left
from dataclasses import dataclass
from typing import Optional, Sequence

logger = logging.getLogger(__name__)


class GoldFormatError(ValueError):
    """Raised when a gold JSONL file is malformed or fails validation."""


@dataclass(frozen=True)
class Passage:
    """A unit of input text plus its normalized form.

    ``offset_map[i]`` gives the index into ``text`` of the original
    character that produced ``normalized[i]``. The mapping is
    monotonically non-decreasing.
    """

    id: str
    text: str
    normalized: str
    offset_map: tuple[int, ...]

    @classmethod
    def from_text(cls, passage_id: str, text: str) -> "Passage":
        normalized, offset_map = normalize_text(text)
        return cls(id=passage_id, text=text, normalized=normalized, offset_map=offset_map)

    def original_slice(self, start: int, end: int) -> str:
        """Recover the original-text slice behind normalized[start:end]."""
        if start >= end:
            return ""
        lo = self.offset_map[start]
        hi = self.offset_map[end - 1] + 1
        return self.text[lo:hi]


@dataclass(frozen=True)
class SurfaceForm:
    """A span of normalized passage text that may denote a KB entity.

    ``phrase_key`` is the lookup key everywhere: lowercased and
    whitespace-collapsed.
    """

    start: int
    end: int
    phrase_key: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    @classmethod
    def from_span(cls, normalized: str, start: int, end: int) -> "SurfaceForm":
        if end > len(normalized):
            raise ValueError(f"span end {end} beyond text length {len(normalized)}")
        return cls(start=start, end=end, phrase_key=phrase_key(normalized[start:end]))


@dataclass(frozen=True, order=True)
class EntityId:
    """A knowledge-base entry identifier in URL-slug style."""

    value: str

    def __post_init__(self) -> None:
        if not self.value:
            raise ValueError("entity id must be non-empty")
        if any(c.isspace() for c in self.value):
            raise ValueError(f"entity id contains whitespace: {self.value!r}")


@dataclass(frozen=True)
class GoldAnnotation:
    """One manually linked surface form.

    Offsets are optional: document-level annotations carry only the
    surface string and the entity. ``entity`` is None for mentions
    annotated as having no KB entry (abstain supervision).
    """

    passage_id: str
    surface: str
    entity: Optional[EntityId]
    start: Optional[int] = None
    end: Optional[int] = None


@dataclass(frozen=True)
class LinkPrediction:
    """The linking decision for one surface form.

    ``abstained`` is True exactly when ``entity`` is None.
    ``ranked_candidates`` is sorted by score descending, ties broken by
    entity id.
    """

    surface_form: SurfaceForm
    entity: Optional[EntityId]
    score: float
    abstained: bool
    ranked_candidates: tuple[tuple[EntityId, float], ...]

    def __post_init__(self) -> None:
        if self.abstained != (self.entity is None):
            raise ValueError("abstained must hold exactly when entity is None")


def normalize_text(raw: str) -> tuple[str, tuple[int, ...]]:
    """Normalize raw text and return (normalized, offset_map).

    Applies Unicode NFC, collapses whitespace runs to single spaces, and
    strips leading/trailing whitespace. ``offset_map`` maps every
    normalized character position back to an index into ``raw``.

    NFC may merge several raw characters into one; the merged character
    maps to the first raw index of its composition sequence.
    """
    out: list[str] = []
    offsets: list[int] = []
    pending_space = False
    seen_char = False
    i = 0
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch.isspace():
            pending_space = seen_char
            i += 1
            continue
        # Compose the longest NFC run starting here so combining marks
        # collapse onto their base character.
        j = i + 1
        while j < n and unicodedata.combining(raw[j]):
            j += 1
        composed = unicodedata.normalize("NFC", raw[i:j])
        if pending_space:
            out.append(" ")
            offsets.append(i - 1 if i > 0 and raw[i - 1].isspace() else i)
            pending_space = False
        for ch_out in composed:
            out.append(ch_out)
            offsets.append(i)
        seen_char = True
        i = j
    return "".join(out), tuple(offsets)


def phrase_key(text: str) -> str:
    """Lowercase and whitespace-collapse a string into its lookup key."""
    return " ".join(text.lower().split())


def tokenize_unigrams(normalized: str) -> list[tuple[str, int, int]]:
    """Split normalized text into (token, start, end) triples.

    Tokens are maximal runs of letters/digits, or single punctuation
    marks. Spaces separate tokens and belong to none.
    """
    tokens: list[tuple[str, int, int]] = []
    i = 0
    n = len(normalized)
    while i < n:
        ch = normalized[i]
        if ch == " ":
            i += 1
            continue
        if ch.isalnum():
            j = i + 1
            while j < n and normalized[j].isalnum():
                j += 1
            tokens.append((normalized[i:j], i, j))
            i = j
        else:
            tokens.append((ch, i, i + 1))
            i += 1
    return tokens


def normalized_link_spans(
    passage: Passage, links: Sequence[dict]
) -> list[tuple[int, int, str]]:
    """Map ingestion link spans from original-text to normalized offsets.

    Links with empty targets are dropped with a warning, as is the later
    of any two overlapping spans.
    """
    mapped: list[tuple[int, int, str]] = []
    for link in links:
        target = link.get("target", "")
        if not target:
            logger.warning("passage %s: link with empty target skipped", passage.id)
            continue
        start, end = int(link["start"]), int(link["end"])
        norm_start = bisect_left(passage.offset_map, start)
        norm_end = bisect_left(passage.offset_map, end)
        if norm_start >= norm_end:
            continue
        mapped.append((norm_start, norm_end, target))
    mapped.sort(key=lambda item: (item[0], item[1]))
    result: list[tuple[int, int, str]] = []
    last_end = -1
    for start, end, target in mapped:
        if start < last_end:
            logger.warning(
                "passage %s: overlapping link to %s skipped", passage.id, target
            )
            continue
        result.append((start, end, target))
        last_end = end
    return result


def parse_gold(path: str) -> list[tuple[Passage, list[GoldAnnotation]]]:
    """Parse a gold JSONL file into passages with their annotations.

    Each line is one object: ``{"id", "text", "links": [{"surface",
    "start"?, "end"?, "entity"}]}``. Offsets, when present, index the
    normalized text and must normalize to the surface string. A null
    entity marks a mention with no KB entry.
    """
    results: list[tuple[Passage, list[GoldAnnotation]]] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GoldFormatError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            try:
                passage = Passage.from_text(str(obj["id"]), obj["text"])
                raw_links = obj.get("links", [])
            except (KeyError, TypeError) as exc:
                raise GoldFormatError(f"line {lineno}: missing id or text") from exc
            if passage.id in seen_ids:
                raise GoldFormatError(f"line {lineno}: duplicate passage id {passage.id!r}")
            seen_ids.add(passage.id)
            annotations: list[GoldAnnotation] = []
            for link in raw_links:
                annotations.append(_parse_link(passage, link, lineno))
            results.append((passage, annotations))
    return results


def _parse_link(passage: Passage, link: dict, lineno: int) -> GoldAnnotation:
    try:
        surface = link["surface"]
        entity_raw = link["entity"]
    except (KeyError, TypeError) as exc:
        raise GoldFormatError(f"line {lineno}: link missing surface or entity") from exc
    entity = EntityId(entity_raw) if entity_raw is not None else None
    start = link.get("start")
    end = link.get("end")
    if (start is None) != (end is None):
        raise GoldFormatError(f"line {lineno}: start and end must be given together")
    if start is not None:
        if not (0 <= start < end <= len(passage.normalized)):
            raise GoldFormatError(
                f"line {lineno}: offsets [{start}, {end}) out of range for "
                f"passage {passage.id!r} of length {len(passage.normalized)}"
            )
        if phrase_key(passage.normalized[start:end]) != phrase_key(surface):
            raise GoldFormatError(
                f"line {lineno}: span text {passage.normalized[start:end]!r} "
                f"does not normalize to surface {surface!r}"
            )
    return GoldAnnotation(
        passage_id=passage.id, surface=surface, entity=entity, start=start, end=end
    )
