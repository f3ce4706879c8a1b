"""Tiered, compute-local metadata storage.

Three layers, coldest to hottest:

1. A single-file sorted key-value table (``TableFile``): binary-searched
   point lookups, values read lazily from disk so opening a store never
   touches the data region.
2. Per-namespace LRU caches holding values in deserialized form, so a hit
   skips both the disk read and the decode.
3. A trie over the first tokens of all stored phrase keys, consulted by
   segmentation before any 'p' lookup to skip guaranteed misses.

Table file layout (little-endian throughout)::

    magic "PGKV1\\0" | u32 version=1 | u64 entry_count
    index: entry_count x (u64 key_offset, u64 value_offset)
    key region:   per entry, u32 length + UTF-8 key bytes (ascending)
    value region: per entry, u32 length + value bytes

Offsets are absolute file positions of the length prefix. The five key
namespaces share one physical table; a full key is the namespace tag byte
plus ``'|'`` plus the logical key.
"""

from __future__ import annotations

import os
import struct
import threading
from bisect import bisect_left
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

TABLE_MAGIC = b"PGKV1\0"
TRIE_MAGIC = b"PGTR1\0"
FORMAT_VERSION = 1

NAMESPACES = ("v", "p", "a", "e", "s")
CORPORA = ("wiki", "crawl", "wikilinks")

# Reserved logical keys; cannot collide with phrase keys because
# tokenization always puts spaces around punctuation.
DOC_COUNT_KEY = "#docs"
DF_KEY_PREFIX = "df|"
ENTITY_LINKS_PREFIX = "#links|"

DEFAULT_CAPACITIES = {"v": 50_000, "p": 100_000, "a": 50_000, "e": 50_000, "s": 50_000}

_HEADER = struct.Struct("<6sIQ")
_INDEX_ENTRY = struct.Struct("<QQ")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


class StoreError(Exception):
    """Base class for storage failures (distinct from not-found)."""


class StoreOpenError(StoreError):
    """Missing file, bad magic, or version mismatch at open time."""


class BuildOrderError(StoreError):
    """Keys handed to build_table out of order or duplicated."""


class CorruptValueError(StoreError):
    """Value bytes failed to decode for a given key."""


@dataclass(frozen=True)
class PhraseStats:
    quality: float
    rectified_count: int
    raw_count: int


@dataclass(frozen=True)
class AnchorStats:
    """Per-corpus anchor counts for one surface form.

    ``linked[corpus]`` maps entity id string to the number of times the
    surface appeared as anchor text of a link to that entity;
    ``unlinked[corpus]`` counts occurrences outside any of its own link
    spans.
    """

    linked: dict[str, dict[str, int]]
    unlinked: dict[str, int]

    def total_linked(self, corpus: Optional[str] = None) -> int:
        if corpus is not None:
            return sum(self.linked.get(corpus, {}).values())
        return sum(sum(m.values()) for m in self.linked.values())

    def merged_counts(self) -> dict[str, int]:
        merged: dict[str, int] = {}
        for per_corpus in self.linked.values():
            for entity, count in per_corpus.items():
                merged[entity] = merged.get(entity, 0) + count
        return merged


@dataclass(frozen=True)
class EntityStats:
    inbound_links: int = 0
    page_views: int = 0
    redirect_views: int = 0
    out_links_total: int = 0
    out_links_unique: int = 0
    char_count: int = 0
    word_count: int = 0


@dataclass(frozen=True)
class SurfaceStats:
    """Per-corpus (linked_total, unlinked_total) occurrence counts."""

    counts: dict[str, tuple[int, int]]


@dataclass
class CacheStats:
    """Monotone counters per namespace. ``trie_rejections`` counts store
    lookups skipped by the prefix-trie gate."""

    hits: dict[str, int] = field(default_factory=lambda: {ns: 0 for ns in NAMESPACES})
    misses: dict[str, int] = field(default_factory=lambda: {ns: 0 for ns in NAMESPACES})
    trie_rejections: dict[str, int] = field(
        default_factory=lambda: {ns: 0 for ns in NAMESPACES}
    )

    def copy(self) -> "CacheStats":
        return CacheStats(dict(self.hits), dict(self.misses), dict(self.trie_rejections))


@dataclass(frozen=True)
class LruCacheConfig:
    """Entry-count capacity per namespace. 0 disables a cache; None means
    unbounded."""

    capacities: dict[str, Optional[int]] = field(
        default_factory=lambda: dict(DEFAULT_CAPACITIES)
    )

    def capacity(self, namespace: str) -> Optional[int]:
        return self.capacities.get(namespace, 0)


# ---------------------------------------------------------------------------
# Value encodings
# ---------------------------------------------------------------------------


def encode_vector(vec: np.ndarray) -> bytes:
    arr = np.asarray(vec, dtype="<f4")
    return _U32.pack(arr.shape[0]) + arr.tobytes()


def decode_vector(data: bytes) -> np.ndarray:
    if len(data) < 4:
        raise CorruptValueError("vector value truncated")
    (dim,) = _U32.unpack_from(data, 0)
    if len(data) != 4 + 4 * dim:
        raise CorruptValueError(f"vector value length {len(data)} != 4 + 4*{dim}")
    return np.frombuffer(data, dtype="<f4", count=dim, offset=4).copy()


def encode_phrase_stats(stats: PhraseStats) -> bytes:
    return struct.pack("<dQQ", stats.quality, stats.rectified_count, stats.raw_count)


def decode_phrase_stats(data: bytes) -> PhraseStats:
    if len(data) != 24:
        raise CorruptValueError(f"phrase stats value length {len(data)} != 24")
    quality, rectified, raw = struct.unpack("<dQQ", data)
    return PhraseStats(quality=quality, rectified_count=rectified, raw_count=raw)


def encode_anchor_stats(stats: AnchorStats) -> bytes:
    parts = [_U32.pack(len(CORPORA))]
    for corpus in CORPORA:
        parts.append(_U64.pack(stats.unlinked.get(corpus, 0)))
        entities = sorted(stats.linked.get(corpus, {}).items())
        parts.append(_U32.pack(len(entities)))
        for entity, count in entities:
            raw = entity.encode("utf-8")
            parts.append(_U32.pack(len(raw)))
            parts.append(raw)
            parts.append(_U64.pack(count))
    return b"".join(parts)


def decode_anchor_stats(data: bytes) -> AnchorStats:
    try:
        pos = 0
        (corpus_count,) = _U32.unpack_from(data, pos)
        pos += 4
        linked: dict[str, dict[str, int]] = {}
        unlinked: dict[str, int] = {}
        for ci in range(corpus_count):
            corpus = CORPORA[ci]
            (a_ix,) = _U64.unpack_from(data, pos)
            pos += 8
            (k,) = _U32.unpack_from(data, pos)
            pos += 4
            per_corpus: dict[str, int] = {}
            for _ in range(k):
                (length,) = _U32.unpack_from(data, pos)
                pos += 4
                entity = data[pos : pos + length].decode("utf-8")
                if len(entity.encode("utf-8")) != length:
                    raise ValueError("short entity read")
                pos += length
                (a_ij,) = _U64.unpack_from(data, pos)
                pos += 8
                per_corpus[entity] = a_ij
            linked[corpus] = per_corpus
            unlinked[corpus] = a_ix
        if pos != len(data):
            raise ValueError("trailing bytes")
        return AnchorStats(linked=linked, unlinked=unlinked)
    except (struct.error, IndexError, UnicodeDecodeError, ValueError) as exc:
        raise CorruptValueError(f"anchor stats undecodable: {exc}") from exc


def encode_entity_stats(stats: EntityStats) -> bytes:
    return struct.pack(
        "<QQQQQII",
        stats.inbound_links,
        stats.page_views,
        stats.redirect_views,
        stats.out_links_total,
        stats.out_links_unique,
        stats.char_count,
        stats.word_count,
    )


def decode_entity_stats(data: bytes) -> EntityStats:
    if len(data) != 48:
        raise CorruptValueError(f"entity stats value length {len(data)} != 48")
    fields = struct.unpack("<QQQQQII", data)
    return EntityStats(*fields)


def encode_surface_stats(stats: SurfaceStats) -> bytes:
    parts = []
    for corpus in CORPORA:
        linked, unlinked = stats.counts.get(corpus, (0, 0))
        parts.append(struct.pack("<QQ", linked, unlinked))
    return b"".join(parts)


def decode_surface_stats(data: bytes) -> SurfaceStats:
    if len(data) != 16 * len(CORPORA):
        raise CorruptValueError(f"surface stats value length {len(data)} != 48")
    counts = {}
    for i, corpus in enumerate(CORPORA):
        linked, unlinked = struct.unpack_from("<QQ", data, 16 * i)
        counts[corpus] = (linked, unlinked)
    return SurfaceStats(counts=counts)


def encode_u64(value: int) -> bytes:
    return _U64.pack(value)


def decode_u64(data: bytes) -> int:
    if len(data) != 8:
        raise CorruptValueError(f"u64 value length {len(data)} != 8")
    return _U64.unpack(data)[0]


_DECODERS = {
    "v": decode_vector,
    "p": decode_phrase_stats,
    "a": decode_anchor_stats,
    "e": decode_entity_stats,
    "s": decode_surface_stats,
}


def _decode(namespace: str, key: str, data: bytes):
    # Reserved keys hold bare u64 counters rather than namespace records.
    if namespace == "s" and (key.startswith(DF_KEY_PREFIX) or key == DOC_COUNT_KEY):
        return decode_u64(data)
    if namespace == "e" and key.startswith(ENTITY_LINKS_PREFIX):
        return decode_u64(data)
    try:
        return _DECODERS[namespace](data)
    except KeyError:
        raise StoreError(f"unknown namespace {namespace!r}")


# ---------------------------------------------------------------------------
# Table file
# ---------------------------------------------------------------------------


def build_table(entries: Iterable[tuple[bytes, bytes]], out_path: str) -> "TableFile":
    """Write a sorted table file from (key bytes, value bytes) pairs.

    Keys must arrive strictly ascending in bytewise order; violations
    raise BuildOrderError naming the offending key.
    """
    keys: list[bytes] = []
    values: list[bytes] = []
    prev: Optional[bytes] = None
    for key, value in entries:
        if prev is not None and key <= prev:
            kind = "duplicate" if key == prev else "out-of-order"
            raise BuildOrderError(f"{kind} key {key!r}")
        keys.append(key)
        values.append(value)
        prev = key
    count = len(keys)
    header = _HEADER.pack(TABLE_MAGIC, FORMAT_VERSION, count)
    key_region_start = len(header) + _INDEX_ENTRY.size * count
    key_offsets: list[int] = []
    pos = key_region_start
    for key in keys:
        key_offsets.append(pos)
        pos += 4 + len(key)
    value_offsets: list[int] = []
    for value in values:
        value_offsets.append(pos)
        pos += 4 + len(value)
    with open(out_path, "wb") as fh:
        fh.write(header)
        for ko, vo in zip(key_offsets, value_offsets):
            fh.write(_INDEX_ENTRY.pack(ko, vo))
        for key in keys:
            fh.write(_U32.pack(len(key)))
            fh.write(key)
        for value in values:
            fh.write(_U32.pack(len(value)))
            fh.write(value)
    return TableFile(out_path)


class TableFile:
    """Read-only handle on a sorted table file.

    Opening reads the header, the index, and the key region; values are
    fetched lazily with positional reads, so no byte of the data region
    is touched until a lookup asks for it. ``data_bytes_read`` tracks
    reads that fall inside the value region.
    """

    def __init__(self, path: str):
        self.path = path
        try:
            self._file = open(path, "rb")
        except OSError as exc:
            raise StoreOpenError(f"cannot open table {path}: {exc}") from exc
        self._fd = self._file.fileno()
        header = self._file.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise StoreOpenError(f"table {path}: truncated header")
        magic, version, count = _HEADER.unpack(header)
        if magic != TABLE_MAGIC:
            raise StoreOpenError(f"table {path}: bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise StoreOpenError(f"table {path}: unsupported version {version}")
        self.entry_count = count
        index_raw = self._file.read(_INDEX_ENTRY.size * count)
        if len(index_raw) != _INDEX_ENTRY.size * count:
            raise StoreOpenError(f"table {path}: truncated index")
        self._value_offsets: list[int] = []
        keys: list[bytes] = []
        key_offsets = []
        for i in range(count):
            ko, vo = _INDEX_ENTRY.unpack_from(index_raw, i * _INDEX_ENTRY.size)
            key_offsets.append(ko)
            self._value_offsets.append(vo)
        if count:
            key_region = self._file.read(self._value_offsets[0] - key_offsets[0])
            base = key_offsets[0]
            prev = None
            for ko in key_offsets:
                rel = ko - base
                (length,) = _U32.unpack_from(key_region, rel)
                key = key_region[rel + 4 : rel + 4 + length]
                if prev is not None and key <= prev:
                    raise StoreOpenError(f"table {path}: keys not strictly ascending")
                keys.append(key)
                prev = key
            self.data_region_start = self._value_offsets[0]
        else:
            self.data_region_start = self._file.tell()
        self._keys = keys
        self.open_bytes_read = self._file.tell()
        self.data_region_size = os.fstat(self._fd).st_size - self.data_region_start
        self.data_bytes_read = 0

    def get(self, key: bytes) -> Optional[bytes]:
        """Binary-search lookup; returns value bytes or None."""
        idx = bisect_left(self._keys, key)
        if idx >= self.entry_count or self._keys[idx] != key:
            return None
        return self._read_value(idx)

    def _read_value(self, idx: int) -> bytes:
        offset = self._value_offsets[idx]
        try:
            prefix = os.pread(self._fd, 4, offset)
            (length,) = _U32.unpack(prefix)
            data = os.pread(self._fd, length, offset + 4)
        except (OSError, struct.error) as exc:
            raise StoreError(f"I/O failure reading value at {offset}: {exc}") from exc
        if len(data) != length:
            raise StoreError(f"short value read at offset {offset}")
        self.data_bytes_read += 4 + length
        return data

    def keys(self) -> list[bytes]:
        return list(self._keys)

    def items(self) -> Iterator[tuple[bytes, bytes]]:
        for i, key in enumerate(self._keys):
            yield key, self._read_value(i)

    def close(self) -> None:
        self._file.close()


# ---------------------------------------------------------------------------
# Prefix trie
# ---------------------------------------------------------------------------


class PrefixTrie:
    """Character trie over the first tokens of stored phrase keys.

    Membership answers "does any stored phrase start with this token";
    it has zero false negatives by construction.
    """

    def __init__(self, tokens: Iterable[str] = ()):  # tokens, not prefixes
        self._root: dict = {}
        self._count = 0
        for token in tokens:
            self.add(token)

    _END = None  # terminal marker; no character key can be None

    def add(self, token: str) -> None:
        node = self._root
        for ch in token:
            node = node.setdefault(ch, {})
        if self._END not in node:
            node[self._END] = True
            self._count += 1

    def admits(self, first_token: str) -> bool:
        node = self._root
        for ch in first_token:
            node = node.get(ch)
            if node is None:
                return False
        return self._END in node

    def tokens(self) -> list[str]:
        out: list[str] = []

        def walk(node: dict, prefix: str) -> None:
            for ch, child in node.items():
                if ch is self._END:
                    out.append(prefix)
                else:
                    walk(child, prefix + ch)

        walk(self._root, "")
        return sorted(out)

    def __len__(self) -> int:
        return self._count

    def write(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(TRIE_MAGIC)
            fh.write(_U32.pack(FORMAT_VERSION))
            for token in self.tokens():
                raw = token.encode("utf-8")
                fh.write(_U32.pack(len(raw)))
                fh.write(raw)

    @classmethod
    def read(cls, path: str) -> "PrefixTrie":
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise StoreOpenError(f"cannot open trie {path}: {exc}") from exc
        if data[:6] != TRIE_MAGIC:
            raise StoreOpenError(f"trie {path}: bad magic {data[:6]!r}")
        (version,) = _U32.unpack_from(data, 6)
        if version != FORMAT_VERSION:
            raise StoreOpenError(f"trie {path}: unsupported version {version}")
        trie = cls()
        pos = 10
        while pos < len(data):
            (length,) = _U32.unpack_from(data, pos)
            pos += 4
            trie.add(data[pos : pos + length].decode("utf-8"))
            pos += length
        return trie


def build_prefix_trie(phrase_keys: Iterable[str], out_path: str) -> PrefixTrie:
    """Build the first-token trie for a stream of phrase keys and write it."""
    trie = PrefixTrie()
    for key in phrase_keys:
        first = key.split(" ", 1)[0]
        if first:
            trie.add(first)
    trie.write(out_path)
    return trie


# ---------------------------------------------------------------------------
# Store handle
# ---------------------------------------------------------------------------


class _LruCache:
    """Strict least-recently-used cache; a get counts as a use."""

    def __init__(self, capacity: Optional[int]):
        self.capacity = capacity
        self._data: OrderedDict = OrderedDict()

    @property
    def enabled(self) -> bool:
        return self.capacity is None or self.capacity > 0

    def get(self, key: str):
        if key not in self._data:
            return None
        self._data.move_to_end(key)
        return self._data[key]

    def put(self, key: str, value) -> None:
        if not self.enabled:
            return
        self._data[key] = value
        self._data.move_to_end(key)
        if self.capacity is not None:
            while len(self._data) > self.capacity:
                self._data.popitem(last=False)

    def __len__(self) -> int:
        return len(self._data)


class _CacheEntry:
    __slots__ = ("raw", "decoded", "has_decoded")

    def __init__(self, raw: bytes):
        self.raw = raw
        self.decoded = None
        self.has_decoded = False


class StoreHandle:
    """An opened tiered store: table + caches + trie + counters.

    Table contents never mutate after open. Caches and counters are
    guarded by a lock; the handle is safe to share across concurrent
    link requests.
    """

    def __init__(self, table: TableFile, trie: PrefixTrie, cache_config: LruCacheConfig):
        self.table = table
        self.trie = trie
        self.cache_config = cache_config
        self._caches = {ns: _LruCache(cache_config.capacity(ns)) for ns in NAMESPACES}
        self._stats = CacheStats()
        self._lock = threading.Lock()

    # -- lookups ---------------------------------------------------------

    def _fetch(self, namespace: str, key: str) -> Optional[_CacheEntry]:
        if namespace not in self._caches:
            raise StoreError(f"unknown namespace {namespace!r}")
        cache = self._caches[namespace]
        with self._lock:
            entry = cache.get(key)
            if entry is not None:
                self._stats.hits[namespace] += 1
                return entry
            self._stats.misses[namespace] += 1
        raw = self.table.get(f"{namespace}|{key}".encode("utf-8"))
        if raw is None:
            return None  # negative results are never cached; the trie is
            # the designated negative-lookup optimization
        entry = _CacheEntry(raw)
        with self._lock:
            cache.put(key, entry)
        return entry

    def get_raw(self, namespace: str, key: str) -> Optional[bytes]:
        """Fetch raw value bytes, or None when the key is absent."""
        entry = self._fetch(namespace, key)
        return None if entry is None else entry.raw

    def get_typed(self, namespace: str, key: str):
        """Fetch and decode a value; the decoded form is memoized in the
        namespace cache so repeat hits skip deserialization."""
        entry = self._fetch(namespace, key)
        if entry is None:
            return None
        if not entry.has_decoded:
            try:
                entry.decoded = _decode(namespace, key, entry.raw)
            except CorruptValueError as exc:
                raise CorruptValueError(f"key {namespace}|{key}: {exc}") from exc
            entry.has_decoded = True
        return entry.decoded

    # Typed convenience accessors.

    def get_vector(self, key: str) -> Optional[np.ndarray]:
        return self.get_typed("v", key)

    def get_phrase_stats(self, key: str) -> Optional[PhraseStats]:
        return self.get_typed("p", key)

    def get_anchor_stats(self, key: str) -> Optional[AnchorStats]:
        return self.get_typed("a", key)

    def get_entity_stats(self, key: str) -> Optional[EntityStats]:
        return self.get_typed("e", key)

    def get_surface_stats(self, key: str) -> Optional[SurfaceStats]:
        if key.startswith(DF_KEY_PREFIX) or key == DOC_COUNT_KEY:
            raise StoreError(f"reserved key {key!r} is not a surface record")
        return self.get_typed("s", key)

    def get_doc_frequency(self, term: str) -> int:
        value = self.get_typed("s", DF_KEY_PREFIX + term)
        return 0 if value is None else value

    def get_doc_count(self) -> int:
        value = self.get_typed("s", DOC_COUNT_KEY)
        return 0 if value is None else value

    def get_entity_corpus_links(self, corpus: str, entity: str) -> int:
        value = self.get_typed("e", f"{ENTITY_LINKS_PREFIX}{corpus}|{entity}")
        return 0 if value is None else value

    # -- trie gate -------------------------------------------------------

    def admits_phrase_start(self, first_token: str, planned_lookups: int = 1) -> bool:
        """Trie gate consulted before 'p' lookups for spans starting at a
        token. On rejection, records how many lookups were avoided."""
        if self.trie.admits(first_token):
            return True
        with self._lock:
            self._stats.trie_rejections["p"] += planned_lookups
        return False

    # -- introspection ---------------------------------------------------

    def cache_stats(self) -> CacheStats:
        with self._lock:
            return self._stats.copy()

    def cache_entry_counts(self) -> dict[str, int]:
        with self._lock:
            return {ns: len(cache) for ns, cache in self._caches.items()}

    def close(self) -> None:
        self.table.close()


def open_store(
    table_path: str,
    trie_path: str,
    cache_config: Optional[LruCacheConfig] = None,
) -> StoreHandle:
    """Open a table + trie pair with zeroed counters and empty caches."""
    table = TableFile(table_path)
    trie = PrefixTrie.read(trie_path)
    return StoreHandle(table, trie, cache_config or LruCacheConfig())


def full_key(namespace: str, key: str) -> bytes:
    if namespace not in NAMESPACES:
        raise StoreError(f"unknown namespace {namespace!r}")
    return f"{namespace}|{key}".encode("utf-8")
