"""String similarity measures for surface-form vs entity-slug comparison."""

from __future__ import annotations

import re
import zlib

import numpy as np

_MINHASH_COUNT = 64
_MERSENNE_61 = (1 << 61) - 1
_PAREN_SUFFIX = re.compile(r"\s*\([^)]*\)\s*$")

# Fixed affine hash coefficients so estimates are stable across runs.
_rng = np.random.default_rng(0x5EED)
_MINHASH_A = _rng.integers(1, _MERSENNE_61, size=_MINHASH_COUNT, dtype=np.uint64)
_MINHASH_B = _rng.integers(0, _MERSENNE_61, size=_MINHASH_COUNT, dtype=np.uint64)


def jaro_similarity(s1: str, s2: str) -> float:
    """Plain Jaro similarity in [0, 1]."""
    if not s1 and not s2:
        return 1.0
    if not s1 or not s2:
        return 0.0
    len1, len2 = len(s1), len(s2)
    match_window = max(len1, len2) // 2 - 1
    used2 = [False] * len2
    matches1: list[int] = []
    matched2: list[int] = []
    for i, ch in enumerate(s1):
        lo = max(0, i - match_window)
        hi = min(len2, i + match_window + 1)
        for j in range(lo, hi):
            if not used2[j] and s2[j] == ch:
                used2[j] = True
                matches1.append(i)
                matched2.append(j)
                break
    m = len(matches1)
    if m == 0:
        return 0.0
    s2_matches = [s2[j] for j in sorted(matched2)]
    transpositions = sum(1 for i, j in zip(matches1, range(m)) if s1[i] != s2_matches[j])
    t = transpositions / 2
    return (m / len1 + m / len2 + (m - t) / m) / 3


def jaro_winkler(s1: str, s2: str, prefix_scale: float = 0.1, max_prefix: int = 4) -> float:
    """Jaro-Winkler similarity: Jaro boosted by shared leading characters."""
    jaro = jaro_similarity(s1, s2)
    prefix = 0
    for a, b in zip(s1[:max_prefix], s2[:max_prefix]):
        if a != b:
            break
        prefix += 1
    return jaro + prefix * prefix_scale * (1.0 - jaro)


def damerau_levenshtein(s1: str, s2: str) -> int:
    """Optimal string alignment distance: edits plus adjacent transpositions."""
    len1, len2 = len(s1), len(s2)
    if len1 == 0:
        return len2
    if len2 == 0:
        return len1
    prev2: list[int] = []
    prev = list(range(len2 + 1))
    for i in range(1, len1 + 1):
        row = [i] + [0] * len2
        for j in range(1, len2 + 1):
            cost = 0 if s1[i - 1] == s2[j - 1] else 1
            best = min(prev[j] + 1, row[j - 1] + 1, prev[j - 1] + cost)
            if (
                i > 1
                and j > 1
                and s1[i - 1] == s2[j - 2]
                and s1[i - 2] == s2[j - 1]
            ):
                best = min(best, prev2[j - 2] + 1)
            row[j] = best
        prev2, prev = prev, row
    return prev[len2]


def normalized_damerau_levenshtein(s1: str, s2: str) -> float:
    """OSA distance scaled by the longer string's length."""
    longest = max(len(s1), len(s2))
    if longest == 0:
        return 0.0
    return damerau_levenshtein(s1, s2) / longest


def _trigrams(s: str) -> set[str]:
    if len(s) < 3:
        return {s} if s else set()
    return {s[i : i + 3] for i in range(len(s) - 2)}


def _minhash_signature(shingles: set[str]) -> np.ndarray:
    raw = np.array(
        [zlib.crc32(sh.encode("utf-8")) for sh in shingles], dtype=np.uint64
    )
    # 64 affine hashes modulo a Mersenne prime, minimum per hash function
    hashed = (_MINHASH_A[:, None] * raw[None, :] + _MINHASH_B[:, None]) % _MERSENNE_61
    return hashed.min(axis=1)


def minhash_jaccard(s1: str, s2: str) -> float:
    """MinHash estimate of trigram-set Jaccard similarity."""
    t1, t2 = _trigrams(s1), _trigrams(s2)
    if not t1 and not t2:
        return 1.0
    if not t1 or not t2:
        return 0.0
    sig1 = _minhash_signature(t1)
    sig2 = _minhash_signature(t2)
    return float(np.mean(sig1 == sig2))


def slug_to_text(slug: str) -> str:
    """Render an entity slug comparable to surface text: underscores to
    spaces, lowercased, trailing parenthetical qualifier removed."""
    text = slug.replace("_", " ").lower().strip()
    return _PAREN_SUFFIX.sub("", text).strip()
