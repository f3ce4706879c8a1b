"""Entity linking for noisy text over a tiered metadata store."""

from .corpus import (
    EntityId,
    GoldAnnotation,
    LinkPrediction,
    Passage,
    SurfaceForm,
    normalize_text,
    parse_gold,
    tokenize_unigrams,
)
from .pipeline import (
    AssetBundle,
    BuildConfig,
    BundleHandle,
    bench,
    build_assets,
    evaluate,
    export_uncertain,
    link_passage,
    open_bundle,
)
from .store import LruCacheConfig, StoreHandle, open_store

__all__ = [
    "AssetBundle",
    "BuildConfig",
    "BundleHandle",
    "EntityId",
    "GoldAnnotation",
    "LinkPrediction",
    "LruCacheConfig",
    "Passage",
    "StoreHandle",
    "SurfaceForm",
    "bench",
    "build_assets",
    "evaluate",
    "export_uncertain",
    "link_passage",
    "normalize_text",
    "open_bundle",
    "open_store",
    "parse_gold",
    "tokenize_unigrams",
]
