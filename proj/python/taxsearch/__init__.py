"""Taxonomy-augmented semantic product search.

Thin Python surface over the C++ core: tokenization, hashing embeddings,
BM25 and exact-cosine retrieval, rerank scoring, IR metrics, document
composition, the synthetic benchmark generator, and the full search engine.
"""

from ._taxsearch import (
    Bm25Index,
    Catalog,
    DataError,
    HashingSearcher,
    ProviderError,
    SearchEngine,
    Taxonomy,
    UsageError,
    compose_document,
    compute_metrics,
    cosine,
    generate_synthetic_files,
    hashing_embed,
    overlap_score,
    tokenize,
)

__all__ = [
    "Bm25Index",
    "Catalog",
    "DataError",
    "HashingSearcher",
    "ProviderError",
    "SearchEngine",
    "Taxonomy",
    "UsageError",
    "compose_document",
    "compute_metrics",
    "cosine",
    "generate_synthetic_files",
    "hashing_embed",
    "overlap_score",
    "tokenize",
]
