from .store import (
    DIMENSIONS,
    IndexEntry,
    IndexStore,
    MetadataPredicate,
    RepositoryIndex,
    SearchHit,
)

__all__ = [
    "DIMENSIONS",
    "IndexEntry",
    "IndexStore",
    "MetadataPredicate",
    "RepositoryIndex",
    "SearchHit",
]
