from .enrich import EnrichedQuery, VocabularyEnricher
from .search import Query, RankedResult, SearchEngine, SearchRecord
from .jobs import DeepJob, DeepJobManager, JobState

__all__ = [
    "DeepJob",
    "DeepJobManager",
    "EnrichedQuery",
    "JobState",
    "Query",
    "RankedResult",
    "SearchEngine",
    "SearchRecord",
    "VocabularyEnricher",
]
