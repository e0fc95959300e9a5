"""Query enrichment and dimension mapping.

The deterministic fallback enricher routes tokens onto profile
dimensions via configured vocabularies and extracts exclusions:
"without X ...", "no X ..." and "-token" all populate must_not_terms
and disappear from the positive text. The keywords dimension always
receives every positive token. A GPT-style provider can replace this by
implementing the same enrich(text) contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ValidationError
from ..profiles import tokens_of

EXCLUSION_MARKERS = ("without", "no")


@dataclass
class EnrichedQuery:
    original: str
    expanded: str
    per_dimension_text: dict[str, str] = field(default_factory=dict)
    must_not_terms: list[str] = field(default_factory=list)
    dimension_weights: dict[str, float] = field(default_factory=dict)
    provider_version: str = ""

    def __post_init__(self):
        self.must_not_terms = [t.lower() for t in self.must_not_terms]
        if not self.dimension_weights:
            self.dimension_weights = {
                d: 1.0 for d, t in self.per_dimension_text.items() if t
            }
        if self.dimension_weights and sum(self.dimension_weights.values()) <= 0:
            raise ValidationError("dimension weights must sum to a positive value")

    def active_dimensions(self) -> list[str]:
        return [d for d, t in self.per_dimension_text.items() if t]

    def positive_text(self) -> str:
        return self.per_dimension_text.get("keywords") or self.expanded

    def to_dict(self) -> dict:
        return {
            "original": self.original,
            "expanded": self.expanded,
            "per_dimension_text": dict(self.per_dimension_text),
            "must_not_terms": list(self.must_not_terms),
            "dimension_weights": dict(self.dimension_weights),
            "provider_version": self.provider_version,
        }


class VocabularyEnricher:
    version = "vocab-enricher/1"

    def __init__(self, viewpoint_vocab=(), style_vocab=()):
        self.viewpoint_vocab = {t.lower() for t in viewpoint_vocab}
        self.style_vocab = {t.lower() for t in style_vocab}

    def enrich(self, text: str) -> EnrichedQuery:
        original = text
        if not text or not text.strip():
            raise ValidationError("query text must be non-empty")
        positives: list[str] = []
        must_not: list[str] = []
        excluding = False
        for word in text.split():
            negated = word.startswith("-")
            token_list = tokens_of(word)
            if not token_list:
                continue
            token = token_list[0]
            if token in EXCLUSION_MARKERS:
                excluding = True
                continue
            if excluding or negated:
                must_not.append(token)
            else:
                positives.append(token)
        if not positives:
            raise ValidationError("query has no positive terms after exclusions")
        viewpoint = [t for t in positives if t in self.viewpoint_vocab]
        style = [t for t in positives if t in self.style_vocab]
        content = [
            t
            for t in positives
            if t not in self.viewpoint_vocab and t not in self.style_vocab
        ]
        return EnrichedQuery(
            original=original,
            expanded=original,
            per_dimension_text={
                "keywords": " ".join(positives),
                "viewpoint": " ".join(viewpoint),
                "style": " ".join(style),
                "content": " ".join(content),
            },
            must_not_terms=must_not,
            provider_version=self.version,
        )
