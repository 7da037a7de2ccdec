"""Shared-attribute similarity graphs (e.g. proteins linked by common domains).

The weight of an entity pair is the number of attributes both entities carry.
Pairs are counted through an attribute -> entities inverted index so only
entities that actually co-occur are ever touched.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from .errors import ConfigError, ParseError
from .graph import Graph, _content_lines


@dataclass(frozen=True)
class AttributeRecordSet:
    """Entity -> attribute set, with entities kept in first-appearance order."""

    attributes: dict[str, frozenset[str]]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> AttributeRecordSet:
        acc: dict[str, set[str]] = {}
        for number, (entity, attribute) in enumerate(pairs, start=1):
            _check_field(entity, "entity", number)
            _check_field(attribute, "attribute", number)
            acc.setdefault(entity, set()).add(attribute)
        return cls({e: frozenset(a) for e, a in acc.items()})

    @property
    def entities(self) -> list[str]:
        return list(self.attributes)

    def inverted_index(self) -> dict[str, list[str]]:
        index: dict[str, list[str]] = {}
        for entity, attrs in self.attributes.items():
            for a in attrs:
                index.setdefault(a, []).append(entity)
        return index


def _check_field(value: str, what: str, number: int) -> None:
    if not value:
        raise ParseError(f"empty {what}", number)
    if "\t" in value or "\n" in value or "\r" in value:
        raise ParseError(f"{what} {value!r} contains a tab or newline", number)


def read_records(stream: Iterable[str]) -> AttributeRecordSet:
    """Parse ``entity<TAB>attribute`` lines; duplicates collapse."""
    acc: dict[str, set[str]] = {}
    for number, line in _content_lines(stream):
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(f"expected 2 tab-separated fields, got {len(fields)}", number)
        entity, attribute = fields
        _check_field(entity, "entity", number)
        _check_field(attribute, "attribute", number)
        acc.setdefault(entity, set()).add(attribute)
    return AttributeRecordSet({e: frozenset(a) for e, a in acc.items()})


def shared_counts(
    records: AttributeRecordSet, max_attribute_frequency: int | None = None
) -> Counter[tuple[str, str]]:
    """Shared-attribute count for every co-occurring pair, keys ordered ``(a, b)`` with a < b.

    Attributes carried by more than ``max_attribute_frequency`` entities are
    skipped entirely.
    """
    counts: Counter[tuple[str, str]] = Counter()
    for members in records.inverted_index().values():
        if max_attribute_frequency is not None and len(members) > max_attribute_frequency:
            continue
        counts.update(combinations(sorted(members), 2))
    return counts


def build_similarity_graph(
    records: AttributeRecordSet,
    min_shared: int = 1,
    max_attribute_frequency: int | None = None,
) -> Graph:
    """Graph whose edges join entities sharing at least ``min_shared`` attributes.

    Entities without a qualifying edge are left out. Dense indices follow the
    sorted edge-row order, so the result equals re-loading its own edge file.
    """
    if isinstance(min_shared, bool) or not isinstance(min_shared, int) or min_shared < 1:
        raise ConfigError(f"min_shared must be an integer >= 1, got {min_shared!r}")
    if max_attribute_frequency is not None and max_attribute_frequency < 2:
        raise ConfigError("max_attribute_frequency must be >= 2 when set")
    counts = shared_counts(records, max_attribute_frequency)
    rows = sorted((a, b, float(c)) for (a, b), c in counts.items() if c >= min_shared)
    return Graph.from_edges(rows)


def isolated_entities(records: AttributeRecordSet, graph: Graph) -> list[str]:
    return [e for e in records.attributes if e not in graph.index]
