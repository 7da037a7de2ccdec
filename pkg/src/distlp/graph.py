"""Weighted similarity graph, per-node label state, and their file formats.

Edge-list file: ``idA<TAB>idB<TAB>weight`` per line, one line per undirected
edge, ``#`` comment lines and blank lines skipped.

Seed file: ``id<TAB>label1,label2,...``.

Label output file: ``id<TAB>labels<TAB>labeled_at`` sorted by id, with ``-``
in the last column for nodes that never received a label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO

from .errors import ContractError, DataError, ParseError

#: Default threshold: keep every positive weight.
MIN_POSITIVE = math.ulp(0.0)

#: ``labeled_at`` value of a node without labels.
UNLABELED = None

Labels = tuple[str, ...]


def _check_id(ext_id: str, line_number: int) -> None:
    if not ext_id:
        raise ParseError("empty node id", line_number)
    if "\t" in ext_id or "\n" in ext_id or "\r" in ext_id:
        raise ParseError(f"node id {ext_id!r} contains a tab or newline", line_number)


def _content_lines(stream: Iterable[str]) -> Iterator[tuple[int, str]]:
    for number, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        yield number, line


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected weighted graph over dense indices ``0..n-1``.

    ``nbrs[i]`` holds the neighbor indices of node ``i`` in ascending order and
    ``wts[i]`` the matching weights. ``ids[i]`` is the external id of node ``i``.
    """

    ids: tuple[str, ...]
    nbrs: tuple[tuple[int, ...], ...]
    wts: tuple[tuple[float, ...], ...]
    min_weight: float = MIN_POSITIVE
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", {ext: i for i, ext in enumerate(self.ids)})
        if len(self.index) != len(self.ids):
            raise DataError("external ids are not unique")

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[str, str, float]],
        min_weight: float = MIN_POSITIVE,
    ) -> Graph:
        """Build a graph from undirected ``(idA, idB, weight)`` triples.

        Edges lighter than ``min_weight`` are dropped; their endpoints only
        become nodes if some retained edge mentions them. Line numbers in
        errors count triples from 1.
        """
        return cls._build(((n, a, b, w) for n, (a, b, w) in enumerate(edges, 1)), min_weight)

    @classmethod
    def _build(cls, numbered: Iterable[tuple[int, str, str, float]], min_weight: float) -> Graph:
        if not (min_weight > 0 and math.isfinite(min_weight)):
            raise DataError(f"min_weight must be a positive finite number, got {min_weight!r}")
        seen: dict[str, int] = {}
        pairs: set[tuple[int, int]] = set()
        index: dict[str, int] = {}
        ids: list[str] = []
        adj: list[list[tuple[int, float]]] = []

        def intern(ext: str) -> int:
            i = index.get(ext)
            if i is None:
                i = index[ext] = len(ids)
                ids.append(ext)
                adj.append([])
            return i

        for number, a, b, w in numbered:
            _check_id(a, number)
            _check_id(b, number)
            if not (w > 0):
                raise DataError(f"line {number}: weight must be positive, got {w!r}")
            if a == b:
                raise DataError(f"line {number}: self-loop on {a!r}")
            sa = seen.setdefault(a, len(seen))
            sb = seen.setdefault(b, len(seen))
            key = (sa, sb) if sa < sb else (sb, sa)
            if key in pairs:
                raise DataError(f"line {number}: duplicate edge {a!r} - {b!r}")
            pairs.add(key)
            if w < min_weight:
                continue
            ia, ib = intern(a), intern(b)
            adj[ia].append((ib, w))
            adj[ib].append((ia, w))

        nbrs = []
        wts = []
        for row in adj:
            row.sort()
            nbrs.append(tuple(j for j, _ in row))
            wts.append(tuple(w for _, w in row))
        return cls(tuple(ids), tuple(nbrs), tuple(wts), min_weight)

    @property
    def node_count(self) -> int:
        return len(self.ids)

    @property
    def edge_count(self) -> int:
        return sum(len(row) for row in self.nbrs) // 2

    def adjacency(self, i: int) -> list[tuple[int, float]]:
        return list(zip(self.nbrs[i], self.wts[i]))

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Yield each undirected edge once as ``(i, j, w)`` with ``i < j``."""
        for i, (row, ws) in enumerate(zip(self.nbrs, self.wts)):
            for j, w in zip(row, ws):
                if i < j:
                    yield i, j, w

    def external_edges(self) -> set[tuple[str, str, float]]:
        """Edge set keyed by external ids, endpoints ordered; used to compare graphs."""
        out = set()
        for i, j, w in self.edges():
            a, b = self.ids[i], self.ids[j]
            out.add((a, b, w) if a < b else (b, a, w))
        return out


def load_graph(stream: Iterable[str], min_weight: float = MIN_POSITIVE) -> Graph:
    """Parse an edge-list stream into a :class:`Graph`."""

    def parsed() -> Iterator[tuple[int, str, str, float]]:
        for number, line in _content_lines(stream):
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", number)
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(f"unparsable weight {fields[2]!r}", number) from None
            if not math.isfinite(w):
                raise ParseError(f"weight {fields[2]!r} is not finite", number)
            yield number, fields[0], fields[1], w

    return Graph._build(parsed(), min_weight)


def format_weight(w: float) -> str:
    return str(int(w)) if w.is_integer() else repr(w)


def write_edge_list(graph: Graph, out: TextIO) -> None:
    """Write ``graph`` in edge-list format, rows sorted by (idA, idB) with idA < idB."""
    rows = sorted(graph.external_edges())
    out.writelines(f"{a}\t{b}\t{format_weight(w)}\n" for a, b, w in rows)


@dataclass(frozen=True)
class LabelState:
    """Per-node label sets and the superstep each node was labeled at.

    ``labels[i]`` is a sorted, duplicate-free tuple; ``labeled_at[i]`` is
    ``None`` (:data:`UNLABELED`) exactly when ``labels[i]`` is empty, 0 for
    seeds, and the superstep number for propagated labels.
    """

    labels: tuple[Labels, ...]
    labeled_at: tuple[int | None, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.labeled_at):
            raise ContractError("labels and labeled_at differ in length")

    @classmethod
    def unlabeled(cls, n: int) -> LabelState:
        return cls(((),) * n, (UNLABELED,) * n)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def labeled_count(self) -> int:
        return sum(1 for t in self.labeled_at if t is not None)

    @property
    def unlabeled_count(self) -> int:
        return len(self.labeled_at) - self.labeled_count

    def seeds_only(self) -> LabelState:
        return LabelState(
            tuple(ls if t == 0 else () for ls, t in zip(self.labels, self.labeled_at)),
            tuple(t if t == 0 else UNLABELED for t in self.labeled_at),
        )

    def check(self) -> None:
        """Raise :class:`ContractError` if an invariant is violated."""
        for i, (ls, t) in enumerate(zip(self.labels, self.labeled_at)):
            if bool(ls) != (t is not None):
                raise ContractError(f"node {i}: labels {ls!r} inconsistent with labeled_at {t!r}")
            if list(ls) != sorted(set(ls)):
                raise ContractError(f"node {i}: labels {ls!r} not sorted and unique")
            if t is not None and t < 0:
                raise ContractError(f"node {i}: negative labeled_at {t}")


def normalize_labels(labels: Iterable[str]) -> Labels:
    return tuple(sorted(set(labels)))


def load_labels(stream: Iterable[str], graph: Graph) -> LabelState:
    """Read a seed file; listed nodes become seeds at superstep 0."""
    labels: list[Labels] = [()] * graph.node_count
    labeled_at: list[int | None] = [UNLABELED] * graph.node_count
    for number, line in _content_lines(stream):
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(f"expected 2 tab-separated fields, got {len(fields)}", number)
        ext, joined = fields
        i = graph.index.get(ext)
        if i is None:
            raise DataError(f"line {number}: unknown node id {ext!r}")
        if labeled_at[i] is not None:
            raise DataError(f"line {number}: duplicate entry for node {ext!r}")
        parts = [p for p in joined.split(",") if p]
        if not parts:
            raise DataError(f"line {number}: empty label list for node {ext!r}")
        labels[i] = normalize_labels(parts)
        labeled_at[i] = 0
    return LabelState(tuple(labels), tuple(labeled_at))


def label_rows(state: LabelState, graph: Graph) -> list[str]:
    if len(state) != graph.node_count:
        raise ContractError("label state does not match graph size")
    rows = []
    for ext in sorted(graph.ids):
        i = graph.index[ext]
        t = state.labeled_at[i]
        rows.append(f"{ext}\t{','.join(state.labels[i])}\t{'-' if t is None else t}\n")
    return rows


def write_labels(state: LabelState, graph: Graph, out: TextIO) -> None:
    """Write one row per node, sorted by external id."""
    out.writelines(label_rows(state, graph))


def labels_text(state: LabelState, graph: Graph) -> str:
    return "".join(label_rows(state, graph))


def state_from_mapping(graph: Graph, seeds: dict[str, Sequence[str]]) -> LabelState:
    """Seed state from ``{external id: labels}``; convenient in tests and generators."""
    labels: list[Labels] = [()] * graph.node_count
    labeled_at: list[int | None] = [UNLABELED] * graph.node_count
    for ext, ls in seeds.items():
        i = graph.index[ext]
        labels[i] = normalize_labels(ls)
        labeled_at[i] = 0
    return LabelState(tuple(labels), tuple(labeled_at))
