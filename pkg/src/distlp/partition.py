"""Split a graph into worker parts and derive each part's remote-neighbor tables."""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass

from .errors import ConfigError
from .graph import Graph

log = logging.getLogger(__name__)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


class Strategy(enum.Enum):
    HASH = "hash"
    RANGE = "range"
    GREEDY_BFS = "greedy"


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class Partitioning:
    """Node-to-part assignment plus the ghost and boundary tables of every part.

    ``ghosts[p]`` maps each remote neighbor of a node owned by ``p`` to its
    owning part. ``boundary[p]`` maps each owned node with remote neighbors to
    the ``(remote part, remote node)`` pairs it broadcasts to, in ascending
    remote-node order.
    """

    k: int
    part_of: tuple[int, ...]
    owned: tuple[tuple[int, ...], ...]
    ghosts: tuple[dict[int, int], ...]
    boundary: tuple[dict[int, list[tuple[int, int]]], ...]

    @property
    def sizes(self) -> list[int]:
        return [len(o) for o in self.owned]


def _hash_parts(graph: Graph, k: int) -> list[int]:
    return [fnv1a_64(ext.encode("utf-8")) % k for ext in graph.ids]


def _range_parts(graph: Graph, k: int) -> list[int]:
    n = graph.node_count
    block = -(-n // k) if n else 1
    return [i // block for i in range(n)]


def _greedy_bfs_parts(graph: Graph, k: int) -> list[int]:
    # Each part grows breadth-first up to ceil(n/k) nodes; when its frontier
    # dries up it continues from the lowest unassigned node.
    n = graph.node_count
    target = -(-n // k) if n else 0
    part: list[int] = [-1] * n
    next_free = 0
    for p in range(k):
        size = 0
        queue: deque[int] = deque()
        while size < target:
            if not queue:
                while next_free < n and part[next_free] != -1:
                    next_free += 1
                if next_free == n:
                    break
                part[next_free] = p
                size += 1
                queue.append(next_free)
                continue
            u = queue.popleft()
            for v in graph.nbrs[u]:
                if size >= target:
                    break
                if part[v] == -1:
                    part[v] = p
                    size += 1
                    queue.append(v)
    return part


def partition(graph: Graph, k: int, strategy: Strategy = Strategy.HASH) -> Partitioning:
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ConfigError(f"part count must be an integer >= 1, got {k!r}")
    if k > graph.node_count:
        log.warning("%d parts requested for %d nodes; surplus parts stay empty", k, graph.node_count)
    if strategy is Strategy.HASH:
        part_of = _hash_parts(graph, k)
    elif strategy is Strategy.RANGE:
        part_of = _range_parts(graph, k)
    elif strategy is Strategy.GREEDY_BFS:
        part_of = _greedy_bfs_parts(graph, k)
    else:
        raise ConfigError(f"unknown strategy {strategy!r}")
    return from_assignment(graph, k, part_of)


def from_assignment(graph: Graph, k: int, part_of: list[int]) -> Partitioning:
    owned: list[list[int]] = [[] for _ in range(k)]
    ghosts: list[dict[int, int]] = [{} for _ in range(k)]
    boundary: list[dict[int, list[tuple[int, int]]]] = [{} for _ in range(k)]
    for v, p in enumerate(part_of):
        if not 0 <= p < k:
            raise ConfigError(f"node {v} assigned to part {p} outside 0..{k - 1}")
        owned[p].append(v)
        remote = [(part_of[u], u) for u in graph.nbrs[v] if part_of[u] != p]
        if remote:
            boundary[p][v] = remote
            g = ghosts[p]
            for q, u in remote:
                g[u] = q
    return Partitioning(
        k,
        tuple(part_of),
        tuple(tuple(o) for o in owned),
        tuple(ghosts),
        tuple(boundary),
    )


def edge_cut(graph: Graph, partitioning: Partitioning) -> int:
    part_of = partitioning.part_of
    return sum(1 for i, j, _ in graph.edges() if part_of[i] != part_of[j])
