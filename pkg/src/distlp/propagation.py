"""Neighborhood-based label propagation: reference engine and layer oracle.

Each superstep, every labeled node offers its label set, weighted by the
connecting edge, to all of its neighbors. An unlabeled node that hears from at
least one neighbor sums the weights per label and adopts the heaviest label;
a labeled node ignores what it hears. Updates are synchronous: a node labeled
in superstep ``t`` first influences its neighbors in ``t + 1``.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ConfigError, ContractError
from .graph import Graph, LabelState, Labels, UNLABELED


class TieBreak(enum.Enum):
    LEX_SMALLEST = "lex"
    KEEP_ALL_TIED = "all"


class HaltReason(enum.Enum):
    ALL_LABELED = 1
    FIXED_POINT = 2
    MAX_SUPERSTEPS = 3


@dataclass(frozen=True)
class PropagationConfig:
    tie_break: TieBreak = TieBreak.LEX_SMALLEST
    max_supersteps: int | None = None  # None: unbounded

    def __post_init__(self) -> None:
        if self.max_supersteps is not None and self.max_supersteps < 1:
            raise ConfigError(f"max_supersteps must be >= 1, got {self.max_supersteps}")


@dataclass(frozen=True)
class RunReport:
    supersteps_executed: int
    labeled_count: int
    unlabeled_count: int
    halt_reason: HaltReason
    changed_per_superstep: tuple[int, ...] = ()
    # W2W LabelBroadcast counts per superstep; only filled by distributed runs.
    messages_per_superstep: tuple[int, ...] | None = field(default=None, compare=False)
    edge_cut: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if (self.halt_reason is HaltReason.ALL_LABELED) != (self.unlabeled_count == 0):
            raise ContractError("ALL_LABELED must coincide with zero unlabeled nodes")

    def summary_lines(self) -> list[str]:
        lines = [
            f"supersteps: {self.supersteps_executed}",
            f"labeled: {self.labeled_count}",
            f"unlabeled: {self.unlabeled_count}",
            f"halt reason: {self.halt_reason.name}",
            "changed per superstep: " + " ".join(map(str, self.changed_per_superstep)),
        ]
        if self.messages_per_superstep is not None:
            lines.append(
                "W2W messages per superstep: " + " ".join(map(str, self.messages_per_superstep))
            )
        if self.edge_cut is not None:
            lines.append(f"edge cut: {self.edge_cut}")
        return lines


def aggregate(incoming: Iterable[tuple[Sequence[str], float]]) -> dict[str, float]:
    """Sum edge weights per label, in the order given.

    Every label of a multi-label neighbor receives the full edge weight.
    Callers pass contributions in ascending source-node order; this fixes the
    floating-point result.
    """
    scores: dict[str, float] = {}
    for labels, w in incoming:
        for label in labels:
            scores[label] = scores.get(label, 0.0) + w
    return scores


def select_majority(scores: dict[str, float], tie_break: TieBreak) -> Labels:
    if not scores:
        return ()
    best = max(scores.values())
    tied = sorted(label for label, s in scores.items() if s == best)
    if tie_break is TieBreak.LEX_SMALLEST:
        return (tied[0],)
    return tuple(tied)


def _updates(
    graph: Graph,
    labels: Sequence[Labels],
    labeled_at: Sequence[int | None],
    tie_break: TieBreak,
) -> list[tuple[int, Labels]]:
    out = []
    for v, (row, ws) in enumerate(zip(graph.nbrs, graph.wts)):
        if labeled_at[v] is not None:
            continue
        incoming = [(labels[u], w) for u, w in zip(row, ws) if labeled_at[u] is not None]
        if incoming:
            out.append((v, select_majority(aggregate(incoming), tie_break)))
    return out


def superstep(
    graph: Graph, state: LabelState, config: PropagationConfig, step: int
) -> tuple[LabelState, int]:
    """Run superstep ``step`` against a snapshot; returns the new state and the number newly labeled."""
    if step < 1:
        raise ContractError("supersteps are numbered from 1")
    updates = _updates(graph, state.labels, state.labeled_at, config.tie_break)
    if not updates:
        return state, 0
    labels = list(state.labels)
    labeled_at = list(state.labeled_at)
    for v, ls in updates:
        labels[v] = ls
        labeled_at[v] = step
    return LabelState(tuple(labels), tuple(labeled_at)), len(updates)


def check_seeds(graph: Graph, seeds: LabelState) -> None:
    if len(seeds) != graph.node_count:
        raise ContractError(f"seed state has {len(seeds)} entries for {graph.node_count} nodes")
    seeds.check()
    if any(t not in (0, UNLABELED) for t in seeds.labeled_at):
        raise ContractError("seed state may only hold labeled_at 0 or UNLABELED")


def run(
    graph: Graph, seeds: LabelState, config: PropagationConfig = PropagationConfig()
) -> tuple[LabelState, RunReport]:
    """Repeat supersteps until every node is labeled, nothing changes, or the bound is hit."""
    check_seeds(graph, seeds)
    labels = list(seeds.labels)
    labeled_at = list(seeds.labeled_at)
    unlabeled = seeds.unlabeled_count
    history: list[int] = []
    t = 0
    while True:
        t += 1
        updates = _updates(graph, labels, labeled_at, config.tie_break)
        for v, ls in updates:
            labels[v] = ls
            labeled_at[v] = t
        unlabeled -= len(updates)
        history.append(len(updates))
        reason = halt_decision(unlabeled, len(updates), t, config.max_supersteps)
        if reason is not None:
            break
    state = LabelState(tuple(labels), tuple(labeled_at))
    report = RunReport(t, graph.node_count - unlabeled, unlabeled, reason, tuple(history))
    return state, report


def halt_decision(
    unlabeled: int, changed: int, step: int, max_supersteps: int | None
) -> HaltReason | None:
    """Stopping rule shared by the reference engine and the master."""
    if unlabeled == 0:
        return HaltReason.ALL_LABELED
    if changed == 0:
        return HaltReason.FIXED_POINT
    if max_supersteps is not None and step >= max_supersteps:
        return HaltReason.MAX_SUPERSTEPS
    return None


def seed_distances(graph: Graph, seeds: LabelState) -> list[int | None]:
    """Unweighted hop distance from the seed set (multi-source BFS)."""
    dist: list[int | None] = [None] * graph.node_count
    queue = deque()
    for v, t in enumerate(seeds.labeled_at):
        if t == 0:
            dist[v] = 0
            queue.append(v)
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for v in graph.nbrs[u]:
            if dist[v] is None:
                dist[v] = du
                queue.append(v)
    return dist


def oracle_labels(
    graph: Graph,
    seeds: LabelState,
    tie_break: TieBreak = TieBreak.LEX_SMALLEST,
    max_depth: int | None = None,
) -> LabelState:
    """Closed-form result of :func:`run`, computed layer by layer.

    A node at hop distance ``d`` from the seeds is labeled at superstep ``d``
    from exactly its neighbors at distance ``d - 1``. Nodes beyond
    ``max_depth`` or unreachable from any seed stay unlabeled.
    """
    check_seeds(graph, seeds)
    dist = seed_distances(graph, seeds)
    layers: dict[int, list[int]] = {}
    for v, d in enumerate(dist):
        if d is not None and d > 0 and (max_depth is None or d <= max_depth):
            layers.setdefault(d, []).append(v)
    labels = list(seeds.labels)
    labeled_at = list(seeds.labeled_at)
    for d in sorted(layers):
        for v in layers[d]:
            incoming = [
                (labels[u], w)
                for u, w in zip(graph.nbrs[v], graph.wts[v])
                if dist[u] == d - 1
            ]
            labels[v] = select_majority(aggregate(incoming), tie_break)
            labeled_at[v] = d
    return LabelState(tuple(labels), tuple(labeled_at))
