"""Cross-check the reference engine against the layer oracle and distributed runs."""

from __future__ import annotations

from typing import Callable, Sequence

from .graph import Graph, LabelState, label_rows
from .partition import Strategy
from .propagation import PropagationConfig, oracle_labels, run
from .runtime import Transport, run_distributed


def diff_states(graph: Graph, a: LabelState, b: LabelState, limit: int = 10) -> list[str]:
    """Up to ``limit`` output rows (by external id) on which two states disagree."""
    out = []
    for ra, rb in zip(label_rows(a, graph), label_rows(b, graph)):
        if ra != rb:
            out.append(f"{ra.rstrip()!r} != {rb.rstrip()!r}")
            if len(out) == limit:
                break
    return out


def verify(
    graph: Graph,
    seeds: LabelState,
    config: PropagationConfig = PropagationConfig(),
    ks: Sequence[int] = (2, 4),
    strategy: Strategy = Strategy.HASH,
    oracle: Callable[..., LabelState] = oracle_labels,
) -> dict[str, list[str]]:
    """Run every engine; map each disagreeing engine name to its first differing rows."""
    reference, report = run(graph, seeds, config)
    candidates = {"oracle": oracle(graph, seeds, config.tie_break, config.max_supersteps)}
    reports = {}
    for k in ks:
        name = f"distributed k={k}"
        candidates[name], reports[name] = run_distributed(
            graph, seeds, k, strategy, Transport.INPROC, config
        )
    mismatches = {}
    for name, state in candidates.items():
        rows = diff_states(graph, reference, state)
        if name in reports and reports[name] != report:
            rows.insert(0, f"run report {reports[name]} != {report}")
        if rows:
            mismatches[name] = rows
    return mismatches
