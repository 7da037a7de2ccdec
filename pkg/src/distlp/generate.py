"""Synthetic propagation instances: a random spanning tree plus uniform extra edges."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import TextIO

from .errors import ConfigError


@dataclass(frozen=True)
class Instance:
    edges: list[tuple[str, str, int]]
    seeds: dict[str, tuple[str, ...]]

    def write(self, graph_out: TextIO, seeds_out: TextIO) -> None:
        graph_out.writelines(f"{a}\t{b}\t{w}\n" for a, b, w in self.edges)
        seeds_out.writelines(f"{v}\t{','.join(ls)}\n" for v, ls in sorted(self.seeds.items()))


def node_name(i: int, n: int) -> str:
    return f"n{i:0{len(str(max(n - 1, 0)))}d}"


def generate(
    n: int,
    m: int,
    label_count: int,
    seed_fraction: float,
    rng_seed: int,
    max_weight: int = 5,
) -> Instance:
    """Random instance fully determined by ``rng_seed``.

    The first ``min(m, n - 1)`` edges form a random spanning tree, the rest are
    distinct uniform pairs. Weights are integers in ``[1, max_weight]``; each
    seed carries one of ``label_count`` labels.
    """
    if n < 0 or m < 0:
        raise ConfigError("n and m must be non-negative")
    if m > n * (n - 1) // 2:
        raise ConfigError(f"m={m} exceeds the {n * (n - 1) // 2} possible edges of {n} nodes")
    if label_count < 1:
        raise ConfigError("label_count must be >= 1")
    if not 0.0 <= seed_fraction <= 1.0:
        raise ConfigError("seed_fraction must lie in [0, 1]")
    rng = random.Random(rng_seed)
    perm = list(range(n))
    rng.shuffle(perm)

    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()

    def add(a: int, b: int) -> bool:
        key = (a, b) if a < b else (b, a)
        if a == b or key in seen:
            return False
        seen.add(key)
        pairs.append(key)
        return True

    for i in range(1, min(m + 1, n)):
        add(perm[i], perm[rng.randrange(i)])
    extra = m - len(pairs)
    if extra > (n * (n - 1) // 2) // 2:
        rest = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in seen]
        for a, b in rng.sample(rest, extra):
            add(a, b)
    else:
        while len(pairs) < m:
            add(rng.randrange(n), rng.randrange(n))

    edges = [
        (node_name(a, n), node_name(b, n), rng.randint(1, max_weight)) for a, b in pairs
    ]
    used = sorted({v for pair in pairs for v in pair})
    seed_count = min(len(used), round(seed_fraction * n))
    if seed_fraction > 0 and used:
        seed_count = max(seed_count, 1)
    labels = [f"L{j:0{len(str(label_count - 1))}d}" for j in range(label_count)]
    seeds = {node_name(v, n): (rng.choice(labels),) for v in rng.sample(used, seed_count)}
    return Instance(edges, seeds)
