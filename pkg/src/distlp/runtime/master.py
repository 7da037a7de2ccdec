"""Master: hands out parts, drives supersteps, decides when to halt."""

from __future__ import annotations

import logging
from typing import Sequence

from ..errors import HandshakeError, ProtocolError, RuntimeFault
from ..graph import Graph, LabelState
from ..partition import Partitioning
from ..propagation import HaltReason, PropagationConfig, RunReport, halt_decision
from .messages import (
    MASTER,
    PROTOCOL_VERSION,
    Halt,
    Handshake,
    LoadPartition,
    NodeRecord,
    SliceTransfer,
    StartSuperstep,
    SuperstepDone,
)
from .transport import Disconnected, WorkerFailed
from .worker import DEFAULT_TIMEOUT, TIE_BREAK_CODES

log = logging.getLogger(__name__)

STRATEGY_CODES = {"hash": 0, "range": 1, "greedy": 2}


def part_descriptors(
    graph: Graph, seeds: LabelState, partitioning: Partitioning, peers: Sequence[str] = ()
) -> list[LoadPartition]:
    part_of = partitioning.part_of
    out = []
    for p, owned in enumerate(partitioning.owned):
        nodes = tuple(
            NodeRecord(
                v,
                seeds.labels[v],
                seeds.labeled_at[v],
                graph.nbrs[v],
                graph.wts[v],
                tuple(part_of[u] for u in graph.nbrs[v]),
            )
            for v in owned
        )
        out.append(LoadPartition(p, partitioning.k, tuple(peers), nodes))
    return out


class Master:
    """Coordinator that talks to ``k`` workers through a master endpoint."""

    def __init__(
        self,
        endpoint,
        k: int,
        config: PropagationConfig,
        strategy: str = "hash",
        suppress: bool = False,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        self.endpoint = endpoint
        self.k = k
        self.config = config
        self.timeout = timeout
        self.handshake = Handshake(
            PROTOCOL_VERSION,
            MASTER,
            k,
            STRATEGY_CODES[strategy],
            TIE_BREAK_CODES[config.tie_break],
            config.max_supersteps or 0,
            suppress,
        )
        self.t = 0
        self.changed_history: list[int] = []
        self.unlabeled_history: list[int] = []

    def _gather(self, kind: type, t: int | None = None, check=None) -> dict[int, object]:
        """Collect exactly one ``kind`` message from every worker."""
        got: dict[int, object] = {}
        while len(got) < self.k:
            part, msg = self.endpoint.recv(self.timeout)
            if isinstance(msg, WorkerFailed):
                if isinstance(msg.error, HandshakeError):
                    raise HandshakeError(f"worker {part}: {msg.error}") from msg.error
                raise RuntimeFault(f"worker {part} failed: {msg.error!r}") from msg.error
            if isinstance(msg, Disconnected):
                if kind is SliceTransfer and part in got:
                    continue  # workers hang up after delivering their slice
                raise RuntimeFault(f"worker {part} disconnected")
            if not isinstance(msg, kind):
                raise ProtocolError(
                    f"expected {kind.__name__} from worker {part}, got {type(msg).__name__}"
                )
            if part in got:
                raise ProtocolError(f"worker {part} sent two {kind.__name__} messages")
            if t is not None and msg.t != t:
                raise ProtocolError(f"worker {part} reported superstep {msg.t}, expected {t}")
            if check is not None:
                check(part, msg)
            got[part] = msg
        return got

    def _check_echo(self, part: int, echo: Handshake) -> None:
        if echo.fingerprint() != self.handshake.fingerprint():
            raise HandshakeError(
                f"worker {part} fingerprint {echo.fingerprint()} != {self.handshake.fingerprint()}"
            )

    def run(self, graph: Graph, descriptors: Sequence[LoadPartition]) -> tuple[LabelState, RunReport]:
        if len(descriptors) != self.k:
            raise ProtocolError(f"{len(descriptors)} part descriptors for {self.k} workers")
        for p in range(self.k):
            self.endpoint.send(p, self.handshake)
        self._gather(Handshake, check=self._check_echo)
        for p, desc in enumerate(descriptors):
            self.endpoint.send(p, desc)
        acks = self._gather(SuperstepDone, 0)
        unlabeled = sum(a.unlabeled for a in acks.values())

        while True:
            self.t += 1
            for p in range(self.k):
                self.endpoint.send(p, StartSuperstep(self.t))
            dones = self._gather(SuperstepDone, self.t)
            changed = sum(d.changed for d in dones.values())
            unlabeled = sum(d.unlabeled for d in dones.values())
            self.changed_history.append(changed)
            self.unlabeled_history.append(unlabeled)
            log.debug("superstep %d: changed=%d unlabeled=%d", self.t, changed, unlabeled)
            reason = halt_decision(unlabeled, changed, self.t, self.config.max_supersteps)
            if reason is not None:
                break

        for p in range(self.k):
            self.endpoint.send(p, Halt(reason.value))
        slices = self._gather(SliceTransfer)
        return self._assemble(graph, slices, reason, unlabeled)

    def _assemble(
        self, graph: Graph, slices: dict, reason: HaltReason, unlabeled: int
    ) -> tuple[LabelState, RunReport]:
        n = graph.node_count
        labels: list = [None] * n
        labeled_at: list = [None] * n
        seen = 0
        messages = [0] * self.t
        for part, sl in slices.items():
            sl: SliceTransfer
            for v, ls, at in sl.entries:
                if not 0 <= v < n or labels[v] is not None:
                    raise ProtocolError(f"worker {part} returned node {v} twice or out of range")
                labels[v] = ls
                labeled_at[v] = at
                seen += 1
            if len(sl.messages_per_superstep) != self.t:
                raise ProtocolError(
                    f"worker {part} reported {len(sl.messages_per_superstep)} message counts"
                )
            for i, c in enumerate(sl.messages_per_superstep):
                messages[i] += c
        if seen != n:
            raise ProtocolError(f"workers returned {seen} of {n} nodes")
        state = LabelState(tuple(labels), tuple(labeled_at))
        if state.unlabeled_count != unlabeled:
            raise ProtocolError("slice contents disagree with reported unlabeled counts")
        report = RunReport(
            self.t,
            n - unlabeled,
            unlabeled,
            reason,
            tuple(self.changed_history),
            messages_per_superstep=tuple(messages),
        )
        return state, report
