"""Worker: owns one part of the graph and runs its half of every superstep."""

from __future__ import annotations

import logging

from ..errors import HandshakeError, ProtocolError, RuntimeFault
from ..propagation import TieBreak, aggregate, select_majority
from .messages import (
    MASTER,
    PROTOCOL_VERSION,
    BroadcastsDone,
    Halt,
    Handshake,
    LabelBroadcast,
    LoadPartition,
    SliceTransfer,
    StartSuperstep,
    SuperstepDone,
)
from .transport import Disconnected

log = logging.getLogger(__name__)

TIE_BREAK_CODES = {TieBreak.LEX_SMALLEST: 0, TieBreak.KEEP_ALL_TIED: 1}
TIE_BREAKS = {v: k for k, v in TIE_BREAK_CODES.items()}

DEFAULT_TIMEOUT = 600.0


class Worker:
    """Message-driven worker state machine.

    Superstep ``t`` has two phases. Phase 1 pushes the label set of every
    owned labeled node to its remote neighbors (local neighbors read the
    snapshot directly) and closes each peer stream with ``BroadcastsDone``.
    Phase 2 waits for all peers' markers, then labels each unlabeled owned
    node from its contributions in ascending source-node order.
    """

    def __init__(self, endpoint, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout
        self.part = -1
        self.k = 0
        self.fingerprint: tuple | None = None
        self.tie_break = TieBreak.LEX_SMALLEST
        self.suppress = False
        self.order: list[int] = []
        self.records: dict = {}
        self.labels: dict[int, tuple[str, ...]] = {}
        self.labeled_at: dict[int, int | None] = {}
        self.remote: dict[int, list[tuple[int, int, float]]] = {}
        self.unlabeled = 0
        self.sent_per_superstep: list[int] = []
        # superstep -> dest -> src -> (labels, weight)
        self._received: dict[int, dict[int, dict[int, tuple]]] = {}
        self._done_from: dict[int, set[int]] = {}
        self._peer_handshakes: list[Handshake] = []
        self._lost_peers: set[int] = set()
        self._queued: list = []
        self._step = 0

    def run(self) -> None:
        try:
            self._serve()
        except BaseException as exc:
            log.error("worker %d failed: %s", self.part, exc)
            self.endpoint.report_failure(exc)
            raise
        finally:
            self.endpoint.close()

    def _serve(self) -> None:
        hello = self._next_control()
        if not isinstance(hello, Handshake) or hello.sender != MASTER:
            raise ProtocolError(f"expected master handshake, got {type(hello).__name__}")
        self.fingerprint = hello.fingerprint()
        self.endpoint.send_master(hello._replace(version=PROTOCOL_VERSION))
        if hello.version != PROTOCOL_VERSION:
            raise HandshakeError(f"master speaks protocol {hello.version}, worker {PROTOCOL_VERSION}")
        if hello.tie_break not in TIE_BREAKS:
            raise HandshakeError(f"unknown tie-break code {hello.tie_break}")
        self.tie_break = TIE_BREAKS[hello.tie_break]
        self.suppress = hello.suppress

        load = self._next_control()
        if not isinstance(load, LoadPartition):
            raise ProtocolError(f"expected LoadPartition, got {type(load).__name__}")
        if load.k != hello.k:
            raise HandshakeError(f"LoadPartition k={load.k} disagrees with handshake k={hello.k}")
        self._load(load)
        self.endpoint.connect_peers(load.peers, self.part, hello._replace(sender=self.part))
        self.endpoint.send_master(SuperstepDone(0, self.part, 0, self.unlabeled))

        while True:
            msg = self._next_control()
            if isinstance(msg, StartSuperstep):
                if msg.t != self._step + 1:
                    raise ProtocolError(f"StartSuperstep {msg.t} after superstep {self._step}")
                self._step = msg.t
                self.endpoint.send_master(self.superstep(msg.t))
            elif isinstance(msg, Halt):
                entries = tuple((v, self.labels[v], self.labeled_at[v]) for v in self.order)
                self.endpoint.send_master(
                    SliceTransfer(self.part, entries, tuple(self.sent_per_superstep))
                )
                self._check_peer_handshakes()
                return
            else:
                raise ProtocolError(f"unexpected {type(msg).__name__} from master")

    def _load(self, load: LoadPartition) -> None:
        self.part = load.part
        self.k = load.k
        for rec in load.nodes:
            v = rec.node
            self.order.append(v)
            self.records[v] = rec
            self.labels[v] = rec.labels
            self.labeled_at[v] = rec.labeled_at
            if rec.labeled_at is None:
                self.unlabeled += 1
            remote = [(q, u, w) for u, w, q in zip(rec.nbrs, rec.wts, rec.parts) if q != self.part]
            if remote:
                self.remote[v] = remote
        self.order.sort()

    # inbox handling

    def _pull(self) -> list:
        if not self._queued:
            item = self.endpoint.recv(self.timeout)
            self._queued = list(reversed(item)) if isinstance(item, list) else [item]
        return self._queued

    def _next_control(self):
        """Return the next master message, absorbing peer traffic on the way."""
        while True:
            queued = self._pull()
            while queued:
                msg = queued.pop()
                if not self._absorb(msg):
                    return msg

    def _absorb(self, msg) -> bool:
        """Handle peer traffic; False means ``msg`` is for the caller."""
        if isinstance(msg, LabelBroadcast):
            self._accept_broadcast(msg)
        elif isinstance(msg, BroadcastsDone):
            if msg.t <= self._step - 1 or not 0 <= msg.part < self.k or msg.part == self.part:
                raise ProtocolError(f"stray BroadcastsDone {msg}")
            done = self._done_from.setdefault(msg.t, set())
            if msg.part in done:
                raise ProtocolError(f"duplicate BroadcastsDone {msg}")
            done.add(msg.part)
        elif isinstance(msg, Handshake) and msg.sender != MASTER:
            self._peer_handshakes.append(msg)
            self._check_peer_handshakes()
        elif isinstance(msg, Disconnected):
            if msg.part == MASTER:
                raise RuntimeFault("lost connection to master")
            self._lost_peers.add(msg.part)
        else:
            return False
        return True

    def _accept_broadcast(self, msg: LabelBroadcast) -> None:
        if msg.dest not in self.records:
            raise ProtocolError(
                f"worker {self.part} received LabelBroadcast for node {msg.dest} it does not own"
            )
        if msg.t <= self._step - 1 or msg.t > self._step + 1:
            raise ProtocolError(f"LabelBroadcast for superstep {msg.t} during superstep {self._step}")
        if self.labeled_at[msg.dest] is not None:
            return  # already labeled: discard
        self._received.setdefault(msg.t, {}).setdefault(msg.dest, {})[msg.src] = (msg.labels, msg.weight)

    def _check_peer_handshakes(self) -> None:
        if self.fingerprint is None:
            return
        for hs in self._peer_handshakes:
            if hs.fingerprint() != self.fingerprint:
                raise HandshakeError(f"peer {hs.sender} fingerprint {hs.fingerprint()} != {self.fingerprint}")
        self._peer_handshakes.clear()

    # superstep

    def broadcast(self, t: int) -> int:
        """Phase 1: push snapshot labels to remote neighbors; returns messages sent."""
        batches: dict[int, list] = {q: [] for q in range(self.k) if q != self.part}
        labels, labeled_at = self.labels, self.labeled_at
        for v, remote in self.remote.items():
            tv = labeled_at[v]
            if tv is None or (self.suppress and tv != t - 1):
                continue
            ls = labels[v]
            for q, u, w in remote:
                batches[q].append(LabelBroadcast(t, u, v, ls, w))
        sent = sum(len(b) for b in batches.values())
        for q, batch in batches.items():
            batch.append(BroadcastsDone(t, self.part))
            self.endpoint.send_peer(q, batch)
        return sent

    def _await_peers(self, t: int) -> None:
        peers = self.k - 1
        while len(self._done_from.get(t, ())) < peers:
            missing = set(range(self.k)) - {self.part} - self._done_from.get(t, set())
            if missing & self._lost_peers:
                raise RuntimeFault(f"peer(s) {sorted(missing & self._lost_peers)} disconnected in superstep {t}")
            queued = self._pull()
            while queued:
                msg = queued.pop()
                if not self._absorb(msg):
                    raise ProtocolError(f"unexpected {type(msg).__name__} during superstep {t}")
        self._done_from.pop(t, None)

    def superstep(self, t: int) -> SuperstepDone:
        self.sent_per_superstep.append(self.broadcast(t))
        self._await_peers(t)

        received = self._received.pop(t, {})
        labels, labeled_at, me = self.labels, self.labeled_at, self.part
        updates = []
        for v in self.order:
            if labeled_at[v] is not None:
                continue
            rec = self.records[v]
            from_remote = received.get(v)
            incoming = []
            for u, w, q in zip(rec.nbrs, rec.wts, rec.parts):
                if q == me:
                    if labeled_at[u] is not None:
                        incoming.append((labels[u], w))
                elif from_remote is not None:
                    got = from_remote.get(u)
                    if got is not None:
                        incoming.append(got)
            if incoming:
                updates.append((v, select_majority(aggregate(incoming), self.tie_break)))
        for v, ls in updates:
            labels[v] = ls
            labeled_at[v] = t
        self.unlabeled -= len(updates)
        return SuperstepDone(t, me, len(updates), self.unlabeled)
