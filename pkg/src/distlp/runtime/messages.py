"""Messages exchanged by master and workers, and their binary wire encoding.

Frame layout: 4-byte big-endian payload length, then the payload, which starts
with a 1-byte type tag. All integers are big-endian; node ids are 8-byte
unsigned dense indices, weights IEEE-754 binary64, label sets a 2-byte count
followed by 2-byte-length-prefixed UTF-8 strings.
"""

from __future__ import annotations

import struct
from typing import NamedTuple, Union

from ..errors import ProtocolError

PROTOCOL_VERSION = 1

#: Sender id used by the master in handshakes.
MASTER = 0xFFFFFFFF
#: ``labeled_at`` wire value for unlabeled nodes.
NO_STEP = 0xFFFFFFFF

TAG_LOAD_PARTITION = 1
TAG_START_SUPERSTEP = 2
TAG_LABEL_BROADCAST = 3
TAG_BROADCASTS_DONE = 4
TAG_SUPERSTEP_DONE = 5
TAG_HALT = 6
TAG_SLICE_TRANSFER = 7
TAG_HANDSHAKE = 8

_LEN = struct.Struct(">I")
_U8 = struct.Struct(">B")
_U16 = struct.Struct(">H")
_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")
_F64 = struct.Struct(">d")
_BROADCAST = struct.Struct(">IQQd")
_DONE = struct.Struct(">IIQQ")
_HANDSHAKE = struct.Struct(">BIIBBQB")


class NodeRecord(NamedTuple):
    """An owned node shipped to its worker: labels plus full adjacency."""

    node: int
    labels: tuple[str, ...]
    labeled_at: int | None
    nbrs: tuple[int, ...]
    wts: tuple[float, ...]
    parts: tuple[int, ...]  # owning part of each neighbor


class Handshake(NamedTuple):
    version: int
    sender: int  # part id, or MASTER
    k: int
    strategy: int
    tie_break: int
    max_supersteps: int  # 0: unbounded
    suppress: bool

    def fingerprint(self) -> tuple:
        return (self.version, self.k, self.strategy, self.tie_break, self.max_supersteps, self.suppress)


class LoadPartition(NamedTuple):
    part: int
    k: int
    peers: tuple[str, ...]  # host:port per part; empty for in-process runs
    nodes: tuple[NodeRecord, ...]


class StartSuperstep(NamedTuple):
    t: int


class LabelBroadcast(NamedTuple):
    t: int
    dest: int
    src: int
    labels: tuple[str, ...]
    weight: float


class BroadcastsDone(NamedTuple):
    t: int
    part: int


class SuperstepDone(NamedTuple):
    t: int
    part: int
    changed: int
    unlabeled: int


class Halt(NamedTuple):
    reason: int


class SliceTransfer(NamedTuple):
    part: int
    entries: tuple[tuple[int, tuple[str, ...], int | None], ...]  # (node, labels, labeled_at)
    messages_per_superstep: tuple[int, ...]


Message = Union[
    Handshake,
    LoadPartition,
    StartSuperstep,
    LabelBroadcast,
    BroadcastsDone,
    SuperstepDone,
    Halt,
    SliceTransfer,
]


def _labels(labels: tuple[str, ...]) -> bytes:
    if len(labels) > 0xFFFF:
        raise ProtocolError(f"label set too large ({len(labels)} labels)")
    out = [_U16.pack(len(labels))]
    for label in labels:
        raw = label.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ProtocolError("label longer than 65535 bytes")
        out.append(_U16.pack(len(raw)))
        out.append(raw)
    return b"".join(out)


def _str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ProtocolError("string longer than 65535 bytes")
    return _U16.pack(len(raw)) + raw


def _step(t: int | None) -> bytes:
    return _U32.pack(NO_STEP if t is None else t)


def encode_payload(msg: Message) -> bytes:
    """Tag byte plus body, without the length prefix."""
    if isinstance(msg, LabelBroadcast):
        if not msg.weight > 0:
            raise ProtocolError("LabelBroadcast weight must be positive")
        if not msg.labels:
            raise ProtocolError("LabelBroadcast label set must be non-empty")
        return (
            bytes((TAG_LABEL_BROADCAST,))
            + _BROADCAST.pack(msg.t, msg.dest, msg.src, msg.weight)
            + _labels(msg.labels)
        )
    if isinstance(msg, StartSuperstep):
        return bytes((TAG_START_SUPERSTEP,)) + _U32.pack(msg.t)
    if isinstance(msg, BroadcastsDone):
        return bytes((TAG_BROADCASTS_DONE,)) + _U32.pack(msg.t) + _U32.pack(msg.part)
    if isinstance(msg, SuperstepDone):
        return bytes((TAG_SUPERSTEP_DONE,)) + _DONE.pack(msg.t, msg.part, msg.changed, msg.unlabeled)
    if isinstance(msg, Halt):
        return bytes((TAG_HALT,)) + _U8.pack(msg.reason)
    if isinstance(msg, Handshake):
        return bytes((TAG_HANDSHAKE,)) + _HANDSHAKE.pack(
            msg.version, msg.sender, msg.k, msg.strategy, msg.tie_break,
            msg.max_supersteps, int(msg.suppress),
        )
    if isinstance(msg, LoadPartition):
        out = [bytes((TAG_LOAD_PARTITION,)), _U32.pack(msg.part), _U32.pack(msg.k)]
        out.append(_U32.pack(len(msg.peers)))
        out.extend(_str(p) for p in msg.peers)
        out.append(_U64.pack(len(msg.nodes)))
        for rec in msg.nodes:
            out.append(_U64.pack(rec.node))
            out.append(_labels(rec.labels))
            out.append(_step(rec.labeled_at))
            out.append(_U32.pack(len(rec.nbrs)))
            for u, w, q in zip(rec.nbrs, rec.wts, rec.parts):
                out.append(_U64.pack(u) + _F64.pack(w) + _U32.pack(q))
        return b"".join(out)
    if isinstance(msg, SliceTransfer):
        out = [bytes((TAG_SLICE_TRANSFER,)), _U32.pack(msg.part), _U64.pack(len(msg.entries))]
        for node, labels, t in msg.entries:
            out.append(_U64.pack(node) + _labels(labels) + _step(t))
        out.append(_U32.pack(len(msg.messages_per_superstep)))
        out.extend(_U64.pack(c) for c in msg.messages_per_superstep)
        return b"".join(out)
    raise ProtocolError(f"cannot encode {type(msg).__name__}")


def encode(msg: Message) -> bytes:
    payload = encode_payload(msg)
    return _LEN.pack(len(payload)) + payload


class _Reader:
    __slots__ = ("buf", "pos")

    def __init__(self, buf: bytes | memoryview):
        self.buf = buf
        self.pos = 0

    def take(self, st: struct.Struct) -> tuple:
        end = self.pos + st.size
        if end > len(self.buf):
            raise ProtocolError("truncated message")
        vals = st.unpack_from(self.buf, self.pos)
        self.pos = end
        return vals

    def u16(self) -> int:
        return self.take(_U16)[0]

    def u32(self) -> int:
        return self.take(_U32)[0]

    def u64(self) -> int:
        return self.take(_U64)[0]

    def raw(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.buf):
            raise ProtocolError("truncated message")
        out = bytes(self.buf[self.pos:end])
        self.pos = end
        return out

    def string(self) -> str:
        try:
            return self.raw(self.u16()).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"invalid UTF-8: {exc}") from None

    def labels(self) -> tuple[str, ...]:
        return tuple(self.string() for _ in range(self.u16()))

    def step(self) -> int | None:
        t = self.u32()
        return None if t == NO_STEP else t


def decode_payload(payload: bytes | memoryview) -> Message:
    """Inverse of :func:`encode_payload`."""
    if not payload:
        raise ProtocolError("empty payload")
    tag = payload[0]
    r = _Reader(payload)
    r.pos = 1
    if tag == TAG_LABEL_BROADCAST:
        t, dest, src, weight = r.take(_BROADCAST)
        msg: Message = LabelBroadcast(t, dest, src, r.labels(), weight)
    elif tag == TAG_START_SUPERSTEP:
        msg = StartSuperstep(r.u32())
    elif tag == TAG_BROADCASTS_DONE:
        msg = BroadcastsDone(r.u32(), r.u32())
    elif tag == TAG_SUPERSTEP_DONE:
        msg = SuperstepDone(*r.take(_DONE))
    elif tag == TAG_HALT:
        msg = Halt(r.take(_U8)[0])
    elif tag == TAG_HANDSHAKE:
        version, sender, k, strategy, tie, max_steps, suppress = r.take(_HANDSHAKE)
        msg = Handshake(version, sender, k, strategy, tie, max_steps, bool(suppress))
    elif tag == TAG_LOAD_PARTITION:
        part, k = r.u32(), r.u32()
        peers = tuple(r.string() for _ in range(r.u32()))
        nodes = []
        for _ in range(r.u64()):
            node = r.u64()
            labels = r.labels()
            labeled_at = r.step()
            nbrs, wts, parts = [], [], []
            for _ in range(r.u32()):
                nbrs.append(r.u64())
                wts.append(r.take(_F64)[0])
                parts.append(r.u32())
            nodes.append(NodeRecord(node, labels, labeled_at, tuple(nbrs), tuple(wts), tuple(parts)))
        msg = LoadPartition(part, k, peers, tuple(nodes))
    elif tag == TAG_SLICE_TRANSFER:
        part = r.u32()
        entries = []
        for _ in range(r.u64()):
            node = r.u64()
            labels = r.labels()
            entries.append((node, labels, r.step()))
        counts = tuple(r.u64() for _ in range(r.u32()))
        msg = SliceTransfer(part, tuple(entries), counts)
    else:
        raise ProtocolError(f"unknown message tag {tag}")
    if r.pos != len(payload):
        raise ProtocolError(f"{len(payload) - r.pos} trailing bytes after {type(msg).__name__}")
    return msg


def decode(frame: bytes) -> Message:
    """Decode one complete frame (length prefix included)."""
    if len(frame) < _LEN.size:
        raise ProtocolError("truncated frame header")
    (length,) = _LEN.unpack_from(frame)
    if len(frame) != _LEN.size + length:
        raise ProtocolError(f"frame length {length} does not match {len(frame) - _LEN.size} bytes")
    return decode_payload(memoryview(frame)[_LEN.size:])


class FrameBuffer:
    """Accumulates stream bytes and yields complete decoded messages."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Message]:
        self._buf += data
        out = []
        pos = 0
        buf = self._buf
        while len(buf) - pos >= _LEN.size:
            (length,) = _LEN.unpack_from(buf, pos)
            end = pos + _LEN.size + length
            if end > len(buf):
                break
            out.append(decode_payload(bytes(buf[pos + _LEN.size:end])))
            pos = end
        del buf[:pos]
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)
