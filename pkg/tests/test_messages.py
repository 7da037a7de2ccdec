import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from distlp.errors import ProtocolError
from distlp.runtime.messages import (
    BroadcastsDone,
    FrameBuffer,
    Halt,
    Handshake,
    LabelBroadcast,
    LoadPartition,
    NodeRecord,
    SliceTransfer,
    StartSuperstep,
    SuperstepDone,
    decode,
    encode,
)

from instances import random_message


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2**63))
def test_round_trip(seed):
    msg = random_message(random.Random(seed))
    assert decode(encode(msg)) == msg


def test_start_superstep_bytes():
    assert encode(StartSuperstep(7)) == b"\x00\x00\x00\x05\x02\x00\x00\x00\x07"


def test_label_broadcast_bytes():
    frame = encode(LabelBroadcast(3, 10, 2, ("GO:1", "é"), 1.5))
    body = (
        b"\x03"
        + struct.pack(">I", 3)
        + struct.pack(">Q", 10)
        + struct.pack(">Q", 2)
        + struct.pack(">d", 1.5)
        + b"\x00\x02"
        + b"\x00\x04GO:1"
        + b"\x00\x02" + "é".encode()
    )
    assert frame == struct.pack(">I", len(body)) + body


@pytest.mark.parametrize(
    "msg, tag",
    [
        (LoadPartition(0, 1, (), ()), 1),
        (StartSuperstep(1), 2),
        (LabelBroadcast(1, 0, 1, ("a",), 1.0), 3),
        (BroadcastsDone(1, 0), 4),
        (SuperstepDone(1, 0, 0, 0), 5),
        (Halt(1), 6),
        (SliceTransfer(0, (), ()), 7),
        (Handshake(1, 0, 1, 0, 0, 0, False), 8),
    ],
)
def test_type_tags(msg, tag):
    assert encode(msg)[4] == tag


def test_unlabeled_step_sentinel():
    rec = NodeRecord(1, (), None, (2,), (0.5,), (1,))
    msg = LoadPartition(0, 2, ("h:1", "h:2"), (rec,))
    assert decode(encode(msg)).nodes[0].labeled_at is None


@pytest.mark.parametrize(
    "msg",
    [LabelBroadcast(1, 0, 1, (), 1.0), LabelBroadcast(1, 0, 1, ("a",), 0.0), LabelBroadcast(1, 0, 1, ("a",), -2.0)],
)
def test_broadcast_invariants_enforced(msg):
    with pytest.raises(ProtocolError):
        encode(msg)


def test_decode_rejects_garbage():
    good = encode(SuperstepDone(1, 2, 3, 4))
    with pytest.raises(ProtocolError, match="truncated"):
        short = good[4:-1]
        decode(struct.pack(">I", len(short)) + short)
    with pytest.raises(ProtocolError, match="does not match"):
        decode(good[:-1])
    with pytest.raises(ProtocolError, match="unknown message tag"):
        decode(b"\x00\x00\x00\x01\x63")
    with pytest.raises(ProtocolError, match="trailing"):
        payload = good[4:] + b"\x00"
        decode(struct.pack(">I", len(payload)) + payload)
    with pytest.raises(ProtocolError):
        decode(b"\x00\x00")


def test_frame_buffer_handles_split_and_coalesced_frames():
    rng = random.Random(8)
    msgs = [random_message(rng) for _ in range(200)]
    stream = b"".join(encode(m) for m in msgs)
    buf = FrameBuffer()
    out = []
    pos = 0
    while pos < len(stream):
        step = rng.randint(1, 300)
        out.extend(buf.feed(stream[pos:pos + step]))
        pos += step
    assert out == msgs
    assert buf.pending == 0
