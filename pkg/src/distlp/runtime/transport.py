"""Point-to-point channels between the master and workers.

Both transports give every party one inbox and reliable, per-sender ordered
delivery. Worker inbox items are a message or a list of messages; master
inbox items are ``(part, message)`` pairs. Failures surface in inboxes as
:class:`WorkerFailed` / :class:`Disconnected` markers, which never go on the
wire.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
from typing import NamedTuple, Sequence

from ..errors import RuntimeFault, StartupError
from .messages import MASTER, FrameBuffer, Handshake, Message, encode

log = logging.getLogger(__name__)

_RECV_CHUNK = 1 << 16


class WorkerFailed(NamedTuple):
    part: int
    error: BaseException


class Disconnected(NamedTuple):
    part: int  # MASTER when the master link dropped


def _get(inbox: queue.Queue, timeout: float | None, what: str):
    try:
        return inbox.get(timeout=timeout)
    except queue.Empty:
        raise RuntimeFault(f"timed out after {timeout} s waiting for {what}") from None


class InprocNetwork:
    """Queues connecting one master and ``k`` worker threads in this process."""

    def __init__(self, k: int):
        self.k = k
        self.master_inbox: queue.Queue = queue.Queue()
        self.worker_inboxes = [queue.Queue() for _ in range(k)]

    def master_endpoint(self) -> InprocMasterEndpoint:
        return InprocMasterEndpoint(self)

    def worker_endpoint(self, part: int) -> InprocWorkerEndpoint:
        return InprocWorkerEndpoint(self, part)


class InprocMasterEndpoint:
    def __init__(self, net: InprocNetwork):
        self._net = net

    def send(self, part: int, msg: Message) -> None:
        self._net.worker_inboxes[part].put(msg)

    def recv(self, timeout: float | None = None):
        return _get(self._net.master_inbox, timeout, "worker reply")

    def close(self) -> None:
        pass


class InprocWorkerEndpoint:
    def __init__(self, net: InprocNetwork, part: int):
        self._net = net
        self.part = part

    def recv(self, timeout: float | None = None):
        return _get(self._net.worker_inboxes[self.part], timeout, "message")

    def send_master(self, msg: Message) -> None:
        self._net.master_inbox.put((self.part, msg))

    def send_peer(self, part: int, msgs: list[Message]) -> None:
        self._net.worker_inboxes[part].put(msgs)

    def connect_peers(self, peers: Sequence[str], me: int, handshake: Handshake) -> None:
        self.part = me

    def report_failure(self, error: BaseException) -> None:
        self._net.master_inbox.put((self.part, WorkerFailed(self.part, error)))

    def close(self) -> None:
        pass


def parse_address(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not host:
        raise StartupError(f"address {address!r} is not host:port")
    try:
        return host, int(port)
    except ValueError:
        raise StartupError(f"address {address!r} has a non-numeric port") from None


def _reader(
    sock: socket.socket,
    inbox: queue.Queue,
    tag,
    frames: FrameBuffer | None = None,
    initial: Sequence[Message] = (),
) -> None:
    """Decode frames from ``sock`` into ``inbox``; ``tag`` wraps each batch."""
    frames = frames or FrameBuffer()
    try:
        if initial:
            inbox.put(tag(list(initial)))
        while True:
            data = sock.recv(_RECV_CHUNK)
            if not data:
                break
            msgs = frames.feed(data)
            if msgs:
                inbox.put(tag(msgs))
    except Exception as exc:  # socket errors and undecodable frames end the link
        log.debug("reader stopped: %r", exc)
    finally:
        inbox.put(tag(None))


def _read_first_frame(sock: socket.socket) -> tuple[Message, list[Message], FrameBuffer]:
    frames = FrameBuffer()
    while True:
        data = sock.recv(_RECV_CHUNK)
        if not data:
            raise ConnectionError("connection closed before handshake")
        msgs = frames.feed(data)
        if msgs:
            return msgs[0], msgs[1:], frames


class TcpWorkerEndpoint:
    """Worker side of the TCP transport: listens for the master and its peers.

    The master connects first and sends a handshake; after ``LoadPartition``
    the worker dials every peer and sends its own handshake, so each ordered
    pair of workers shares one connection per direction.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0, backlog: int = 64):
        try:
            self._listener = socket.create_server((host, port), backlog=backlog)
        except OSError as exc:
            raise StartupError(f"cannot listen on {host}:{port}: {exc}") from exc
        self.address = "%s:%d" % self._listener.getsockname()[:2]
        self.part = -1
        self._inbox: queue.Queue = queue.Queue()
        self._master: socket.socket | None = None
        self._outbound: dict[int, socket.socket] = {}
        self._sockets: list[socket.socket] = []
        self._closed = threading.Event()
        self._acceptor = threading.Thread(target=self._accept_loop, daemon=True)
        self._acceptor.start()

    def _accept_loop(self) -> None:
        while not self._closed.is_set():
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self._sockets.append(conn)
            try:
                hello, rest, frames = _read_first_frame(conn)
            except Exception as exc:
                log.warning("dropping connection without handshake: %s", exc)
                conn.close()
                continue
            if not isinstance(hello, Handshake):
                log.warning("dropping connection that opened with %s", type(hello).__name__)
                conn.close()
                continue
            sender = hello.sender
            if sender == MASTER:
                self._master = conn
            self._inbox.put(hello)

            def tag(msgs, sender=sender):
                return Disconnected(sender) if msgs is None else msgs

            threading.Thread(
                target=_reader, args=(conn, self._inbox, tag, frames, rest), daemon=True
            ).start()

    def recv(self, timeout: float | None = None):
        return _get(self._inbox, timeout, "message")

    def send_master(self, msg: Message) -> None:
        if self._master is None:
            raise RuntimeFault("no master connection")
        self._master.sendall(encode(msg))

    def send_peer(self, part: int, msgs: list[Message]) -> None:
        self._outbound[part].sendall(b"".join(map(encode, msgs)))

    def connect_peers(self, peers: Sequence[str], me: int, handshake: Handshake) -> None:
        self.part = me
        hello = encode(handshake)
        for q, address in enumerate(peers):
            if q == me:
                continue
            try:
                sock = socket.create_connection(parse_address(address))
            except OSError as exc:
                raise StartupError(f"cannot reach peer {q} at {address}: {exc}") from exc
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            sock.sendall(hello)
            self._outbound[q] = sock
            self._sockets.append(sock)

    def report_failure(self, error: BaseException) -> None:
        # The master notices the dropped connection.
        self.close()

    def close(self) -> None:
        self._closed.set()
        try:
            self._listener.close()
        except OSError:
            pass
        for sock in self._sockets:
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            sock.close()


class TcpMasterEndpoint:
    def __init__(self, addresses: Sequence[str], connect_timeout: float = 10.0):
        self._inbox: queue.Queue = queue.Queue()
        self._socks: list[socket.socket] = []
        for part, address in enumerate(addresses):
            try:
                sock = socket.create_connection(parse_address(address), timeout=connect_timeout)
            except OSError as exc:
                self.close()
                raise StartupError(f"cannot reach worker {part} at {address}: {exc}") from exc
            sock.settimeout(None)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self._socks.append(sock)
        self._pending: list = []
        for part, sock in enumerate(self._socks):

            def tag(msgs, part=part):
                return [(part, Disconnected(part))] if msgs is None else [(part, m) for m in msgs]

            threading.Thread(target=_reader, args=(sock, self._inbox, tag), daemon=True).start()

    def send(self, part: int, msg: Message) -> None:
        try:
            self._socks[part].sendall(encode(msg))
        except OSError as exc:
            raise RuntimeFault(f"lost connection to worker {part}: {exc}") from exc

    def recv(self, timeout: float | None = None):
        while not self._pending:
            self._pending = list(reversed(_get(self._inbox, timeout, "worker reply")))
        return self._pending.pop()

    def close(self) -> None:
        for sock in self._socks:
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            sock.close()
