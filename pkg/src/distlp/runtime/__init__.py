"""Master/worker execution of label propagation over message passing."""

from __future__ import annotations

import dataclasses
import enum
import threading
from typing import Sequence

from ..errors import ConfigError
from ..graph import Graph, LabelState
from ..partition import Strategy, edge_cut, partition
from ..propagation import PropagationConfig, RunReport, check_seeds
from .master import Master, part_descriptors
from .messages import MASTER
from .transport import (
    Disconnected,
    InprocNetwork,
    TcpMasterEndpoint,
    TcpWorkerEndpoint,
)
from .worker import DEFAULT_TIMEOUT, Worker

__all__ = ["Transport", "run_distributed", "serve_worker", "Master", "Worker"]


class Transport(enum.Enum):
    INPROC = "inproc"
    TCP = "tcp"


def _start(target, name: str) -> threading.Thread:
    th = threading.Thread(target=target, name=name, daemon=True)
    th.start()
    return th


def _quiet(worker: Worker):
    def body():
        try:
            worker.run()
        except BaseException:
            pass  # already reported to the master by Worker.run

    return body


def run_distributed(
    graph: Graph,
    seeds: LabelState,
    k: int,
    strategy: Strategy = Strategy.HASH,
    transport: Transport = Transport.INPROC,
    config: PropagationConfig = PropagationConfig(),
    suppress_redundant_broadcasts: bool = False,
    worker_addresses: Sequence[str] | None = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> tuple[LabelState, RunReport]:
    """Partition ``graph`` into ``k`` parts and propagate with one worker per part.

    With ``Transport.TCP`` and no ``worker_addresses``, ``k`` workers are
    started on loopback ports inside this process; otherwise the master
    connects to the given already-running workers (see :func:`serve_worker`).
    The result equals :func:`distlp.propagation.run` on the same input.
    """
    check_seeds(graph, seeds)
    parts = partition(graph, k, strategy)
    master_kwargs = dict(
        k=k,
        config=config,
        strategy=strategy.value,
        suppress=suppress_redundant_broadcasts,
        timeout=timeout,
    )
    threads: list[threading.Thread] = []

    if transport is Transport.INPROC:
        if worker_addresses:
            raise ConfigError("worker addresses only apply to the TCP transport")
        net = InprocNetwork(k)
        for p in range(k):
            threads.append(_start(_quiet(Worker(net.worker_endpoint(p), timeout)), f"worker-{p}"))
        endpoint = net.master_endpoint()
        descriptors = part_descriptors(graph, seeds, parts)
        try:
            state, report = Master(endpoint, **master_kwargs).run(graph, descriptors)
        except BaseException:
            for inbox in net.worker_inboxes:
                inbox.put(Disconnected(MASTER))
            raise
    elif transport is Transport.TCP:
        if worker_addresses is None:
            servers = [TcpWorkerEndpoint("127.0.0.1", 0) for _ in range(k)]
            worker_addresses = [s.address for s in servers]
            for p, server in enumerate(servers):
                threads.append(_start(_quiet(Worker(server, timeout)), f"worker-{p}"))
        elif len(worker_addresses) != k:
            raise ConfigError(f"{len(worker_addresses)} worker addresses for k={k}")
        endpoint = TcpMasterEndpoint(worker_addresses)
        descriptors = part_descriptors(graph, seeds, parts, worker_addresses)
        try:
            state, report = Master(endpoint, **master_kwargs).run(graph, descriptors)
        finally:
            endpoint.close()
    else:
        raise ConfigError(f"unknown transport {transport!r}")

    for th in threads:
        th.join(timeout)
    return state, dataclasses.replace(report, edge_cut=edge_cut(graph, parts))


def serve_worker(host: str, port: int, timeout: float = DEFAULT_TIMEOUT, on_listen=None) -> None:
    """Run one worker process: listen, serve a single run, return."""
    endpoint = TcpWorkerEndpoint(host, port)
    if on_listen is not None:
        on_listen(endpoint.address)
    Worker(endpoint, timeout).run()
