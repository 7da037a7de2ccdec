"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 runtime fault,
4 verification mismatch.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from contextlib import contextmanager
from typing import Sequence

from .errors import ConfigError, DataError, DistLPError, VerificationMismatch
from .generate import generate
from .graph import MIN_POSITIVE, load_graph, load_labels, write_edge_list, write_labels
from .partition import Strategy, edge_cut, partition
from .propagation import PropagationConfig, TieBreak, run
from .runtime import Transport, run_distributed, serve_worker
from .similarity import build_similarity_graph, isolated_entities, read_records
from .verify import verify

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME, EXIT_MISMATCH = 0, 1, 2, 3, 4

STRATEGIES = {s.value: s for s in Strategy}
TIE_BREAKS = {t.value: t for t in TieBreak}

class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _add_propagation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="edge-list file")
    p.add_argument("--seeds", required=True, help="seed-label file")
    p.add_argument("--min-weight", type=_positive_float, default=MIN_POSITIVE)
    p.add_argument("--tie-break", choices=sorted(TIE_BREAKS), default="lex")
    p.add_argument("--max-supersteps", type=_positive_int, default=None)
    p.add_argument("--strategy", choices=sorted(STRATEGIES), default="hash")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="distlp", description="Distributed neighborhood label propagation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-graph", help="similarity graph from entity<TAB>attribute records")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-shared", type=_positive_int, default=1)
    p.add_argument("--max-attribute-frequency", type=_positive_int, default=None)

    p = sub.add_parser("run", help="propagate seed labels")
    _add_propagation_flags(p)
    p.add_argument("--out", required=True, help="label output file")
    p.add_argument("--workers", type=_non_negative_int, default=0, help="0 runs the reference engine")
    p.add_argument("--transport", choices=[t.value for t in Transport], default="inproc")
    p.add_argument("--worker-addrs", default=None, help="comma-separated host:port of running workers (tcp)")
    p.add_argument("--suppress-redundant-broadcasts", action="store_true")

    p = sub.add_parser("verify", help="check reference, oracle and distributed engines agree")
    _add_propagation_flags(p)

    p = sub.add_parser("gen", help="write a random instance")
    p.add_argument("--nodes", "-n", type=_non_negative_int, required=True)
    p.add_argument("--edges", "-m", type=_non_negative_int, required=True)
    p.add_argument("--labels", type=_positive_int, default=3)
    p.add_argument("--seed-fraction", type=float, default=0.05)
    p.add_argument("--rng-seed", type=int, required=True)
    p.add_argument("--graph-out", required=True)
    p.add_argument("--seeds-out", required=True)

    p = sub.add_parser("partition", help="print node-to-part assignment and quality summary")
    p.add_argument("--graph", required=True)
    p.add_argument("--min-weight", type=_positive_float, default=MIN_POSITIVE)
    p.add_argument("--workers", type=_positive_int, required=True)
    p.add_argument("--strategy", choices=sorted(STRATEGIES), default="hash")
    p.add_argument("--out", default=None, help="TSV destination (default stdout)")

    p = sub.add_parser("worker", help="serve one distributed run over TCP")
    p.add_argument("--listen", required=True, metavar="HOST:PORT")
    p.add_argument("--timeout", type=_positive_float, default=600.0)
    return parser


@contextmanager
def _open(path: str, mode: str = "r"):
    try:
        fh = open(path, mode, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror or exc}") from exc
    with fh:
        try:
            yield fh
        except UnicodeDecodeError as exc:
            raise DataError(f"{path} is not valid UTF-8: {exc}") from exc


def _load_instance(args):
    with _open(args.graph) as fh:
        graph = load_graph(fh, args.min_weight)
    with _open(args.seeds) as fh:
        seeds = load_labels(fh, graph)
    config = PropagationConfig(TIE_BREAKS[args.tie_break], args.max_supersteps)
    return graph, seeds, config


def cmd_build_graph(args) -> int:
    with _open(args.records) as fh:
        records = read_records(fh)
    graph = build_similarity_graph(records, args.min_shared, args.max_attribute_frequency)
    with _open(args.out, "w") as fh:
        write_edge_list(graph, fh)
    print(f"nodes: {graph.node_count}")
    print(f"edges: {graph.edge_count}")
    print(f"isolated entities: {len(isolated_entities(records, graph))}")
    return EXIT_OK


def cmd_run(args) -> int:
    graph, seeds, config = _load_instance(args)
    if args.workers == 0 and (args.transport != "inproc" or args.worker_addrs):
        raise UsageError("--transport/--worker-addrs need --workers >= 1")
    start = time.perf_counter()
    if args.workers == 0:
        state, report = run(graph, seeds, config)
    else:
        addrs = args.worker_addrs.split(",") if args.worker_addrs else None
        state, report = run_distributed(
            graph,
            seeds,
            args.workers,
            STRATEGIES[args.strategy],
            Transport(args.transport),
            config,
            suppress_redundant_broadcasts=args.suppress_redundant_broadcasts,
            worker_addresses=addrs,
        )
    elapsed = time.perf_counter() - start
    with _open(args.out, "w") as fh:
        write_labels(state, graph, fh)
    if args.workers == 0:
        engine = "reference"
    else:
        engine = f"distributed k={args.workers} ({args.transport}, {args.strategy})"
    print(f"engine: {engine}")
    for line in report.summary_lines():
        print(line)
    print(f"elapsed: {elapsed:.3f} s")
    return EXIT_OK


def cmd_verify(args) -> int:
    graph, seeds, config = _load_instance(args)
    mismatches = verify(graph, seeds, config, strategy=STRATEGIES[args.strategy])
    if not mismatches:
        print(f"verified: {graph.node_count} nodes, all engines agree")
        return EXIT_OK
    for name, rows in mismatches.items():
        print(f"MISMATCH reference vs {name}:")
        for row in rows[:10]:
            print(f"  {row}")
    raise VerificationMismatch(f"{len(mismatches)} engine(s) disagree with the reference")


def cmd_gen(args) -> int:
    inst = generate(args.nodes, args.edges, args.labels, args.seed_fraction, args.rng_seed)
    with _open(args.graph_out, "w") as g, _open(args.seeds_out, "w") as s:
        inst.write(g, s)
    print(f"wrote {len(inst.edges)} edges, {len(inst.seeds)} seeds")
    return EXIT_OK


def cmd_partition(args) -> int:
    with _open(args.graph) as fh:
        graph = load_graph(fh, args.min_weight)
    parts = partition(graph, args.workers, STRATEGIES[args.strategy])
    rows = [f"{ext}\t{parts.part_of[graph.index[ext]]}\n" for ext in sorted(graph.ids)]
    if args.out:
        with _open(args.out, "w") as fh:
            fh.writelines(rows)
    else:
        sys.stdout.writelines(rows)
    print("# part sizes: " + " ".join(map(str, parts.sizes)))
    print(f"# edge cut: {edge_cut(graph, parts)}")
    return EXIT_OK


def cmd_worker(args) -> int:
    from .runtime.transport import parse_address

    host, port = parse_address(args.listen)

    def announce(address: str) -> None:
        print(f"listening {address}", flush=True)

    serve_worker(host, port, args.timeout, on_listen=announce)
    return EXIT_OK


COMMANDS = {
    "build-graph": cmd_build_graph,
    "run": cmd_run,
    "verify": cmd_verify,
    "gen": cmd_gen,
    "partition": cmd_partition,
    "worker": cmd_worker,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"distlp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationMismatch as exc:
        print(f"distlp: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except DataError as exc:
        print(f"distlp: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DistLPError, OSError) as exc:
        print(f"distlp: runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
