"""Distributed neighborhood-based label propagation over weighted similarity graphs."""

from .graph import Graph, LabelState, UNLABELED, load_graph, load_labels, state_from_mapping, write_labels
from .partition import Partitioning, Strategy, edge_cut, partition
from .propagation import (
    HaltReason,
    PropagationConfig,
    RunReport,
    TieBreak,
    aggregate,
    oracle_labels,
    run,
    select_majority,
    superstep,
)
from .runtime import Transport, run_distributed
from .similarity import AttributeRecordSet, build_similarity_graph, read_records

__version__ = "0.1.0"
