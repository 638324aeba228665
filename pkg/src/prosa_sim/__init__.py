"""Simulator for a socially inspired semantic P2P overlay and its small-world metrics."""

from .knowledge import (
    Document,
    KnowledgeSummary,
    TermVector,
    cosine_relevance,
    peer_relevance,
    resources_relevance,
    summarize_knowledge,
    tpk_from_query,
    tpk_update,
)
from .metrics import (
    MetricsReport,
    apl_from_traces,
    clustering_coefficient_network,
    clustering_coefficient_node,
    random_graph_apl,
    random_graph_cc,
    windowed_apl,
)
from .overlay import LinkKind, LinkLabel, LinkTransition, OverlayNetwork
from .routing import QueryMessage, QueryTrace, RoutingConfig, exec_query, flood_targets, select_forwarder
from .workload import ExperimentConfig, run_experiment, sweep

__version__ = "0.1.0"
