"""Small-world diagnostics: query path lengths, clustering, random-graph baselines."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .overlay import OverlayNetwork
from .routing import QueryTrace, Respond

Adjacency = Mapping[int, "set[int] | Mapping[int, object]"]


def apl_from_traces(traces: Sequence[QueryTrace], first_only: bool = False) -> float:
    """Mean hop depth at which queries were answered.

    Every responder of every trace counts once, unless ``first_only`` is set,
    in which case only the first responder of each trace counts.
    """
    total = 0
    count = 0
    for trace in traces:
        for event in trace.events:
            if isinstance(event, Respond):
                total += event.depth
                count += 1
                if first_only:
                    break
    return total / count if count else 0.0


def windowed_apl(
    traces: Sequence[QueryTrace], window: int = 300, step: int = 50, first_only: bool = False
) -> list[tuple[int, float]]:
    if window < 1:
        raise ValueError("window must be at least 1")
    if not 1 <= step <= window:
        raise ValueError("step must lie in [1, window]")
    return [
        (start, apl_from_traces(traces[start:start + window], first_only))
        for start in range(0, len(traces) - window + 1, step)
    ]


def _adjacency(graph: OverlayNetwork | Adjacency) -> Adjacency:
    if isinstance(graph, OverlayNetwork):
        return {p: graph.successors(p) for p in graph.peer_ids()}
    return graph


def clustering_coefficient_node(graph: OverlayNetwork | Adjacency, n: int) -> float | None:
    """Fraction of ordered neighbour pairs (a, b) with a link a -> b.

    Neighbours are out-neighbours. ``None`` when fewer than two exist.
    """
    adj = _adjacency(graph)
    neighbours = adj[n]
    k = len(neighbours)
    if k < 2:
        return None
    real = 0
    for a in neighbours:
        out_a = adj[a]
        # iterate whichever side is smaller
        if len(out_a) < k:
            real += sum(1 for b in out_a if b != a and b in neighbours)
        else:
            real += sum(1 for b in neighbours if b != a and b in out_a)
    return real / (k * (k - 1))


def clustering_per_node(graph: OverlayNetwork | Adjacency) -> dict[int, float | None]:
    adj = _adjacency(graph)
    return {n: clustering_coefficient_node(adj, n) for n in sorted(adj)}


def clustering_coefficient_network(
    graph: OverlayNetwork | Adjacency, sparse_as_zero: bool = False
) -> float:
    """Average node clustering.

    Nodes with fewer than two out-neighbours are skipped, or counted as 0
    when ``sparse_as_zero`` is set.
    """
    values = []
    for value in clustering_per_node(graph).values():
        if value is None:
            if sparse_as_zero:
                values.append(0.0)
        else:
            values.append(value)
    return math.fsum(values) / len(values) if values else 0.0


def random_graph_apl(v: int, e: int) -> float:
    """Expected path length of a random graph, ln|V| / ln(|E|/|V|)."""
    if v < 2:
        raise ValueError(f"need at least 2 vertices, got {v}")
    if e <= v:
        raise ValueError(f"undefined for mean degree <= 1 (|E|={e}, |V|={v})")
    return math.log(v) / math.log(e / v)


def random_graph_cc(v: int, e: int) -> float:
    if v < 2:
        raise ValueError(f"need at least 2 vertices, got {v}")
    if e < 0:
        raise ValueError("edge count must be non-negative")
    return e / (v * (v - 1))


@dataclass
class MetricsReport:
    apl: float
    cc: float
    random_apl: float
    random_cc: float
    node_count: int
    edge_count: int
    apl_windows: list[tuple[int, float]] = field(default_factory=list)
    cc_per_node: dict[int, float | None] = field(default_factory=dict)

    @property
    def cc_ratio(self) -> float:
        return self.cc / self.random_cc if self.random_cc else math.inf


SUMMARY_FIELDS = ("apl", "cc", "random_apl", "random_cc", "node_count", "edge_count")


def build_report(
    graph: OverlayNetwork | Adjacency,
    traces: Sequence[QueryTrace],
    *,
    edge_count: int | None = None,
    window: int = 300,
    step: int = 50,
    first_only: bool = False,
    sparse_as_zero: bool = False,
) -> MetricsReport:
    adj = _adjacency(graph)
    v = len(adj)
    e = edge_count if edge_count is not None else sum(len(out) for out in adj.values())
    per_node = clustering_per_node(adj)
    defined = [c for c in per_node.values() if c is not None]
    if sparse_as_zero:
        defined += [0.0] * (len(per_node) - len(defined))
    try:
        rnd_apl = random_graph_apl(v, e)
    except ValueError:
        rnd_apl = math.nan
    return MetricsReport(
        apl=apl_from_traces(traces, first_only),
        cc=math.fsum(defined) / len(defined) if defined else 0.0,
        random_apl=rnd_apl,
        random_cc=random_graph_cc(v, e) if v >= 2 else math.nan,
        node_count=v,
        edge_count=e,
        apl_windows=windowed_apl(traces, window, step, first_only),
        cc_per_node=per_node,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics_csv(report: MetricsReport, path: str | Path) -> None:
    """Write a report as ``record,key,value`` rows.

    ``summary`` rows hold the scalar fields, ``window`` rows map a window
    start to its APL, ``node`` rows map a peer to its clustering (blank
    when undefined).
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("record", "key", "value"))
        for name in SUMMARY_FIELDS:
            writer.writerow(("summary", name, _fmt(getattr(report, name))))
        for start, apl in report.apl_windows:
            writer.writerow(("window", start, _fmt(apl)))
        for peer, cc in sorted(report.cc_per_node.items()):
            writer.writerow(("node", peer, _fmt(cc)))


def read_metrics_csv(path: str | Path) -> MetricsReport:
    summary: dict[str, str] = {}
    windows = []
    nodes: dict[int, float | None] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            record, key, value = row["record"], row["key"], row["value"]
            if record == "summary":
                summary[key] = value
            elif record == "window":
                windows.append((int(key), float(value)))
            elif record == "node":
                nodes[int(key)] = float(value) if value != "" else None
            else:
                raise ValueError(f"unknown metrics record {record!r}")
    return MetricsReport(
        apl=float(summary["apl"]),
        cc=float(summary["cc"]),
        random_apl=float(summary["random_apl"]),
        random_cc=float(summary["random_cc"]),
        node_count=int(summary["node_count"]),
        edge_count=int(summary["edge_count"]),
        apl_windows=windows,
        cc_per_node=nodes,
    )
