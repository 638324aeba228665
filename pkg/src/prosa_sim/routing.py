"""Query execution over the overlay: forwarding, semantic flooding and tracing."""

from __future__ import annotations

import csv
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Iterable, Union

from .knowledge import TermVector, peer_relevance, resources_relevance
from .overlay import LinkKind, OverlayNetwork


@dataclass(frozen=True)
class QueryMessage:
    qid: int
    q: TermVector
    s: int
    n_r: int

    def __post_init__(self):
        if self.qid < 0:
            raise ValueError("qid must be non-negative")
        if not self.q:
            raise ValueError("query vector is empty")
        if self.n_r < 1:
            raise ValueError(f"n_r must be positive, got {self.n_r}")


@dataclass(frozen=True)
class RoutingConfig:
    doc_threshold: float = 0.5
    flood_threshold: float = 0.5
    ttl: int = 64

    def __post_init__(self):
        for name in ("doc_threshold", "flood_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.ttl < 0:
            raise ValueError("ttl must be non-negative")


# Trace events. ``budget`` is the n_r still outstanding on the message.

@dataclass(frozen=True)
class Forward:
    source: int
    target: int
    depth: int
    mode: str  # "best-forwarder" | "random-AL" | "flood"
    budget: int


@dataclass(frozen=True)
class Visit:
    peer: int
    depth: int
    budget: int


@dataclass(frozen=True)
class Respond:
    peer: int
    depth: int
    num_res: int


@dataclass(frozen=True)
class LinkUpdate:
    source: int
    target: int
    depth: int
    before: LinkKind | None
    after: LinkKind


@dataclass(frozen=True)
class DeadEnd:
    peer: int
    depth: int


@dataclass(frozen=True)
class TtlExhausted:
    peer: int
    depth: int


TraceEvent = Union[Forward, Visit, Respond, LinkUpdate, DeadEnd, TtlExhausted]


@dataclass
class QueryTrace:
    qid: int
    source: int
    events: list[TraceEvent] = field(default_factory=list)

    @property
    def total_results(self) -> int:
        return sum(e.num_res for e in self.events if isinstance(e, Respond))

    @property
    def responses(self) -> list[Respond]:
        return [e for e in self.events if isinstance(e, Respond)]

    @property
    def visits(self) -> list[Visit]:
        return [e for e in self.events if isinstance(e, Visit)]


def select_forwarder(
    net: OverlayNetwork,
    cur: int,
    q: TermVector,
    exclude: Collection[int],
    rng: random.Random,
) -> tuple[int, str] | tuple[None, None]:
    """Pick the next hop for an unanswered query.

    Returns ``(target, mode)``. The semantic link whose weight best matches
    ``q`` wins (lowest id on ties); with no usable semantic link a random AL
    target is drawn. ``(None, None)`` means there is nowhere left to go.
    """
    best, best_rel = None, -1.0
    acquaintances = []
    for target, label in sorted(net.successors(cur).items()):
        if target in exclude:
            continue
        if label.kind is LinkKind.AL:
            acquaintances.append(target)
            continue
        rel = peer_relevance(label.weight, q)
        if rel > best_rel:
            best, best_rel = target, rel
    if best is not None:
        return best, "best-forwarder"
    if acquaintances:
        return rng.choice(acquaintances), "random-AL"
    return None, None


def flood_targets(
    net: OverlayNetwork,
    cur: int,
    q: TermVector,
    threshold: float,
    exclude: Collection[int] = (),
) -> list[int]:
    return [
        target
        for target, label in sorted(net.successors(cur).items())
        if target not in exclude and peer_relevance(label.weight, q) > threshold
    ]


def exec_query(
    net: OverlayNetwork,
    qm: QueryMessage,
    cfg: RoutingConfig,
    rng: random.Random,
) -> QueryTrace:
    """Run one query to completion and return everything that happened.

    Recursive forwarding is flattened into a FIFO of
    ``(cur, prev, budget, depth)`` items. A peer enters the queue at most
    once per query, and peers already holding the query are never chosen
    as next hops.
    """
    if qm.s not in net:
        raise KeyError(f"unknown source peer {qm.s}")
    trace = QueryTrace(qm.qid, qm.s)
    events = trace.events
    q = qm.q
    queue = deque([(qm.s, None, qm.n_r, 0)])
    seen = {qm.s}

    while queue:
        cur, prev, budget, depth = queue.popleft()
        events.append(Visit(cur, depth, budget))
        if prev is not None:
            t = net.update_link(cur, prev, q)
            events.append(LinkUpdate(t.source, t.target, depth, _kind(t.before), t.after.kind))

        _, num_res = resources_relevance(net.documents(cur), q, budget, cfg.doc_threshold)
        if num_res == 0:
            if depth >= cfg.ttl:
                events.append(TtlExhausted(cur, depth))
                continue
            nxt, mode = select_forwarder(net, cur, q, seen, rng)
            if nxt is None:
                events.append(DeadEnd(cur, depth))
                continue
            events.append(Forward(cur, nxt, depth + 1, mode, budget))
            seen.add(nxt)
            queue.append((nxt, cur, budget, depth + 1))
            continue

        # result delivery to the source is instantaneous and otherwise a no-op
        events.append(Respond(cur, depth, num_res))
        if cur != qm.s:
            t = net.promote_to_fsl(qm.s, cur)
            events.append(LinkUpdate(t.source, t.target, depth, _kind(t.before), t.after.kind))
        remaining = budget - num_res
        if remaining <= 0:
            continue
        targets = flood_targets(net, cur, q, cfg.flood_threshold, seen)
        if targets and depth >= cfg.ttl:
            events.append(TtlExhausted(cur, depth))
            continue
        for target in targets:
            events.append(Forward(cur, target, depth + 1, "flood", remaining))
            seen.add(target)
            queue.append((target, cur, remaining, depth + 1))

    return trace


def _kind(label) -> LinkKind | None:
    return None if label is None else label.kind


TRACE_COLUMNS = ("qid", "event", "from", "to", "depth", "detail")


def trace_rows(trace: QueryTrace) -> Iterable[tuple]:
    for e in trace.events:
        if isinstance(e, Forward):
            yield trace.qid, "forward", e.source, e.target, e.depth, f"{e.mode};{e.budget}"
        elif isinstance(e, Visit):
            yield trace.qid, "visit", e.peer, "", e.depth, e.budget
        elif isinstance(e, Respond):
            yield trace.qid, "respond", e.peer, "", e.depth, e.num_res
        elif isinstance(e, LinkUpdate):
            before = "none" if e.before is None else e.before.name
            yield trace.qid, "link", e.source, e.target, e.depth, f"{before}>{e.after.name}"
        elif isinstance(e, DeadEnd):
            yield trace.qid, "dead-end", e.peer, "", e.depth, ""
        elif isinstance(e, TtlExhausted):
            yield trace.qid, "ttl", e.peer, "", e.depth, ""


def write_traces_csv(traces: Iterable[QueryTrace], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for trace in traces:
            writer.writerows(trace_rows(trace))


def read_traces_csv(path: str | Path) -> list[QueryTrace]:
    traces: dict[int, QueryTrace] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            qid = int(row["qid"])
            kind = row["event"]
            src = int(row["from"])
            depth = int(row["depth"])
            detail = row["detail"]
            trace = traces.get(qid)
            if trace is None:
                # every trace opens with the visit at its source
                trace = traces[qid] = QueryTrace(qid, src)
            if kind == "forward":
                mode, budget = detail.split(";")
                trace.events.append(Forward(src, int(row["to"]), depth, mode, int(budget)))
            elif kind == "visit":
                trace.events.append(Visit(src, depth, int(detail)))
            elif kind == "respond":
                trace.events.append(Respond(src, depth, int(detail)))
            elif kind == "link":
                before, after = detail.split(">")
                trace.events.append(LinkUpdate(
                    src, int(row["to"]), depth,
                    None if before == "none" else LinkKind[before], LinkKind[after],
                ))
            elif kind == "dead-end":
                trace.events.append(DeadEnd(src, depth))
            elif kind == "ttl":
                trace.events.append(TtlExhausted(src, depth))
            else:
                raise ValueError(f"unknown trace event {kind!r}")
    return list(traces.values())
