"""The overlay graph: peers, labelled directed links, joining and link evolution."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .knowledge import (
    Document,
    KnowledgeSummary,
    TermVector,
    summarize_knowledge,
    tpk_from_query,
    tpk_update,
)


class LinkKind(enum.IntEnum):
    """Link types ordered by strength; labels only ever move upward."""

    AL = 0
    TSL = 1
    FSL = 2


@dataclass(frozen=True)
class LinkLabel:
    kind: LinkKind
    weight: TermVector | None = None
    seen_count: int | None = None

    def __post_init__(self):
        if self.kind is LinkKind.AL:
            if self.weight is not None or self.seen_count is not None:
                raise ValueError("an acquaintance link carries no weight")
        elif self.kind is LinkKind.TSL:
            if not self.weight or self.seen_count is None or self.seen_count < 1:
                raise ValueError("a TSL needs a non-empty weight and seen_count >= 1")
            if abs(self.weight.norm - 1.0) > 1e-9:
                raise ValueError("TSL weight must be normalized")
        else:
            if self.weight is None:
                raise ValueError("an FSL needs a weight")
            if self.seen_count is not None:
                raise ValueError("an FSL has no seen_count")

    @classmethod
    def al(cls) -> LinkLabel:
        return cls(LinkKind.AL)

    @classmethod
    def tsl(cls, weight: TermVector, seen_count: int = 1) -> LinkLabel:
        return cls(LinkKind.TSL, weight, seen_count)

    @classmethod
    def fsl(cls, weight: TermVector) -> LinkLabel:
        return cls(LinkKind.FSL, weight)


@dataclass(frozen=True)
class LinkTransition:
    """What one mutation did to the link ``source -> target``."""

    source: int
    target: int
    before: LinkLabel | None
    after: LinkLabel

    @property
    def changed(self) -> bool:
        return self.before != self.after


@dataclass
class Peer:
    documents: list[Document] = field(default_factory=list)
    knowledge: KnowledgeSummary = field(default_factory=KnowledgeSummary)


class OverlayNetwork:
    """Directed graph of peers with at most one labelled link per ordered pair.

    Peer ids are assigned sequentially from 0. Every link mutation is
    reported to the callables in ``observers``.
    """

    def __init__(self):
        self.peers: list[Peer] = []
        self._out: list[dict[int, LinkLabel]] = []
        self._edge_count = 0
        self.observers: list[Callable[[LinkTransition], None]] = []

    def __len__(self) -> int:
        return len(self.peers)

    def __contains__(self, peer: object) -> bool:
        return isinstance(peer, int) and 0 <= peer < len(self.peers)

    @property
    def node_count(self) -> int:
        return len(self.peers)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def peer_ids(self) -> range:
        return range(len(self.peers))

    def _require(self, peer: int) -> None:
        if peer not in self:
            raise KeyError(f"unknown peer {peer}")

    def add_peer(self, docs: Sequence[Document] = ()) -> int:
        docs = list(docs)
        self.peers.append(Peer(docs, summarize_knowledge(docs)))
        self._out.append({})
        return len(self.peers) - 1

    def add_documents(self, peer: int, docs: Iterable[Document]) -> None:
        """Share more documents from ``peer``; its knowledge summary is rebuilt."""
        self._require(peer)
        p = self.peers[peer]
        p.documents.extend(docs)
        p.knowledge = summarize_knowledge(p.documents)

    def knowledge(self, peer: int) -> KnowledgeSummary:
        self._require(peer)
        return self.peers[peer].knowledge

    def documents(self, peer: int) -> list[Document]:
        self._require(peer)
        return self.peers[peer].documents

    def label(self, source: int, target: int) -> LinkLabel | None:
        self._require(source)
        return self._out[source].get(target)

    def has_link(self, source: int, target: int) -> bool:
        return self.label(source, target) is not None

    def successors(self, peer: int) -> dict[int, LinkLabel]:
        """Live view of the out-links of ``peer``; do not mutate."""
        return self._out[peer]

    def neighborhood(self, peer: int) -> list[tuple[int, LinkLabel]]:
        self._require(peer)
        return sorted(self._out[peer].items())

    def links(self) -> Iterable[tuple[int, int, LinkLabel]]:
        for source, out in enumerate(self._out):
            for target in sorted(out):
                yield source, target, out[target]

    def _set_label(self, source: int, target: int, label: LinkLabel) -> LinkTransition:
        out = self._out[source]
        before = out.get(target)
        if before is None:
            self._edge_count += 1
        out[target] = label
        transition = LinkTransition(source, target, before, label)
        for observer in self.observers:
            observer(transition)
        return transition

    def join(self, s: int, n: int, rng: random.Random) -> list[int]:
        """Connect ``s`` to ``n`` peers picked uniformly at random with AL links."""
        self._require(s)
        if n < 1:
            raise ValueError(f"join fan-out must be positive, got {n}")
        candidates = [p for p in self.peer_ids() if p != s]
        if not candidates:
            raise ValueError(f"peer {s} is alone in the network and cannot join")
        targets = sorted(rng.sample(candidates, min(n, len(candidates))))
        out = self._out[s]
        for t in targets:
            # a link that already exists is never weakened back to AL
            if t not in out:
                self._set_label(s, t, LinkLabel.al())
        return targets

    def update_link(self, cur: int, prev: int, q: TermVector) -> LinkTransition:
        """Record at ``cur`` what the query forwarded by ``prev`` says about ``prev``."""
        self._require(cur)
        self._require(prev)
        if cur == prev:
            raise ValueError("a peer cannot update a link to itself")
        before = self._out[cur].get(prev)
        if before is None or before.kind is LinkKind.AL:
            return self._set_label(cur, prev, LinkLabel.tsl(tpk_from_query(q), 1))
        if before.kind is LinkKind.TSL:
            weight = tpk_update(before.weight, q, before.seen_count)
            return self._set_label(cur, prev, LinkLabel.tsl(weight, before.seen_count + 1))
        return LinkTransition(cur, prev, before, before)

    def promote_to_fsl(self, s: int, cur: int) -> LinkTransition:
        """Make ``s -> cur`` a full semantic link carrying cur's current knowledge."""
        self._require(s)
        self._require(cur)
        if s == cur:
            raise ValueError("a peer cannot hold a semantic link to itself")
        return self._set_label(s, cur, LinkLabel.fsl(self.peers[cur].knowledge.vector))

    def kind_counts(self) -> dict[LinkKind, int]:
        counts = {kind: 0 for kind in LinkKind}
        for out in self._out:
            for label in out.values():
                counts[label.kind] += 1
        return counts

    def check_invariants(self) -> None:
        """Raise AssertionError if the graph is malformed."""
        n = len(self.peers)
        assert len(self._out) == n
        total = 0
        for source, out in enumerate(self._out):
            for target, label in out.items():
                assert target != source, f"self-link at {source}"
                assert 0 <= target < n, f"dangling link {source}->{target}"
                assert isinstance(label, LinkLabel)
            total += len(out)
        assert total == self._edge_count, "edge counter out of sync"
        for pid, peer in enumerate(self.peers):
            assert peer.knowledge == summarize_knowledge(peer.documents), (
                f"stale knowledge summary at peer {pid}"
            )

    def edge_list_lines(self) -> list[str]:
        lines = [f"# nodes {len(self.peers)}"]
        lines.extend(f"{s} {t} {label.kind.name}" for s, t, label in self.links())
        return lines

    def write_edge_list(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.edge_list_lines()) + "\n")


def read_edge_list(path: str | Path) -> tuple[int, list[tuple[int, int, LinkKind]]]:
    """Load an edge list written by :meth:`OverlayNetwork.write_edge_list`.

    Returns ``(node_count, edges)``. Without a ``# nodes`` header the node
    count is one more than the largest id seen.
    """
    node_count = None
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "nodes":
                node_count = int(parts[1])
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'source target label'")
        s, t, kind = int(parts[0]), int(parts[1]), LinkKind[parts[2]]
        edges.append((s, t, kind))
    if node_count is None:
        node_count = 1 + max((max(s, t) for s, t, _ in edges), default=-1)
    return node_count, edges
