"""Synthetic corpora, query generation and experiment orchestration."""

from __future__ import annotations

import dataclasses
import itertools
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

from .knowledge import Document, TermVector
from .metrics import MetricsReport, build_report, clustering_coefficient_network
from .overlay import OverlayNetwork
from .routing import QueryMessage, QueryTrace, RoutingConfig, exec_query

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    node_count: int = 200
    queries_per_node: int = 15
    n_r: int = 1
    topic_count: int = 20
    docs_per_peer_min: int = 4
    docs_per_peer_max: int = 8
    terms_per_topic: int = 8
    topics_per_peer: int = 2
    join_fanout: int = 3
    doc_threshold: float = 0.5
    flood_threshold: float = 0.5
    ttl: int = 64
    seed: int = 0
    query_locality: float = 0.3
    noise: float = 0.2
    random_issuers: bool = False
    first_responder_apl: bool = False
    sparse_cc_as_zero: bool = False
    window: int = 300
    window_step: int = 50

    def __post_init__(self):
        for name in ("node_count", "queries_per_node", "n_r", "topic_count",
                     "docs_per_peer_max", "terms_per_topic",
                     "topics_per_peer", "join_fanout", "window", "window_step"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.docs_per_peer_min < 0:
            raise ValueError("docs_per_peer_min must be non-negative")
        if self.docs_per_peer_min > self.docs_per_peer_max:
            raise ValueError("docs_per_peer_min exceeds docs_per_peer_max")
        if self.topics_per_peer > self.topic_count:
            raise ValueError("topics_per_peer exceeds topic_count")
        for name in ("doc_threshold", "flood_threshold", "query_locality"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.noise < 0 or self.noise >= 1:
            raise ValueError("noise must lie in [0, 1)")
        if self.ttl < 0:
            raise ValueError("ttl must be non-negative")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.window_step > self.window:
            raise ValueError("window_step exceeds window")

    @property
    def routing(self) -> RoutingConfig:
        return RoutingConfig(self.doc_threshold, self.flood_threshold, self.ttl)

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {str(value).lower() if isinstance(value, bool) else value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> ExperimentConfig:
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{source}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
        return cls().with_overrides(values, source)

    @classmethod
    def from_file(cls, path: str | Path) -> ExperimentConfig:
        path = Path(path)
        return cls.from_text(path.read_text(), str(path))

    def with_overrides(self, values: dict[str, object], source: str = "overrides") -> ExperimentConfig:
        """Apply string or typed values by field name, coercing to the field type."""
        types = {f.name: type(f.default) for f in dataclasses.fields(self)}
        changes = {}
        for key, value in values.items():
            if key not in types:
                raise ValueError(f"{source}: unknown config key {key!r}")
            changes[key] = _coerce(types[key], value, key)
        return self.replace(**changes)


def _coerce(kind: type, value: object, key: str):
    if not isinstance(value, str):
        return kind(value)
    if kind is bool:
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: not a boolean: {value!r}")
    try:
        return kind(value)
    except ValueError:
        raise ValueError(f"{key}: cannot parse {value!r} as {kind.__name__}") from None


def derive_seed(seed: int, *labels: object) -> int:
    """Stable 64-bit sub-seed for an independent random stream."""
    return random.Random(":".join(map(str, (seed, *labels)))).getrandbits(64)


@dataclass(frozen=True)
class TopicModel:
    topics: tuple[TermVector, ...]

    @classmethod
    def generate(cls, topic_count: int, terms_per_topic: int, rng: random.Random,
                 overlap: int = 0) -> TopicModel:
        """One prototype per topic over its own block of term ids.

        Consecutive blocks share ``overlap`` terms.
        """
        if not 0 <= overlap < terms_per_topic:
            raise ValueError("overlap must lie in [0, terms_per_topic)")
        stride = terms_per_topic - overlap
        topics = []
        for i in range(topic_count):
            base = i * stride
            weights = {base + j: rng.uniform(0.5, 1.0) for j in range(terms_per_topic)}
            topics.append(TermVector(weights).normalized())
        return cls(tuple(topics))

    def __len__(self) -> int:
        return len(self.topics)

    def sample(self, topic: int, noise: float, rng: random.Random) -> TermVector:
        """The prototype with each weight scaled by a factor in [1-noise, 1+noise]."""
        proto = self.topics[topic]
        if noise == 0:
            return proto
        return TermVector(
            {t: w * (1.0 + noise * rng.uniform(-1.0, 1.0)) for t, w in proto.items()}
        ).normalized()


@dataclass
class Corpus:
    model: TopicModel
    documents: dict[int, list[Document]]
    peer_topics: dict[int, list[int]]


def generate_corpus(cfg: ExperimentConfig, rng: random.Random,
                    model: TopicModel | None = None) -> Corpus:
    if model is None:
        model = TopicModel.generate(cfg.topic_count, cfg.terms_per_topic, rng)
    doc_ids = itertools.count()
    documents = {}
    peer_topics = {}
    for slot in range(cfg.node_count):
        topics = sorted(rng.sample(range(len(model)), cfg.topics_per_peer))
        n_docs = rng.randint(cfg.docs_per_peer_min, cfg.docs_per_peer_max)
        docs = []
        for _ in range(n_docs):
            topic = rng.choice(topics)
            docs.append(Document(next(doc_ids), model.sample(topic, cfg.noise, rng)))
        documents[slot] = docs
        peer_topics[slot] = topics
    return Corpus(model, documents, peer_topics)


def generate_query(
    source: int,
    peer_topics: Sequence[int],
    model: TopicModel,
    n_r: int,
    rng: random.Random,
    qids: Iterator[int],
    locality: float = 0.8,
    noise: float = 0.2,
) -> QueryMessage:
    """Draw a query for ``source``: usually about one of its own topics."""
    if not peer_topics:
        raise ValueError("peer has no topics")
    if rng.random() < locality:
        topic = rng.choice(list(peer_topics))
    else:
        topic = rng.randrange(len(model))
    return QueryMessage(next(qids), model.sample(topic, noise, rng), source, n_r)


@dataclass
class ExperimentResult:
    network: OverlayNetwork
    traces: list[QueryTrace]
    report: MetricsReport
    # (queries issued so far, network clustering) at each checkpoint
    cc_checkpoints: list[tuple[int, float]] = field(default_factory=list)

    def __iter__(self):
        return iter((self.network, self.traces, self.report))


def run_experiment(
    cfg: ExperimentConfig,
    checkpoint_every: int | None = None,
    on_query: Callable[[OverlayNetwork, QueryTrace], None] | None = None,
    network_hook: Callable[[OverlayNetwork], None] | None = None,
) -> ExperimentResult:
    """Build the overlay, issue every query, and measure the result.

    ``network_hook`` sees the empty network before any peer is added (for
    attaching observers); ``on_query`` sees the network after each query.
    """
    corpus = generate_corpus(cfg, random.Random(derive_seed(cfg.seed, "corpus")))
    net = OverlayNetwork()
    if network_hook is not None:
        network_hook(net)
    join_rng = random.Random(derive_seed(cfg.seed, "join"))
    for slot in range(cfg.node_count):
        peer = net.add_peer(corpus.documents[slot])
        if peer > 0:
            net.join(peer, cfg.join_fanout, join_rng)

    query_rng = random.Random(derive_seed(cfg.seed, "query"))
    issuer_rng = random.Random(derive_seed(cfg.seed, "issuer"))
    route_rng = random.Random(derive_seed(cfg.seed, "route"))
    routing = cfg.routing
    qids = itertools.count()
    total = cfg.node_count * cfg.queries_per_node
    traces = []
    checkpoints = []
    for i in range(total):
        if cfg.random_issuers:
            source = issuer_rng.randrange(cfg.node_count)
        else:
            source = i % cfg.node_count
        qm = generate_query(source, corpus.peer_topics[source], corpus.model, cfg.n_r,
                            query_rng, qids, cfg.query_locality, cfg.noise)
        trace = exec_query(net, qm, routing, route_rng)
        traces.append(trace)
        if on_query is not None:
            on_query(net, trace)
        if checkpoint_every and (i + 1) % checkpoint_every == 0:
            checkpoints.append(
                (i + 1, clustering_coefficient_network(net, cfg.sparse_cc_as_zero)))

    report = build_report(
        net, traces,
        edge_count=net.edge_count,
        window=cfg.window,
        step=cfg.window_step,
        first_only=cfg.first_responder_apl,
        sparse_as_zero=cfg.sparse_cc_as_zero,
    )
    return ExperimentResult(net, traces, report, checkpoints)


def _sweep_one(cfg: ExperimentConfig) -> MetricsReport:
    return run_experiment(cfg).report


def sweep(base: ExperimentConfig, node_counts: Sequence[int], workers: int = 1) -> list[MetricsReport]:
    """One experiment per network size; reports come back in input order."""
    if not node_counts:
        raise ValueError("node_counts is empty")
    cfgs = [sweep_config(base, n) for n in node_counts]
    if workers <= 1 or len(cfgs) == 1:
        return [_sweep_one(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=min(workers, len(cfgs))) as pool:
        return list(pool.map(_sweep_one, cfgs))


def sweep_config(base: ExperimentConfig, node_count: int) -> ExperimentConfig:
    return base.replace(node_count=node_count, seed=derive_seed(base.seed, "size", node_count))
