"""Vector-space knowledge model.

Queries, documents, peer knowledge summaries and temporary peer knowledge
are all sparse term vectors keyed by integer term ids. Relevance between
any two of them is cosine similarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence


class TermVector:
    """Immutable sparse vector of non-negative term weights.

    Zero weights are dropped on construction, so ``len(v)`` is the number
    of terms that actually carry weight.
    """

    __slots__ = ("_weights", "_norm")

    def __init__(self, weights: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        items = weights.items() if isinstance(weights, Mapping) else weights
        clean: dict[int, float] = {}
        for term, weight in items:
            term = int(term)
            weight = float(weight)
            if term < 0:
                raise ValueError(f"term id must be non-negative, got {term}")
            if weight < 0 or math.isnan(weight):
                raise ValueError(f"term weight must be non-negative, got {weight}")
            if weight > 0:
                clean[term] = weight
        self._weights = clean
        self._norm = math.sqrt(math.fsum(w * w for w in clean.values()))

    @classmethod
    def _trusted(cls, weights: dict[int, float]) -> TermVector:
        # skips validation; callers guarantee positive weights and int keys
        vec = cls.__new__(cls)
        vec._weights = weights
        vec._norm = math.sqrt(math.fsum(w * w for w in weights.values()))
        return vec

    @property
    def norm(self) -> float:
        return self._norm

    def __len__(self) -> int:
        return len(self._weights)

    def __bool__(self) -> bool:
        return bool(self._weights)

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self._weights))

    def __getitem__(self, term: int) -> float:
        return self._weights.get(term, 0.0)

    def __contains__(self, term: object) -> bool:
        return term in self._weights

    def items(self) -> list[tuple[int, float]]:
        """Entries sorted by term id."""
        return sorted(self._weights.items())

    def as_dict(self) -> dict[int, float]:
        return dict(self._weights)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TermVector):
            return NotImplemented
        return self._weights == other._weights

    def __hash__(self) -> int:
        return hash(frozenset(self._weights.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{t}: {w:.4g}" for t, w in self.items())
        return f"TermVector({{{body}}})"

    def dot(self, other: TermVector) -> float:
        a, b = self._weights, other._weights
        if len(a) > len(b):
            a, b = b, a
        return math.fsum(w * b[t] for t, w in a.items() if t in b)

    def scaled(self, factor: float) -> TermVector:
        if factor < 0:
            raise ValueError("scale factor must be non-negative")
        if factor == 0:
            return TermVector()
        return TermVector._trusted({t: w * factor for t, w in self._weights.items()})

    def normalized(self) -> TermVector:
        """Unit-length copy; the empty vector normalizes to itself."""
        if not self._weights:
            return self
        return self.scaled(1.0 / self._norm)

    def __add__(self, other: TermVector) -> TermVector:
        out = dict(self._weights)
        for t, w in other._weights.items():
            out[t] = out.get(t, 0.0) + w
        return TermVector._trusted(out)


EMPTY = TermVector()


@dataclass(frozen=True)
class Document:
    doc_id: int
    vector: TermVector

    def __post_init__(self):
        if not self.vector:
            raise ValueError(f"document {self.doc_id} has an empty vector")
        if abs(self.vector.norm - 1.0) > 1e-9:
            object.__setattr__(self, "vector", self.vector.normalized())


@dataclass(frozen=True)
class KnowledgeSummary:
    """Compact description of what a peer shares."""

    vector: TermVector = EMPTY
    doc_count: int = 0

    def __post_init__(self):
        if (self.doc_count == 0) != (not self.vector):
            raise ValueError("doc_count must be zero exactly when the vector is empty")


def cosine_relevance(a: TermVector, b: TermVector) -> float:
    if not a or not b:
        return 0.0
    value = a.dot(b) / (a.norm * b.norm)
    # rounding can push identical directions a hair past 1
    return min(1.0, max(0.0, value))


def summarize_knowledge(docs: Sequence[Document]) -> KnowledgeSummary:
    if not docs:
        return KnowledgeSummary()
    total = TermVector()
    for doc in docs:
        total = total + doc.vector
    return KnowledgeSummary(total.normalized(), len(docs))


def tpk_from_query(q: TermVector) -> TermVector:
    if not q:
        raise ValueError("cannot build temporary knowledge from an empty query")
    return q.normalized()


def tpk_update(current: TermVector, q: TermVector, seen_count: int) -> TermVector:
    """Fold one more query into a temporary knowledge vector.

    ``current`` is treated as the normalized mean direction of ``seen_count``
    earlier queries, so the result is ``normalize(seen_count * current + q)``.
    """
    if not current or not q:
        raise ValueError("tpk_update needs non-empty vectors")
    if seen_count < 1:
        raise ValueError(f"seen_count must be positive, got {seen_count}")
    return (current.scaled(seen_count) + q).normalized()


def resources_relevance(
    docs: Sequence[Document], q: TermVector, n_r: int, doc_threshold: float
) -> tuple[list[int], int]:
    """Return up to ``n_r`` doc ids relevant to ``q`` and how many there are.

    Ranking is by descending cosine, ties by ascending doc id.
    """
    if not q:
        raise ValueError("query vector is empty")
    if n_r < 1:
        raise ValueError(f"n_r must be positive, got {n_r}")
    scored = []
    for doc in docs:
        rel = cosine_relevance(doc.vector, q)
        if rel >= doc_threshold:
            scored.append((-rel, doc.doc_id))
    scored.sort()
    results = [doc_id for _, doc_id in scored[:n_r]]
    return results, len(results)


def peer_relevance(weight: TermVector | KnowledgeSummary | None, q: TermVector) -> float:
    """Relevance of a link weight (or a knowledge summary) to a query.

    ``None`` stands for an acquaintance link, which knows nothing and scores 0.
    """
    if weight is None:
        return 0.0
    if isinstance(weight, KnowledgeSummary):
        weight = weight.vector
    return cosine_relevance(weight, q)
