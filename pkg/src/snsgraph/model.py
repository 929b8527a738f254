"""Core graph and account domain types.

The interaction graph is a weighted directed multigraph over account
handles: one weighted edge per ordered ``(source, target, kind)`` triple,
where the weight counts discrete interactions. Two derived views feed the
analytics modules: :func:`merge_kinds` collapses the kind dimension into a
simple weighted digraph, and :func:`undirected_view` symmetrizes it for
algorithms defined on undirected weighted graphs.

Graphs are immutable after construction and safe to share across threads;
"mutation" helpers return new values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping


@dataclass(frozen=True, order=True)
class Handle:
    """A normalized account handle.

    Handles compare case-insensitively by construction: the value is
    lowercased and a leading ``@`` is stripped. ``display()`` re-adds it.
    """

    value: str

    def __post_init__(self):
        normalized = self.value.strip().lstrip("@").lower()
        if not normalized:
            raise ValueError("handle must be non-empty")
        object.__setattr__(self, "value", normalized)

    def display(self) -> str:
        return "@" + self.value

    def __str__(self) -> str:
        return self.display()


class InteractionKind(enum.Enum):
    """The three interaction types carried by edges."""

    REPLY = "reply"
    MENTION = "mention"
    FOLLOW = "follow"


Edge = tuple[Handle, Handle, InteractionKind]


class InteractionGraph:
    """Weighted directed multigraph of account interactions.

    ``edges`` maps ``(source, target, kind)`` to a positive integer count.
    Self-loops are rejected: reply/mention/follow acts target someone else,
    and ingest drops (and counts) records that violate this.
    """

    __slots__ = ("_nodes", "_edges", "_total_weight")

    def __init__(self, edges: Mapping[Edge, int], extra_nodes: Iterable[Handle] = ()):
        cleaned: dict[Edge, int] = {}
        nodes: dict[Handle, None] = {}
        total = 0
        for (src, dst, kind), weight in edges.items():
            if src == dst:
                raise ValueError(f"self-loop not allowed: {src.display()}")
            if weight < 1 or weight != int(weight):
                raise ValueError(f"edge weight must be a positive count, got {weight!r}")
            cleaned[(src, dst, kind)] = int(weight)
            nodes.setdefault(src)
            nodes.setdefault(dst)
            total += int(weight)
        for h in extra_nodes:
            nodes.setdefault(h)
        self._edges = cleaned
        self._nodes = nodes
        self._total_weight = total

    @classmethod
    def from_interactions(
        cls, interactions: Iterable[tuple[Handle, Handle, InteractionKind]]
    ) -> "InteractionGraph":
        """Accumulate ``(source, target, kind)`` acts into weighted edges.

        Self-loops are silently dropped here; callers that need to count
        them (ingest statistics) filter before calling.
        """
        acc: dict[Edge, int] = {}
        for src, dst, kind in interactions:
            if src == dst:
                continue
            key = (src, dst, kind)
            acc[key] = acc.get(key, 0) + 1
        return cls(acc)

    @property
    def nodes(self) -> list[Handle]:
        return list(self._nodes)

    @property
    def edges(self) -> dict[Edge, int]:
        return dict(self._edges)

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        """Number of distinct weighted edges (the ``m`` of n-nodes/m-edges)."""
        return len(self._edges)

    @property
    def total_weight(self) -> int:
        return self._total_weight

    def __contains__(self, handle: Handle) -> bool:
        return handle in self._nodes

    def __eq__(self, other) -> bool:
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return self._edges == other._edges and set(self._nodes) == set(other._nodes)

    def __repr__(self) -> str:
        return f"InteractionGraph(n={self.node_count}, m={self.edge_count}, W={self.total_weight})"

    def with_node(self, handle: Handle) -> "InteractionGraph":
        """Return a copy that also contains ``handle`` (possibly isolated)."""
        return InteractionGraph(self._edges, extra_nodes=[*self._nodes, handle])

    def without_node(self, handle: Handle) -> "InteractionGraph":
        """Return a copy with ``handle`` and its incident edges removed."""
        kept = {
            e: w for e, w in self._edges.items() if e[0] != handle and e[1] != handle
        }
        extra = [h for h in self._nodes if h != handle]
        return InteractionGraph(kept, extra_nodes=extra)


class DirectedView:
    """Simple weighted digraph: one weight per ordered node pair."""

    __slots__ = ("_nodes", "_succ", "_total_weight")

    def __init__(self, nodes: Iterable[Handle], weights: Mapping[tuple[Handle, Handle], float]):
        self._nodes = {h: None for h in nodes}
        succ: dict[Handle, dict[Handle, float]] = {}
        total = 0.0
        for (src, dst), w in weights.items():
            succ.setdefault(src, {})[dst] = w
            total += w
        self._succ = succ
        self._total_weight = total

    @property
    def nodes(self) -> list[Handle]:
        return list(self._nodes)

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def total_weight(self) -> float:
        return self._total_weight

    def weight(self, src: Handle, dst: Handle) -> float:
        return self._succ.get(src, {}).get(dst, 0.0)

    def successors(self, src: Handle) -> dict[Handle, float]:
        return dict(self._succ.get(src, {}))

    def iter_edges(self) -> Iterator[tuple[Handle, Handle, float]]:
        for src, targets in self._succ.items():
            for dst, w in targets.items():
                yield src, dst, w


class UndirectedView:
    """Symmetric weighted adjacency over the graph's node set.

    ``weight(u, v) == weight(v, u)`` is the total interaction weight
    between the pair in both directions and across all kinds.
    ``total_weight`` counts each unordered pair once.
    """

    __slots__ = ("_nodes", "_adj", "_total_weight")

    def __init__(self, nodes: Iterable[Handle], adj: Mapping[Handle, Mapping[Handle, float]]):
        self._nodes = {h: None for h in nodes}
        self._adj = {u: dict(nbrs) for u, nbrs in adj.items()}
        total = 0.0
        for u, nbrs in self._adj.items():
            for v, w in nbrs.items():
                if u < v:
                    total += w
        self._total_weight = total

    @property
    def nodes(self) -> list[Handle]:
        return list(self._nodes)

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def total_weight(self) -> float:
        return self._total_weight

    def weight(self, u: Handle, v: Handle) -> float:
        return self._adj.get(u, {}).get(v, 0.0)

    def neighbors(self, u: Handle) -> dict[Handle, float]:
        return dict(self._adj.get(u, {}))

    def degree(self, u: Handle) -> float:
        """Weighted degree: sum of incident symmetric weights."""
        return sum(self._adj.get(u, {}).values())

    def iter_pairs(self) -> Iterator[tuple[Handle, Handle, float]]:
        """Yield each unordered adjacent pair once, as (u, v, weight) with u < v."""
        for u, nbrs in self._adj.items():
            for v, w in nbrs.items():
                if u < v:
                    yield u, v, w


def merge_kinds(graph: InteractionGraph) -> DirectedView:
    """Collapse reply/mention/follow multi-edges into one weight per ordered pair."""
    weights: dict[tuple[Handle, Handle], float] = {}
    for (src, dst, _kind), w in graph.edges.items():
        key = (src, dst)
        weights[key] = weights.get(key, 0.0) + w
    return DirectedView(graph.nodes, weights)


def undirected_view(
    graph: InteractionGraph | DirectedView | UndirectedView,
) -> UndirectedView:
    """Symmetrize: weight(u, v) = sum over kinds of w(u->v) + w(v->u).

    Applying it to an already-symmetric view is the identity.
    """
    if isinstance(graph, UndirectedView):
        return UndirectedView(graph.nodes, graph._adj)
    if isinstance(graph, InteractionGraph):
        directed = merge_kinds(graph)
    else:
        directed = graph
    adj: dict[Handle, dict[Handle, float]] = {h: {} for h in directed.nodes}
    for src, dst, w in directed.iter_edges():
        adj[src][dst] = adj[src].get(dst, 0.0) + w
        adj[dst][src] = adj[dst].get(src, 0.0) + w
    return UndirectedView(directed.nodes, adj)


class Normalization(enum.Enum):
    """How a centrality vector is scaled: unit L1 mass or unit maximum."""

    L1 = "l1"
    MAX = "max"


_NORM_TOL = 1e-9


@dataclass(frozen=True)
class CentralityVector:
    """Per-node centrality scores under a declared normalization."""

    scores: dict[Handle, float]
    normalization: Normalization = Normalization.L1

    def __post_init__(self):
        if any(s < 0 for s in self.scores.values()):
            raise ValueError("centrality scores must be non-negative")
        if self.scores:
            if self.normalization is Normalization.L1:
                total = sum(self.scores.values())
                if abs(total - 1.0) > _NORM_TOL:
                    raise ValueError(f"L1-normalized scores must sum to 1, got {total!r}")
            else:
                top = max(self.scores.values())
                if abs(top - 1.0) > _NORM_TOL:
                    raise ValueError(f"max-normalized scores must peak at 1, got {top!r}")

    def score(self, handle: Handle) -> float:
        return self.scores.get(handle, 0.0)


@dataclass(frozen=True)
class Partition:
    """Node-to-community assignment with its recomputed modularity score."""

    assignment: dict[Handle, int]
    community_count: int
    modularity_q: float

    def __post_init__(self):
        used = set(self.assignment.values())
        if used != set(range(self.community_count)):
            raise ValueError(
                f"community ids must be dense 0..{self.community_count - 1}, got {sorted(used)}"
            )
        if not -1.0 - _NORM_TOL <= self.modularity_q <= 1.0 + _NORM_TOL:
            raise ValueError(f"modularity out of range: {self.modularity_q!r}")

    def community_of(self, handle: Handle) -> int:
        return self.assignment[handle]

    def communities(self) -> list[list[Handle]]:
        """Members per community id, each list in the assignment's node order."""
        groups: list[list[Handle]] = [[] for _ in range(self.community_count)]
        for handle, cid in self.assignment.items():
            groups[cid].append(handle)
        return groups
