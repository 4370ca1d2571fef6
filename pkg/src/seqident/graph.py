"""Directed acyclic graphs, ancestral moral graphs, and separation tests.

Separation is decided by the moralisation criterion: restrict the graph to
the ancestral closure of the query sets, marry co-parents, drop directions,
and look for a path that dodges the conditioning set.  When such a path
exists it is returned as a witness.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .errors import (
    CycleDetected,
    DuplicateEdge,
    EmptyQuerySet,
    OverlappingSets,
    TooManyNodes,
    UnknownLabel,
    UnknownNode,
)

# Every downstream computation enumerates state spaces, so graphs beyond
# desk scale are rejected up front.
MAX_NODES = 24


@dataclass(frozen=True)
class Dag:
    """Immutable DAG over labelled nodes; node ids are dense 0..n-1."""

    labels: tuple[str, ...]
    edges: frozenset[tuple[int, int]]

    @cached_property
    def index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    @cached_property
    def parents(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.labels]
        for a, b in self.edges:
            out[b].append(a)
        return tuple(tuple(sorted(ps)) for ps in out)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.labels]
        for a, b in self.edges:
            out[a].append(b)
        return tuple(tuple(sorted(cs)) for cs in out)

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        indeg = [len(ps) for ps in self.parents]
        queue = deque(i for i, d in enumerate(indeg) if d == 0)
        order: list[int] = []
        while queue:
            n = queue.popleft()
            order.append(n)
            for c in self.children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        return tuple(order)

    def node_ids(self, labels: Iterable[str]) -> frozenset[int]:
        try:
            return frozenset(self.index[lab] for lab in labels)
        except KeyError as exc:
            raise UnknownNode(f"unknown node {exc.args[0]!r}") from None

    def parent_labels(self, label: str) -> tuple[str, ...]:
        ids = self.node_ids([label])
        (i,) = ids
        return tuple(self.labels[p] for p in self.parents[i])

    def edge_labels(self) -> tuple[tuple[str, str], ...]:
        return tuple(
            sorted((self.labels[a], self.labels[b]) for a, b in self.edges)
        )


def _find_cycle(labels: Sequence[str], children: Sequence[Sequence[int]]) -> tuple[str, ...]:
    # DFS back-edge search; only called when Kahn's algorithm stalls.
    color = [0] * len(labels)  # 0 white, 1 gray, 2 black
    stack: list[int] = []

    def visit(n: int) -> tuple[str, ...] | None:
        color[n] = 1
        stack.append(n)
        for c in children[n]:
            if color[c] == 1:
                at = stack.index(c)
                return tuple(labels[i] for i in stack[at:])
            if color[c] == 0:
                found = visit(c)
                if found is not None:
                    return found
        stack.pop()
        color[n] = 2
        return None

    for n in range(len(labels)):
        if color[n] == 0:
            found = visit(n)
            if found is not None:
                return found
    raise AssertionError("cycle reported but not found")


def build_dag(labels: Sequence[str], edges: Iterable[tuple[str, str]]) -> Dag:
    """Validate labels and edges and return a Dag with a cached topological order."""
    labels = tuple(labels)
    if len(set(labels)) != len(labels):
        dupes = sorted({lab for lab in labels if labels.count(lab) > 1})
        raise UnknownLabel(f"duplicate labels: {', '.join(dupes)}")
    if len(labels) > MAX_NODES:
        raise TooManyNodes(f"{len(labels)} nodes exceed the supported maximum of {MAX_NODES}")
    index = {lab: i for i, lab in enumerate(labels)}
    seen: set[tuple[int, int]] = set()
    for a, b in edges:
        if a not in index or b not in index:
            missing = a if a not in index else b
            raise UnknownLabel(f"edge endpoint {missing!r} is not a declared node")
        pair = (index[a], index[b])
        if pair in seen:
            raise DuplicateEdge(f"duplicate edge {a} -> {b}")
        if pair[0] == pair[1]:
            raise CycleDetected((a,))
        seen.add(pair)
    dag = Dag(labels=labels, edges=frozenset(seen))
    if len(dag.topological_order) != len(labels):
        raise CycleDetected(_find_cycle(labels, dag.children))
    return dag


def ancestors(g: Dag, seed: Iterable[str]) -> frozenset[str]:
    """Seed plus every node with a directed path into the seed."""
    frontier = deque(g.node_ids(seed))
    reached: set[int] = set(frontier)
    while frontier:
        n = frontier.popleft()
        for p in g.parents[n]:
            if p not in reached:
                reached.add(p)
                frontier.append(p)
    return frozenset(g.labels[i] for i in reached)


@dataclass(frozen=True)
class MoralGraph:
    """Undirected graph on an ancestral closure with co-parents married."""

    labels: tuple[str, ...]  # in the host DAG's index order
    edges: frozenset[tuple[str, str]]  # endpoints ordered by host index

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(self.labels)

    @cached_property
    def adjacency(self) -> dict[str, tuple[str, ...]]:
        order = {lab: i for i, lab in enumerate(self.labels)}
        adj: dict[str, set[str]] = {lab: set() for lab in self.labels}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return {lab: tuple(sorted(ns, key=order.__getitem__)) for lab, ns in adj.items()}


def ancestral_moral_graph(g: Dag, seed: Iterable[str]) -> MoralGraph:
    """Restrict to ancestors(seed), marry parents sharing a child, drop directions."""
    closure = g.node_ids(ancestors(g, seed))
    kept = tuple(g.labels[i] for i in sorted(closure))
    undirected: set[tuple[str, str]] = set()

    def add(a: int, b: int) -> None:
        if a != b:
            lo, hi = (a, b) if a < b else (b, a)
            undirected.add((g.labels[lo], g.labels[hi]))

    for a, b in g.edges:
        if a in closure and b in closure:
            add(a, b)
    for child in closure:
        ps = [p for p in g.parents[child] if p in closure]
        for i, a in enumerate(ps):
            for b in ps[i + 1 :]:
                add(a, b)
    return MoralGraph(labels=kept, edges=frozenset(undirected))


@dataclass(frozen=True)
class SeparationVerdict:
    """Outcome of one separation query; a witness path exists iff not separated.

    The witness is a path in the ancestral moral graph.  It starts in the
    second query set, ends in the first, and never touches the conditioning
    set."""

    separated: bool
    witness: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        assert self.separated == (self.witness is None)


def d_separated(
    g: Dag,
    x: Iterable[str],
    y: Iterable[str],
    z: Iterable[str] = (),
) -> SeparationVerdict:
    """Decide whether x and y are separated by z via the moralisation criterion.

    On failure the verdict carries a shortest moral-graph path from y to x
    avoiding z, ties broken toward smaller node indices.
    """
    xs, ys, zs = g.node_ids(x), g.node_ids(y), g.node_ids(z)
    if not xs or not ys:
        raise EmptyQuerySet("both query sets must be nonempty")
    if xs & ys or xs & zs or ys & zs:
        raise OverlappingSets("query and conditioning sets must be pairwise disjoint")

    moral = ancestral_moral_graph(g, [g.labels[i] for i in xs | ys | zs])
    blocked = {g.labels[i] for i in zs}
    targets = {g.labels[i] for i in xs}

    # Multi-source BFS from y; sources and neighbour expansion in index
    # order make the reported path deterministic.
    prev: dict[str, str | None] = {}
    queue: deque[str] = deque()
    for i in sorted(ys):
        lab = g.labels[i]
        prev[lab] = None
        queue.append(lab)
    while queue:
        node = queue.popleft()
        if node in targets:
            path = [node]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])  # type: ignore[arg-type]
            return SeparationVerdict(separated=False, witness=tuple(reversed(path)))
        for nb in moral.adjacency.get(node, ()):
            if nb in blocked or nb in prev:
                continue
            prev[nb] = node
            queue.append(nb)
    return SeparationVerdict(separated=True)
