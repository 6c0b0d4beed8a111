"""Directed graph over players and fat resources, plus vertex-disjoint paths.

Disjoint paths are computed as unit-capacity flow with split vertices. The
flow object supports adding sources and sinks incrementally so callers can
warm-start from an earlier optimum instead of recomputing.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .edges import ThinEdge
from .instance import Instance

END = -1

_IN, _OUT = 0, 1


class FlowGraph:
    """Adjacency over player vertices 0..n-1 and fat resource vertices n+j."""

    def __init__(
        self,
        num_players: int,
        fat_resources: Iterable[int],
        arcs: Mapping[int, Iterable[int]],
    ) -> None:
        self.num_players = num_players
        self.fat_resources = tuple(sorted(fat_resources))
        self._adj = {v: tuple(sorted(set(ws))) for v, ws in arcs.items() if ws}

    def resource_vertex(self, resource: int) -> int:
        return self.num_players + resource

    def vertices(self) -> list[int]:
        players = list(range(self.num_players))
        return players + [self.resource_vertex(j) for j in self.fat_resources]

    def successors(self, v: int) -> tuple[int, ...]:
        return self._adj.get(v, ())


def build_graph(
    inst: Instance, fat: frozenset[int], fat_assignment: Mapping[int, int]
) -> FlowGraph:
    """Orient interest in fat resources by the current fat assignment.

    An interested player points at a fat resource, except the player the
    resource is assigned to, where the arc points back at the player. So a
    fat resource has at most one outgoing arc and is traversable only by
    whoever could take it over after its owner is freed.
    """
    arcs: dict[int, list[int]] = {}
    for p in range(inst.num_players):
        for j in inst.interest[p]:
            if j not in fat:
                continue
            rv = inst.num_players + j
            if fat_assignment.get(j) == p:
                arcs.setdefault(rv, []).append(p)
            else:
                arcs.setdefault(p, []).append(rv)
    return FlowGraph(inst.num_players, fat, arcs)


@dataclass(frozen=True)
class PathSolution:
    """Vertex-disjoint directed paths; a single vertex is a valid path."""

    paths: tuple[tuple[int, ...], ...]

    @property
    def value(self) -> int:
        return len(self.paths)

    def source_vertices(self) -> frozenset[int]:
        return frozenset(p[0] for p in self.paths)

    def sink_vertices(self) -> frozenset[int]:
        return frozenset(p[-1] for p in self.paths)

    def used_vertices(self) -> frozenset[int]:
        return frozenset(v for p in self.paths for v in p)


class PathFlow:
    """Incremental maximum vertex-disjoint paths between growing terminals.

    Internally each vertex is split into an in and an out copy joined by a
    unit arc, and augmenting paths are found by breadth-first search over
    the residual, lowest-id neighbors first. The current flow is stored as
    the set of used vertices plus per-vertex predecessor and successor,
    with END marking a path head (at a source) or tail (at a sink).
    """

    def __init__(
        self, graph: FlowGraph, sources: Iterable[int] = (), sinks: Iterable[int] = ()
    ) -> None:
        self.graph = graph
        self.sources: set[int] = set()
        self.sinks: set[int] = set()
        self.used: set[int] = set()
        self.pred: dict[int, int] = {}
        self.succ: dict[int, int] = {}
        self._value = 0
        for s in sources:
            self.add_source(s)
        for t in sinks:
            self.add_sink(t)

    @property
    def value(self) -> int:
        return self._value

    def add_source(self, v: int) -> None:
        if v in self.sources:
            raise ValueError(f"source {v} already present")
        self.sources.add(v)

    def add_sink(self, v: int) -> None:
        if v in self.sinks:
            raise ValueError(f"sink {v} already present")
        self.sinks.add(v)

    def remove_sink(self, v: int) -> None:
        """Retract an unsaturated sink; flow through it would be lost."""
        if v in self.used and self.succ[v] == END:
            raise ValueError(f"sink {v} is saturated")
        self.sinks.remove(v)

    def augment(self) -> int:
        """Push augmenting paths until none remain; returns paths added."""
        added = 0
        while self.try_augment_one():
            added += 1
        return added

    def try_augment_one(self) -> bool:
        """One breadth-first augmentation; False when the flow is maximum."""
        found = self._search()
        if found is None:
            return False
        self._apply(found)
        self._value += 1
        return True

    def solution(self) -> PathSolution:
        paths = []
        for head in sorted(v for v in self.used if self.pred[v] == END):
            path = [head]
            while self.succ[path[-1]] != END:
                path.append(self.succ[path[-1]])
            paths.append(tuple(path))
        return PathSolution(paths=tuple(paths))

    def load(self, base: PathSolution) -> None:
        """Install a base solution; it must be feasible for this flow."""
        if self.used:
            raise ValueError("flow already carries paths")
        for path in base.paths:
            if path[0] not in self.sources:
                raise ValueError(f"path head {path[0]} is not a source")
            if path[-1] not in self.sinks:
                raise ValueError(f"path tail {path[-1]} is not a sink")
            for v, w in zip(path, path[1:]):
                if w not in self.graph.successors(v):
                    raise ValueError(f"missing arc {v}->{w} in base solution")
            for v in path:
                if v in self.used:
                    raise ValueError(f"base paths overlap at vertex {v}")
                self.used.add(v)
            for v, w in zip(path, path[1:]):
                self.succ[v] = w
                self.pred[w] = v
            self.pred[path[0]] = END
            self.succ[path[-1]] = END
        self._value = len(base.paths)

    def _search(self) -> list[tuple[int, int]] | None:
        parent: dict[tuple[int, int], tuple[int, int] | None] = {}
        queue: deque[tuple[int, int]] = deque()
        for s in sorted(self.sources):
            if s in self.used and self.pred[s] == END:
                continue
            state = (s, _IN)
            parent[state] = None
            queue.append(state)
        while queue:
            state = queue.popleft()
            v, side = state
            if side == _IN:
                if v not in self.used:
                    steps = [(v, _OUT)]
                else:
                    p = self.pred[v]
                    steps = [(p, _OUT)] if p != END else []
            else:
                if v in self.sinks and not (v in self.used and self.succ[v] == END):
                    return self._trace(parent, state)
                flow_out = self.succ.get(v) if v in self.used else None
                steps = [(w, _IN) for w in self.graph.successors(v) if w != flow_out]
                if v in self.used:
                    steps.append((v, _IN))
            for nxt in steps:
                if nxt not in parent:
                    parent[nxt] = state
                    queue.append(nxt)
        return None

    def _trace(
        self,
        parent: dict[tuple[int, int], tuple[int, int] | None],
        last: tuple[int, int],
    ) -> list[tuple[int, int]]:
        states = [last]
        while parent[states[-1]] is not None:
            states.append(parent[states[-1]])  # type: ignore[arg-type]
        states.reverse()
        return states

    def _apply(self, states: list[tuple[int, int]]) -> None:
        use: list[int] = []
        unuse: list[int] = []
        set_succ: dict[int, int] = {states[-1][0]: END}
        set_pred: dict[int, int] = {states[0][0]: END}
        del_succ: list[int] = []
        del_pred: list[int] = []
        for (v, a), (w, b) in zip(states, states[1:]):
            if v == w:
                if a == _IN:
                    use.append(v)
                else:
                    unuse.append(v)
            elif a == _OUT:
                set_succ[v] = w
                set_pred[w] = v
            else:
                del_succ.append(w)
                del_pred.append(v)
        for v in unuse:
            self.used.discard(v)
            self.pred.pop(v, None)
            self.succ.pop(v, None)
        for v in del_succ:
            self.succ.pop(v, None)
        for v in del_pred:
            self.pred.pop(v, None)
        for v in use:
            self.used.add(v)
        self.succ.update(set_succ)
        self.pred.update(set_pred)


def max_disjoint_paths(
    graph: FlowGraph, sources: Iterable[int], sinks: Iterable[int]
) -> PathSolution:
    """Maximum vertex-disjoint paths; a source that is a sink may stand alone."""
    flow = PathFlow(graph, sources, sinks)
    flow.augment()
    return flow.solution()


def augment_from(
    graph: FlowGraph,
    base: PathSolution,
    sources: Iterable[int],
    sinks: Iterable[int],
) -> PathSolution:
    """Grow a feasible base solution to a maximum one without rebuilding it.

    Sinks already covered by the base stay covered: augmentation never
    retracts a saturated sink arc.
    """
    flow = PathFlow(graph, sources, sinks)
    flow.load(base)
    flow.augment()
    return flow.solution()


@dataclass(frozen=True)
class CanonicalDecomposition:
    """Layered split of covered addable edges and the paths reaching them.

    subsets[i] holds the addable edges whose covering path starts in layer
    i's sources; path_groups[i] holds those paths. Saturated sinks survive
    later augmentation stages, so subsets[0..i] together always form a
    maximum solution for the first i+1 source layers against all sinks.
    """

    sources: tuple[tuple[int, ...], ...]
    subsets: tuple[tuple[ThinEdge, ...], ...]
    path_groups: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def num_layers(self) -> int:
        return len(self.subsets)

    def all_paths(self) -> tuple[tuple[int, ...], ...]:
        return tuple(p for group in self.path_groups for p in group)


def canonical_decomposition(
    graph: FlowGraph,
    layered_sources: Sequence[Iterable[int]],
    sink_edges: Iterable[ThinEdge],
) -> CanonicalDecomposition:
    """Attribute each covered sink edge to the earliest layer reaching it.

    Runs one maximum-flow stage per layer, adding that layer's sources and
    augmenting, so earlier layers claim as much as they can first.
    """
    edges = list(sink_edges)
    by_player: dict[int, ThinEdge] = {}
    for e in edges:
        if e.player in by_player:
            raise ValueError(f"two sink edges owned by player {e.player}")
        by_player[e.player] = e
    flow = PathFlow(graph, sinks=by_player.keys())
    layers = [tuple(sorted(group)) for group in layered_sources]
    layer_of: dict[int, int] = {}
    for i, group in enumerate(layers):
        for s in group:
            if s in layer_of:
                raise ValueError(f"source {s} appears in two layers")
            layer_of[s] = i
            flow.add_source(s)
        flow.augment()
    subsets: list[list[ThinEdge]] = [[] for _ in layers]
    groups: list[list[tuple[int, ...]]] = [[] for _ in layers]
    for path in flow.solution().paths:
        i = layer_of[path[0]]
        groups[i].append(path)
        subsets[i].append(by_player[path[-1]])
    return CanonicalDecomposition(
        sources=tuple(layers),
        subsets=tuple(tuple(s) for s in subsets),
        path_groups=tuple(tuple(g) for g in groups),
    )


def rerouted_solution(
    graph: FlowGraph,
    decomp: CanonicalDecomposition,
    t: int,
    extra_sinks: Iterable[int],
) -> PathSolution:
    """Maximum paths from layers below t, reusing their canonical paths.

    Sinks are the extra ones plus the owners of edges claimed below t; the
    base paths below t stay intact and the result still covers all of
    their sinks.
    """
    if not 0 <= t < decomp.num_layers:
        raise ValueError(f"layer index {t} out of range")
    base_paths = tuple(p for group in decomp.path_groups[:t] for p in group)
    base = PathSolution(paths=base_paths)
    sources = [s for group in decomp.sources[:t] for s in group]
    sinks = set(extra_sinks)
    sinks.update(path[-1] for path in base_paths)
    return augment_from(graph, base, sources, sinks)
