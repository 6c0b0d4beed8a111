"""Layered local search that extends a partial matching by one player.

The search grows a tree of layers. Each layer holds addable edges that are
blocked by currently matched resources, and the blocking edges themselves;
the players of the blocking edges are the layer's sources for disjoint-path
counting. A build phase adds a layer of new candidate edges; a collapse
phase spends accumulated immediately addable edges to shrink earlier
layers, rerouting the matching along alternating paths. Progress is
certified by a lexicographic signature over layer sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .edges import (
    Edge,
    FatEdge,
    Params,
    ThinEdge,
    beta_minimal_subset,
    build_minimal_thin_edge,
    classify_resources,
    edge_in_window,
)
from .flownet import (
    CanonicalDecomposition,
    FlowGraph,
    PathFlow,
    PathSolution,
    build_graph,
    canonical_decomposition,
    max_disjoint_paths,
    rerouted_solution,
)
from .instance import Instance

MAX_ITERATIONS = 100_000

EventHook = Callable[["SearchState", str, int, CanonicalDecomposition], None]


class ProbeAborted(Exception):
    """The build phase fell short of the required path count for this tau.

    That can only happen when tau is above the optimum, so an abort is a
    certificate for the binary search, not an error.
    """

    def __init__(
        self,
        tau: Fraction,
        target_player: int,
        iterations: int = 0,
        collapses: int = 0,
    ) -> None:
        super().__init__(f"probe tau={tau} aborted extending player {target_player}")
        self.tau = tau
        self.target_player = target_player
        self.iterations = iterations
        self.collapses = collapses


class InvariantViolation(RuntimeError):
    """Internal search state broke an invariant; a defect, not bad input."""


class PartialMatching:
    """Edges assigned to players: at most one per player, resources disjoint."""

    def __init__(self) -> None:
        self._edge_of: dict[int, Edge] = {}
        self._owner_of: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self._edge_of)

    def copy(self) -> "PartialMatching":
        other = PartialMatching()
        other._edge_of = dict(self._edge_of)
        other._owner_of = dict(self._owner_of)
        return other

    def edge_of(self, player: int) -> Edge | None:
        return self._edge_of.get(player)

    def is_matched(self, player: int) -> bool:
        return player in self._edge_of

    def owner_of(self, resource: int) -> int | None:
        return self._owner_of.get(resource)

    @property
    def used_resources(self) -> set[int]:
        return set(self._owner_of)

    def edges(self) -> list[Edge]:
        return [self._edge_of[p] for p in sorted(self._edge_of)]

    def add(self, edge: Edge) -> None:
        if edge.player in self._edge_of:
            raise ValueError(f"player {edge.player} is already matched")
        for r in edge.resources:
            if r in self._owner_of:
                raise ValueError(f"resource {r} is already assigned")
        self._edge_of[edge.player] = edge
        for r in edge.resources:
            self._owner_of[r] = edge.player

    def remove(self, player: int) -> Edge:
        edge = self._edge_of.pop(player)
        for r in edge.resources:
            del self._owner_of[r]
        return edge

    def fat_assignment(self) -> dict[int, int]:
        return {
            e.resource: p
            for p, e in self._edge_of.items()
            if isinstance(e, FatEdge)
        }

    def fat_count(self) -> int:
        return sum(1 for e in self._edge_of.values() if isinstance(e, FatEdge))

    def consistency_errors(self) -> list[str]:
        problems = []
        owners: dict[int, int] = {}
        for p, e in self._edge_of.items():
            if e.player != p:
                problems.append(f"edge under key {p} belongs to player {e.player}")
            for r in e.resources:
                if r in owners:
                    problems.append(f"resource {r} assigned twice")
                owners[r] = p
        if owners != self._owner_of:
            problems.append("resource ownership index out of sync")
        return problems


@dataclass
class Layer:
    """One layer of the search tree.

    blocked holds the addable edges waiting on matched resources, blockers
    the matched edges in their way. The players of the blockers are the
    layer's path sources. path_count is the disjoint-path optimum frozen
    when the layer was built.
    """

    blocked: list[ThinEdge]
    blockers: list[ThinEdge]
    path_count: int

    def players(self) -> list[int]:
        return [e.player for e in self.blockers]


@dataclass
class SearchState:
    inst: Instance
    params: Params
    fat: frozenset[int]
    thin: frozenset[int]
    matching: PartialMatching
    target_player: int
    graph: FlowGraph
    initial_fat_count: int
    layers: list[Layer] = field(default_factory=list)
    addable: list[ThinEdge] = field(default_factory=list)
    iterations: int = 0
    collapses: int = 0

    def refresh_graph(self) -> None:
        self.graph = build_graph(self.inst, self.fat, self.matching.fat_assignment())

    def source_players(self, through: int | None = None) -> list[int]:
        stop = len(self.layers) if through is None else through + 1
        return [p for layer in self.layers[:stop] for p in layer.players()]

    def tree_resources(self) -> set[int]:
        used: set[int] = set()
        for layer in self.layers:
            for e in layer.blocked:
                used |= e.resources
            for e in layer.blockers:
                used |= e.resources
        for e in self.addable:
            used |= e.resources
        return used

    def edge_owners(self) -> set[int]:
        owners = {e.player for layer in self.layers for e in layer.blocked}
        owners |= {e.player for e in self.addable}
        return owners


def placeholder_edge(player: int, params: Params) -> ThinEdge:
    """Zero-value stand-in blocking edge for the still unmatched player."""
    return ThinEdge(player=player, resources=frozenset(), delta_class=params.beta)


def init_state(
    inst: Instance,
    matching: PartialMatching,
    target_player: int,
    params: Params,
) -> SearchState:
    if matching.is_matched(target_player):
        raise ValueError(f"player {target_player} is already matched")
    fat, thin = classify_resources(inst, params)
    state = SearchState(
        inst=inst,
        params=params,
        fat=fat,
        thin=thin,
        matching=matching,
        target_player=target_player,
        graph=build_graph(inst, fat, matching.fat_assignment()),
        initial_fat_count=matching.fat_count(),
    )
    root = Layer(blocked=[], blockers=[placeholder_edge(target_player, params)], path_count=0)
    state.layers.append(root)
    return state


def find_candidate(
    state: SearchState, *, rejected: set[int], flow: PathFlow
) -> ThinEdge | None:
    """Next candidate edge in ascending player order, or None.

    A candidate owner must not already own a tree edge, must be able to
    assemble a minimal tau/alpha edge from thin resources outside the
    tree, and must increase the disjoint-path count when added as a sink.
    The flow is the warm path optimum for the current sinks; on acceptance
    it keeps the augmented path, on rejection the sink is retracted.
    Rejections are recorded because both failure modes persist for the
    rest of the build phase.
    """
    inst = state.inst
    tree = state.tree_resources()
    owners = state.edge_owners()
    target = state.params.tau / state.params.alpha
    pool = sorted(state.thin - tree)
    for p in range(inst.num_players):
        if p in owners or p in rejected:
            continue
        edge = build_minimal_thin_edge(
            p, target, pool, inst, delta_class=state.params.alpha
        )
        if edge is None:
            rejected.add(p)
            continue
        flow.add_sink(p)
        if flow.try_augment_one():
            return edge
        flow.remove_sink(p)
        rejected.add(p)
    return None


def build_phase(state: SearchState) -> Layer:
    """Add one layer: gather candidates, split off the immediately addable.

    Candidates whose tau/beta subset is free of the matching go straight
    into the addable pool; the rest form the new layer's blocked set, and
    the matched edges holding them back become the layer's blockers. The
    layer freezes the disjoint-path count reached.
    """
    layer = Layer(blocked=[], blockers=[], path_count=0)
    state.layers.append(layer)
    sources = state.source_players()
    sinks = state.edge_owners()
    flow = PathFlow(state.graph, sources, sinks)
    flow.augment()
    rejected: set[int] = set()
    while True:
        cand = find_candidate(state, rejected=rejected, flow=flow)
        if cand is None:
            break
        free = beta_minimal_subset(
            cand.resources,
            cand.player,
            state.params,
            state.matching.used_resources,
            state.inst,
        )
        if free is not None:
            state.addable.append(cand)
        else:
            layer.blocked.append(cand)
    blockers: dict[int, ThinEdge] = {}
    for e in layer.blocked:
        for r in e.resources:
            q = state.matching.owner_of(r)
            if q is None or q in blockers:
                continue
            blocking = state.matching.edge_of(q)
            if not isinstance(blocking, ThinEdge):
                raise InvariantViolation(
                    f"fat edge of player {q} overlaps a thin candidate"
                )
            blockers[q] = blocking
    layer.blockers = [blockers[q] for q in sorted(blockers)]
    layer.path_count = flow.value
    return layer


def alternate_along(
    matching: PartialMatching,
    path: tuple[int, ...],
    addable_edge: ThinEdge,
    params: Params,
    inst: Instance,
) -> Edge | None:
    """Reroute the matching along one path ending at an addable edge.

    Fat edges flip along the path, the head player's blocking edge leaves
    the matching, and the tail player gets a minimal tau/beta subset of
    the addable edge. Returns the removed head edge, or None when the head
    was unmatched (the target player). The fat edge count is unchanged.
    """
    n = inst.num_players
    if path[-1] != addable_edge.player:
        raise ValueError("path does not end at the addable edge's player")
    for i, v in enumerate(path):
        is_player = v < n
        if is_player != (i % 2 == 0):
            raise ValueError("path does not alternate players and fat resources")
    if len(path) % 2 == 0:
        raise ValueError("path must end at a player")
    head = path[0]
    removed = matching.edge_of(head)
    if isinstance(removed, FatEdge):
        raise InvariantViolation(f"path head {head} holds a fat edge")
    fat_before = matching.fat_count()
    flips_out: list[int] = []
    flips_in: list[FatEdge] = []
    for a, b in zip(path, path[1:]):
        if a < n:
            flips_in.append(FatEdge(player=a, resource=b - n))
        else:
            holder = b
            resource = a - n
            held = matching.edge_of(holder)
            if not isinstance(held, FatEdge) or held.resource != resource:
                raise InvariantViolation(
                    f"arc into player {holder} contradicts the matching"
                )
            flips_out.append(holder)
    for p in flips_out:
        matching.remove(p)
    if removed is not None:
        matching.remove(head)
    try:
        for e in flips_in:
            matching.add(e)
        sub = beta_minimal_subset(
            addable_edge.resources,
            addable_edge.player,
            params,
            matching.used_resources,
            inst,
        )
        if sub is None:
            raise InvariantViolation(
                f"addable edge of player {addable_edge.player} lost its free subset"
            )
        matching.add(sub)
    except ValueError as exc:
        raise InvariantViolation(f"alternation conflict: {exc}") from exc
    if matching.fat_count() != fat_before:
        raise InvariantViolation("alternation changed the fat edge count")
    return removed


def collapse_phase(state: SearchState, on_event: EventHook | None = None) -> None:
    """Collapse layers until none has enough addable edges to spend.

    Each round recomputes the canonical decomposition, finds the earliest
    layer whose claimed addable edges reach the mu fraction of its size
    (and are nonempty), reroutes below it, alternates along its paths, and
    truncates everything deeper. Collapsing the root layer matches the
    target player and the next round finds nothing left to do.
    """
    label = "build"
    last_t = -1
    while True:
        decomp = canonical_decomposition(
            state.graph,
            [layer.players() for layer in state.layers],
            state.addable,
        )
        claimed = sum(len(s) for s in decomp.subsets)
        if claimed != len(state.addable):
            raise InvariantViolation(
                f"only {claimed} of {len(state.addable)} addable edges are reachable"
            )
        if on_event is not None:
            on_event(state, label, last_t, decomp)
        t = _earliest_collapsible(state, decomp)
        if t is None:
            return
        _collapse_at(state, decomp, t)
        state.collapses += 1
        label, last_t = "collapse", t


def _earliest_collapsible(
    state: SearchState, decomp: CanonicalDecomposition
) -> int | None:
    mu = state.params.mu
    for i, layer in enumerate(state.layers):
        claimed = len(decomp.subsets[i])
        # an empty claim never collapses, even against an empty layer
        if claimed >= 1 and Fraction(claimed) >= mu * len(layer.blockers):
            return i
    return None


def _collapse_at(
    state: SearchState, decomp: CanonicalDecomposition, t: int
) -> None:
    layer = state.layers[t]
    if t >= 1:
        extra = [e.player for lay in state.layers[: t + 1] for e in lay.blocked]
        x = rerouted_solution(state.graph, decomp, t, extra)
        forbidden = {v for path in decomp.path_groups[t] for v in path}
        if x.used_vertices() & forbidden:
            raise InvariantViolation("rerouting touched the collapsing layer")
        covered = x.sink_vertices()
        for group in decomp.path_groups[:t]:
            for path in group:
                if path[-1] not in covered:
                    raise InvariantViolation(
                        f"rerouting dropped claimed sink {path[-1]}"
                    )
    else:
        x = PathSolution(paths=())
    by_player = {e.player: e for e in state.addable}
    for path in sorted(decomp.path_groups[t]):
        removed = alternate_along(
            state.matching, path, by_player[path[-1]], state.params, state.inst
        )
        if removed is None:
            if path[0] != state.target_player:
                raise InvariantViolation(f"unmatched path head {path[0]}")
        else:
            layer.blockers.remove(removed)
    kept: list[ThinEdge] = list(
        e for group in decomp.subsets[:t] for e in group
    )
    x_tails = x.sink_vertices()
    survivors: list[ThinEdge] = []
    for e in layer.blocked:
        free = beta_minimal_subset(
            e.resources,
            e.player,
            state.params,
            state.matching.used_resources,
            state.inst,
        )
        if free is None:
            survivors.append(e)
        elif e.player in x_tails:
            kept.append(e)
        # newly addable but not reached by the rerouted paths: dropped
    layer.blocked = survivors
    state.addable = kept
    del state.layers[t + 1 :]
    state.refresh_graph()


def extend_matching(
    inst: Instance,
    matching: PartialMatching,
    target_player: int,
    params: Params,
    *,
    check: bool = False,
    on_event: EventHook | None = None,
    boundary_hook: Callable[["SearchState"], None] | None = None,
) -> SearchState:
    """Grow the matching until the target player is matched.

    Mutates the matching in place and returns the final search state for
    its counters. Raises ProbeAborted when a build phase proves tau too
    ambitious, and InvariantViolation on internal defects. With check=True
    the state invariants and signature descent are verified at the start
    of every iterative step.
    """
    state = init_state(inst, matching, target_player, params)
    size_before = len(matching)
    prev_sig: tuple[int, ...] | None = None
    while not matching.is_matched(target_player):
        if state.iterations >= MAX_ITERATIONS:
            raise InvariantViolation("iteration cap hit without termination")
        state.iterations += 1
        if boundary_hook is not None:
            boundary_hook(state)
        if check:
            report = check_invariants(state)
            if not report.ok:
                raise InvariantViolation("; ".join(report.failures))
            sig = signature(state)
            if min(sig) < 0:
                raise InvariantViolation(f"empty layer at a boundary: {sig}")
            if any(a > b for a, b in zip(sig, sig[1:])):
                raise InvariantViolation(f"signature coordinates decrease: {sig}")
            if prev_sig is not None and not sig < prev_sig:
                raise InvariantViolation(
                    f"signature did not drop: {prev_sig} -> {sig}"
                )
            prev_sig = sig
        layer = build_phase(state)
        earlier = sum(len(lay.blockers) for lay in state.layers[:-1])
        if Fraction(layer.path_count) < state.params.gamma * earlier:
            if on_event is not None:
                decomp = canonical_decomposition(
                    state.graph,
                    [lay.players() for lay in state.layers],
                    state.addable,
                )
                on_event(state, "abort", -1, decomp)
            raise ProbeAborted(
                state.params.tau, target_player, state.iterations, state.collapses
            )
        collapse_phase(state, on_event)
    if len(matching) != size_before + 1:
        raise InvariantViolation("extension changed more than one player")
    if matching.fat_count() != state.initial_fat_count:
        raise InvariantViolation("extension changed the fat edge count")
    return state


def signature(state: SearchState) -> tuple[int, ...]:
    """Layer-size potential; drops lexicographically every iterative step.

    Coordinate i is floor(log of |P_i| / delta**(i+1), base 1/(1-mu)),
    computed exactly; an empty layer, impossible at a boundary under
    validated params, shows as -1. The final coordinate is a sentinel
    above every reachable value, so growing a new layer still compares
    lexicographically smaller.
    """
    mu, delta = state.params.mu, state.params.delta
    base = 1 / (1 - mu)
    coords = []
    for i, layer in enumerate(state.layers):
        size = len(layer.blockers)
        if size == 0:
            coords.append(-1)
        else:
            coords.append(_floor_log(base, Fraction(size) / delta ** (i + 1)))
    coords.append(signature_sentinel(state.inst, state.params))
    return tuple(coords)


def signature_sentinel(inst: Instance, params: Params) -> int:
    n = max(inst.num_players, 1)
    base = 1 / (1 - params.mu)
    return _floor_log(base, Fraction(n) / params.delta ** (n + 2)) + 1


def _floor_log(base: Fraction, x: Fraction) -> int:
    """Largest k with base**k <= x, exact; x must be >= 1 and base > 1."""
    if x < 1 or base <= 1:
        raise ValueError("need x >= 1 and base > 1")
    guess = (math.log(x.numerator) - math.log(x.denominator)) / (
        math.log(base.numerator) - math.log(base.denominator)
    )
    k = max(0, int(guess))
    while base ** (k + 1) <= x:
        k += 1
    while k > 0 and base**k > x:
        k -= 1
    return k


@dataclass
class InvariantReport:
    ok: bool
    failures: list[str]


def check_invariants(state: SearchState) -> InvariantReport:
    """Recompute the boundary invariants from scratch against fresh flows."""
    failures: list[str] = []
    inst, params = state.inst, state.params
    matching = state.matching
    graph = build_graph(inst, state.fat, matching.fat_assignment())
    addable_players = [e.player for e in state.addable]
    sources = state.source_players()

    covered = max_disjoint_paths(graph, sources, addable_players).value
    if covered != len(state.addable):
        failures.append(
            f"addable cover: {covered} paths for {len(state.addable)} edges"
        )

    blocked_prefix = 0
    for i in range(1, len(state.layers)):
        below = state.source_players(through=i - 1)
        sink_owners = {
            e.player for lay in state.layers[: i + 1] for e in lay.blocked
        }
        sink_owners.update(addable_players)
        reachable = max_disjoint_paths(graph, below, sink_owners).value
        if reachable < state.layers[i].path_count:
            failures.append(
                f"layer {i}: {reachable} paths below frozen {state.layers[i].path_count}"
            )
    for i, layer in enumerate(state.layers):
        blocked_prefix += len(layer.blocked)
        if i >= 1 and layer.path_count < blocked_prefix:
            failures.append(
                f"layer {i}: frozen count {layer.path_count} below {blocked_prefix} blocked edges"
            )
        if i >= 1:
            earlier = sum(len(l.blockers) for l in state.layers[:i])
            if Fraction(len(layer.blockers)) < params.delta * earlier:
                failures.append(f"layer {i}: growth below delta")

    failures.extend(_structural_errors(state))
    return InvariantReport(ok=not failures, failures=failures)


def _structural_errors(state: SearchState) -> list[str]:
    inst, params, matching = state.inst, state.params, state.matching
    problems = matching.consistency_errors()
    if matching.fat_count() != state.initial_fat_count:
        problems.append("fat edge count drifted")
    seen: set[int] = set()
    total = 0
    tree_edges: list[ThinEdge] = [e for e in state.addable]
    for layer in state.layers:
        tree_edges.extend(layer.blocked)
        tree_edges.extend(layer.blockers)
    for e in tree_edges:
        total += len(e.resources)
        seen |= e.resources
    if len(seen) != total:
        problems.append("tree edges share resources")
    for layer in state.layers:
        for e in layer.blocked:
            if not edge_in_window(inst, e, params):
                problems.append(f"blocked edge of player {e.player} out of window")
        for e in layer.blockers:
            if not e.resources:
                continue  # the target player's placeholder
            if not edge_in_window(inst, e, params):
                problems.append(f"blocker of player {e.player} out of window")
            if matching.edge_of(e.player) != e:
                problems.append(f"blocker of player {e.player} left the matching")
    for e in state.addable:
        if not edge_in_window(inst, e, params):
            problems.append(f"addable edge of player {e.player} out of window")
    for p in state.source_players():
        held = matching.edge_of(p)
        if isinstance(held, FatEdge):
            problems.append(f"source player {p} holds a fat edge")
    owners = [e.player for e in state.addable] + [
        e.player for layer in state.layers for e in layer.blocked
    ]
    if len(owners) != len(set(owners)):
        problems.append("two tree edges share an owner")
    return problems
