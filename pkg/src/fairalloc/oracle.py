"""Exhaustive reference implementations for testing the fast paths.

Everything here is deliberately naive and size-guarded; tests compare the
real solver, flow, and edge construction against these.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .edges import ThinEdge
from .flownet import FlowGraph
from .instance import Instance

MAX_OPT_PLAYERS = 6
MAX_OPT_RESOURCES = 14
MAX_PATH_VERTICES = 10
MAX_MATCHING_SIDE = 8


def brute_force_opt(inst: Instance) -> int:
    """Exact max-min value by dynamic programming over resource subsets."""
    n, m = inst.num_players, inst.num_resources
    if n > MAX_OPT_PLAYERS or m > MAX_OPT_RESOURCES:
        raise ValueError(
            f"instance too large for brute force ({n} players, {m} resources)"
        )
    if n == 0:
        return 0
    full = (1 << m) - 1
    tables = [_mask_values(inst, p) for p in range(n)]
    best = tables[0]
    for p in range(1, n):
        val = tables[p]
        nxt = [0] * (1 << m)
        for mask in range(full + 1):
            prev = best[mask]
            cur = val[mask] if val[mask] < prev else prev
            sub = (mask - 1) & mask
            while sub:
                rest = best[mask ^ sub]
                mine = val[sub]
                low = mine if mine < rest else rest
                if low > cur:
                    cur = low
                sub = (sub - 1) & mask
            nxt[mask] = cur
        best = nxt
    return best[full]


def _mask_values(inst: Instance, player: int) -> list[int]:
    bit_value = [
        inst.values[r] if r in inst.interest[player] else 0
        for r in range(inst.num_resources)
    ]
    table = [0] * (1 << inst.num_resources)
    for mask in range(1, len(table)):
        low = (mask & -mask).bit_length() - 1
        table[mask] = table[mask & (mask - 1)] + bit_value[low]
    return table


def brute_force_disjoint_paths(
    graph: FlowGraph, sources: Iterable[int], sinks: Iterable[int]
) -> int:
    """Maximum number of vertex-disjoint source-to-sink paths, by search.

    A source that is itself a sink counts via the single-vertex path.
    """
    vertices = graph.vertices()
    if len(vertices) > MAX_PATH_VERTICES:
        raise ValueError(f"graph too large for brute force ({len(vertices)} vertices)")
    src = sorted(set(sources))
    snk = frozenset(sinks)

    def paths_from(s: int, used: frozenset[int]) -> list[tuple[int, ...]]:
        found: list[tuple[int, ...]] = []
        stack = [(s,)]
        while stack:
            path = stack.pop()
            if path[-1] in snk:
                found.append(path)
            for w in graph.successors(path[-1]):
                if w not in used and w not in path:
                    stack.append(path + (w,))
        return found

    def best(i: int, used: frozenset[int]) -> int:
        if i == len(src):
            return 0
        s = src[i]
        top = best(i + 1, used)
        if s not in used:
            for path in paths_from(s, used):
                got = 1 + best(i + 1, used | frozenset(path))
                if got > top:
                    top = got
        return top

    return best(0, frozenset())


def brute_force_max_matching(adjacency: Sequence[Iterable[int]]) -> int:
    """Maximum bipartite matching size by trying every assignment."""
    adj = [sorted(set(row)) for row in adjacency]
    right = {j for row in adj for j in row}
    if len(adj) > MAX_MATCHING_SIDE or len(right) > MAX_MATCHING_SIDE:
        raise ValueError("bipartite graph too large for brute force")

    def best(i: int, used: frozenset[int]) -> int:
        if i == len(adj):
            return 0
        top = best(i + 1, used)
        for j in adj[i]:
            if j not in used:
                top = max(top, 1 + best(i + 1, used | {j}))
        return top

    return best(0, frozenset())


def is_minimal_edge(edge: ThinEdge, target: Fraction, inst: Instance) -> bool:
    """True when the edge covers target but no single deletion still does.

    Single deletions suffice: bundle values are monotone, so any covering
    proper subset extends to one missing exactly one resource.
    """
    total = sum(inst.values[r] for r in edge.resources)
    if total < target:
        return False
    return all(total - inst.values[r] < target for r in edge.resources)
