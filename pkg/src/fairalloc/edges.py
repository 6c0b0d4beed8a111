"""Search parameters, resource classification, and thin edge construction."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .instance import Instance


@dataclass(frozen=True)
class Params:
    """Exact rational knobs of the local search.

    tau is the per-player value the current probe tries to certify. A fat
    resource alone covers tau/beta; thin edges are assembled to targets
    tau/alpha (addable) and tau/beta (matched). mu controls when a layer
    has enough addable edges to collapse, delta is the required layer
    growth rate, and gamma the fraction of disjoint paths a build phase
    must reach to continue.
    """

    tau: Fraction
    alpha: Fraction = Fraction(2)
    beta: Fraction = Fraction(13)
    mu: Fraction = Fraction(1, 150)
    delta: Fraction = Fraction(1, 150)
    gamma: Fraction = Fraction(3, 8)


def validate_params(params: Params) -> tuple[bool, str]:
    """Check the feasibility conditions; returns (ok, diagnostic)."""
    p = params
    if p.tau <= 0:
        return False, f"tau must be positive, got {p.tau}"
    if p.alpha < 1:
        return False, f"alpha must be >= 1, got {p.alpha}"
    if p.beta <= p.alpha:
        return False, f"beta must exceed alpha, got beta={p.beta} alpha={p.alpha}"
    if not 0 < p.mu < 1:
        return False, f"mu must be in (0, 1), got {p.mu}"
    if not 0 < p.delta < 1:
        return False, f"delta must be in (0, 1), got {p.delta}"
    if p.gamma <= 0:
        return False, f"gamma must be positive, got {p.gamma}"
    bound = (p.alpha * p.beta - (1 + p.mu) * (p.alpha + p.beta)) / (
        p.alpha * p.beta + p.alpha
    )
    if p.gamma > bound:
        return False, f"gamma={p.gamma} exceeds the path-count bound {bound}"
    lhs = (2 * p.alpha / (p.beta - p.alpha)) * (1 + p.delta)
    rhs = p.gamma - (1 + p.delta) * p.mu
    if lhs > rhs:
        return False, f"growth condition fails: {lhs} > {rhs}"
    return True, ""


def classify_resources(
    inst: Instance, params: Params
) -> tuple[frozenset[int], frozenset[int]]:
    """Split resource ids into (fat, thin) for the probe value tau.

    A resource is fat when beta times its value reaches tau, so one fat
    resource alone satisfies a player at the tau/beta guarantee. Everything
    else, including zero-value resources, is thin.
    """
    fat = frozenset(
        j for j, v in enumerate(inst.values) if params.beta * v >= params.tau
    )
    thin = frozenset(range(inst.num_resources)) - fat
    return fat, thin


@dataclass(frozen=True)
class FatEdge:
    """A single fat resource assigned to a player."""

    player: int
    resource: int

    @property
    def resources(self) -> frozenset[int]:
        return frozenset((self.resource,))


@dataclass(frozen=True)
class ThinEdge:
    """A minimal set of thin resources covering the target tau/delta_class.

    delta_class is the divisor naming the edge's value window: alpha for
    addable edges, beta for matched and blocking edges. Minimality means no
    proper subset still covers the target.
    """

    player: int
    resources: frozenset[int]
    delta_class: Fraction


Edge = FatEdge | ThinEdge


def build_minimal_thin_edge(
    player: int,
    target: Fraction,
    available: Iterable[int],
    inst: Instance,
    *,
    delta_class: Fraction,
) -> ThinEdge | None:
    """Greedy minimal thin edge for a player, or None if the pool is short.

    Scans the player's positive-value available resources by descending
    value (ids ascending on ties) and takes the shortest prefix reaching
    the target. The prefix is minimal: dropping any member, all at least
    as valuable as the last, lands below the target again.
    """
    pool = [
        r
        for r in available
        if r in inst.interest[player] and inst.values[r] > 0
    ]
    pool.sort(key=lambda r: (-inst.values[r], r))
    chosen: list[int] = []
    total = 0
    for r in pool:
        if total >= target:
            break
        chosen.append(r)
        total += inst.values[r]
    if total < target:
        return None
    return ThinEdge(player=player, resources=frozenset(chosen), delta_class=delta_class)


def beta_minimal_subset(
    resources: Iterable[int],
    player: int,
    params: Params,
    excluded: Iterable[int],
    inst: Instance,
) -> ThinEdge | None:
    """Minimal tau/beta thin edge from resources minus excluded, or None.

    This is the immediate-addability test: an addable edge can enter the
    matching as soon as such a subset avoiding matched resources exists.
    """
    banned = set(excluded)
    return build_minimal_thin_edge(
        player,
        params.tau / params.beta,
        (r for r in resources if r not in banned),
        inst,
        delta_class=params.beta,
    )


def edge_value(inst: Instance, edge: Edge) -> int:
    return sum(inst.values[r] for r in edge.resources)


def edge_in_window(inst: Instance, edge: ThinEdge, params: Params) -> bool:
    """True when the edge value sits in [target, target + tau/beta)."""
    target = params.tau / edge.delta_class
    value = edge_value(inst, edge)
    return target <= value < target + params.tau / params.beta
