"""Binary search over probe values, extending a fat matching per player."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

from .edges import FatEdge, Params, classify_resources, validate_params
from .instance import Allocation, Instance, verify_allocation
from .localsearch import (
    InvariantViolation,
    PartialMatching,
    ProbeAborted,
    SearchState,
    extend_matching,
    signature,
)


@dataclass(frozen=True)
class TraceEvent:
    """One phase boundary of one probe, in a fixed field order."""

    probe_tau: int
    iteration: int
    phase: str
    ell: int
    layer_players: tuple[int, ...]
    layer_blocked: tuple[int, ...]
    layer_addable: tuple[int, ...]
    path_counts: tuple[int, ...]
    signature: tuple[int, ...]
    matching_size: int
    collapsed: int

    def format_line(self) -> str:
        def seq(xs: tuple[int, ...]) -> str:
            return ",".join(str(x) for x in xs)

        return (
            f"probe_tau={self.probe_tau} iter={self.iteration} "
            f"phase={self.phase} ell={self.ell} p={seq(self.layer_players)} "
            f"a={seq(self.layer_blocked)} i={seq(self.layer_addable)} "
            f"d={seq(self.path_counts)} sig={seq(self.signature)} "
            f"m={self.matching_size} t={self.collapsed}"
        )


@dataclass(frozen=True)
class ProbeOutcome:
    tau: int
    status: str
    iterations: int
    collapses: int
    seconds: float


@dataclass(frozen=True)
class SolveReport:
    allocation: Allocation
    tau_star: int
    guarantee: Fraction
    probes: tuple[ProbeOutcome, ...]
    events: tuple[TraceEvent, ...]


def max_fat_matching(inst: Instance, params: Params) -> PartialMatching:
    """Maximum matching of players to fat resources, by augmenting paths.

    Deterministic: players are processed in ascending order and each scans
    its fat interests ascending.
    """
    fat, _ = classify_resources(inst, params)
    owner: dict[int, int] = {}

    def try_assign(p: int, banned: set[int]) -> bool:
        for j in sorted(inst.interest[p] & fat):
            if j in banned:
                continue
            banned.add(j)
            if j not in owner or try_assign(owner[j], banned):
                owner[j] = p
                return True
        return False

    for p in range(inst.num_players):
        try_assign(p, set())
    matching = PartialMatching()
    for j in sorted(owner):
        matching.add(FatEdge(player=owner[j], resource=j))
    return matching


def solve_for_tau(
    inst: Instance,
    tau: int,
    params: Params,
    *,
    check: bool = False,
    collect: list[TraceEvent] | None = None,
) -> Allocation:
    """Allocation giving every player at least tau/beta, or ProbeAborted.

    tau=0 trivially succeeds with empty bundles. Trace events are appended
    to collect when given.
    """
    aborted, alloc, _, _, events = _probe(inst, tau, params, check, collect is not None)
    if collect is not None:
        collect.extend(events)
    if aborted is not None:
        raise aborted
    assert alloc is not None
    return alloc


def _probe(
    inst: Instance, tau: int, params: Params, check: bool, tracing: bool
) -> tuple[ProbeAborted | None, Allocation | None, int, int, list[TraceEvent]]:
    """One probe; returns (abort or None, allocation, iterations, collapses, events)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau == 0:
        return None, tuple(frozenset() for _ in range(inst.num_players)), 0, 0, []
    probe_params = replace(params, tau=Fraction(tau))
    ok, why = validate_params(probe_params)
    if not ok:
        raise ValueError(f"invalid parameters: {why}")
    matching = max_fat_matching(inst, probe_params)
    events: list[TraceEvent] = []
    iterations = collapses = 0
    for target in range(inst.num_players):
        if matching.is_matched(target):
            continue
        on_event = None
        if tracing:

            def on_event(
                state: SearchState, phase: str, t: int, decomp
            ) -> None:
                events.append(
                    TraceEvent(
                        probe_tau=tau,
                        iteration=state.iterations,
                        phase=phase,
                        ell=len(state.layers) - 1,
                        layer_players=tuple(
                            len(l.blockers) for l in state.layers
                        ),
                        layer_blocked=tuple(
                            len(l.blocked) for l in state.layers
                        ),
                        layer_addable=tuple(len(s) for s in decomp.subsets),
                        path_counts=tuple(l.path_count for l in state.layers),
                        signature=signature(state),
                        matching_size=len(state.matching),
                        collapsed=t,
                    )
                )

        try:
            final = extend_matching(
                inst, matching, target, probe_params, check=check, on_event=on_event
            )
        except ProbeAborted as exc:
            return exc, None, iterations + exc.iterations, collapses + exc.collapses, events
        iterations += final.iterations
        collapses += final.collapses
    allocation = tuple(
        _bundle(matching, p) for p in range(inst.num_players)
    )
    if not verify_allocation(inst, allocation, Fraction(tau) / params.beta):
        raise InvariantViolation(f"probe tau={tau} produced an invalid allocation")
    return None, allocation, iterations, collapses, events


def _bundle(matching: PartialMatching, player: int) -> frozenset[int]:
    edge = matching.edge_of(player)
    if edge is None:
        raise InvariantViolation(f"player {player} left unmatched by a probe")
    return edge.resources


def _probe_task(
    args: tuple[Instance, int, Params, bool, bool],
) -> tuple[int, str, Allocation | None, int, int, float, list[TraceEvent]]:
    inst, tau, params, check, tracing = args
    start = time.perf_counter()
    aborted, alloc, iters, collapses, events = _probe(inst, tau, params, check, tracing)
    status = "success" if aborted is None else "abort"
    return tau, status, alloc, iters, collapses, time.perf_counter() - start, events


def solve(
    inst: Instance,
    params: Params | None = None,
    *,
    tau_hint: int | None = None,
    jobs: int = 1,
    check: bool = False,
    trace: bool = False,
) -> SolveReport:
    """Largest certified probe value by binary search on tau.

    A probe at tau at most the optimum never aborts, so the search keeps
    lo at the largest success and hi at the smallest abort above it; the
    final lo is at least the optimum and the returned allocation gives
    every player at least lo/beta. With jobs > 1 each round probes several
    interior points concurrently and merges by the same rule.
    """
    if params is None:
        params = Params(tau=Fraction(1))
    ok, why = validate_params(replace(params, tau=Fraction(1)))
    if not ok:
        raise ValueError(f"invalid parameters: {why}")
    total = inst.total_value
    lo = 0
    best: Allocation = tuple(frozenset() for _ in range(inst.num_players))
    hi = total + 1
    probes: list[ProbeOutcome] = []
    events: list[TraceEvent] = []
    pending_hint = tau_hint if tau_hint is not None and 0 < tau_hint <= total else None
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        while hi - lo > 1:
            if pending_hint is not None:
                mids = [pending_hint]
                pending_hint = None
            else:
                span = hi - lo
                k = max(1, min(jobs, span - 1))
                mids = sorted({lo + (span * (i + 1)) // (k + 1) for i in range(k)})
            tasks = [(inst, tau, params, check, trace) for tau in mids]
            if pool is not None and len(tasks) > 1:
                results = list(pool.map(_probe_task, tasks))
            else:
                results = [_probe_task(t) for t in tasks]
            aborted: list[int] = []
            for tau, status, alloc, iters, collapses, seconds, evs in results:
                probes.append(
                    ProbeOutcome(
                        tau=tau,
                        status=status,
                        iterations=iters,
                        collapses=collapses,
                        seconds=seconds,
                    )
                )
                events.extend(evs)
                if status == "success":
                    if tau > lo:
                        lo = tau
                        best = alloc  # type: ignore[assignment]
                else:
                    aborted.append(tau)
            for tau in aborted:
                if lo < tau < hi:
                    hi = tau
    finally:
        if pool is not None:
            pool.shutdown()
    guarantee = Fraction(lo) / params.beta
    if not verify_allocation(inst, best, guarantee):
        raise InvariantViolation("final allocation failed verification")
    return SolveReport(
        allocation=best,
        tau_star=lo,
        guarantee=guarantee,
        probes=tuple(probes),
        events=tuple(events),
    )
