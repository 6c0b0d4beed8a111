"""Problem instances, allocations, and the text formats for both."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

Allocation = tuple[frozenset[int], ...]


class InstanceFormatError(ValueError):
    """Raised on malformed instance or allocation text, with a line number."""


@dataclass(frozen=True)
class Instance:
    """Players, integer resource values, and per-player interest sets.

    Resources are indexed 0..num_resources-1. A resource is worth its value
    to every player interested in it and nothing to anyone else.
    """

    values: tuple[int, ...]
    interest: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        for j, v in enumerate(self.values):
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"resource {j} has non-integer or negative value {v!r}")
        for p, s in enumerate(self.interest):
            for r in s:
                if not 0 <= r < len(self.values):
                    raise ValueError(f"player {p} interested in unknown resource {r}")

    @property
    def num_players(self) -> int:
        return len(self.interest)

    @property
    def num_resources(self) -> int:
        return len(self.values)

    @property
    def total_value(self) -> int:
        return sum(self.values)

    def bundle_value(self, player: int, bundle: frozenset[int]) -> int:
        """Value of a bundle to a player; uninterested resources count zero."""
        return sum(self.values[r] for r in bundle if r in self.interest[player])


def parse_instance(text: str) -> Instance:
    """Parse the instance format.

    Line 1 is "num_players num_resources", line 2 the resource values, then
    one line per player: "<player-id>: <resource-ids>". Player ids may be any
    distinct non-negative integers; they are reindexed densely in sorted
    order. '#' starts a comment.
    """
    lines = _content_lines(text)
    if not lines:
        raise InstanceFormatError("empty instance")
    ln, header = lines[0]
    parts = header.split()
    if len(parts) != 2:
        raise InstanceFormatError(f"line {ln}: expected 'num_players num_resources'")
    n, m = (_int(tok, ln) for tok in parts)
    if n < 0 or m < 0:
        raise InstanceFormatError(f"line {ln}: negative instance size")
    if len(lines) < 2:
        raise InstanceFormatError(f"line {ln}: missing value line")
    ln, value_line = lines[1]
    values = tuple(_int(tok, ln) for tok in value_line.split())
    if len(values) != m:
        raise InstanceFormatError(f"line {ln}: expected {m} values, got {len(values)}")
    if any(v < 0 for v in values):
        raise InstanceFormatError(f"line {ln}: negative resource value")

    player_lines = lines[2:]
    if len(player_lines) != n:
        raise InstanceFormatError(f"expected {n} player lines, got {len(player_lines)}")
    by_id: dict[int, frozenset[int]] = {}
    for ln, line in player_lines:
        pid, bundle = _parse_player_line(line, ln, m)
        if pid in by_id:
            raise InstanceFormatError(f"line {ln}: duplicate player id {pid}")
        by_id[pid] = bundle
    interest = tuple(by_id[pid] for pid in sorted(by_id))
    return Instance(values=values, interest=interest)


def write_instance(inst: Instance) -> str:
    """Canonical text form; round-trips through parse_instance."""
    out = [f"{inst.num_players} {inst.num_resources}"]
    out.append(" ".join(str(v) for v in inst.values))
    for p, s in enumerate(inst.interest):
        out.append(f"{p}: " + " ".join(str(r) for r in sorted(s)))
    return "\n".join(out) + "\n"


def parse_allocation(text: str, inst: Instance) -> Allocation:
    """Parse an allocation: one "<player-id>: <resource-ids>" line per player.

    Players without a line get an empty bundle. Ids refer to the dense
    indices of inst.
    """
    bundles: dict[int, frozenset[int]] = {}
    for ln, line in _content_lines(text):
        pid, bundle = _parse_player_line(line, ln, inst.num_resources)
        if pid >= inst.num_players:
            raise InstanceFormatError(f"line {ln}: unknown player {pid}")
        if pid in bundles:
            raise InstanceFormatError(f"line {ln}: duplicate player id {pid}")
        bundles[pid] = bundle
    return tuple(bundles.get(p, frozenset()) for p in range(inst.num_players))


def write_allocation(alloc: Allocation) -> str:
    out = []
    for p, bundle in enumerate(alloc):
        out.append(f"{p}: " + " ".join(str(r) for r in sorted(bundle)))
    return "\n".join(out) + "\n"


def generate_random(
    num_players: int,
    num_resources: int,
    value_max: int,
    interest_prob: float,
    seed: int,
) -> Instance:
    """Deterministic random instance from a pinned generator.

    Uses random.Random(seed) (CPython Mersenne Twister) drawing only
    getrandbits(32), in a fixed order: first one draw per resource value
    (1 + draw % value_max), then one interest coin per (player, resource)
    pair in row-major player order (interested iff draw / 2**32 < prob).
    """
    if num_players < 0 or num_resources < 0 or value_max < 1:
        raise ValueError("need num_players, num_resources >= 0 and value_max >= 1")
    if not 0.0 <= interest_prob <= 1.0:
        raise ValueError("interest_prob must be in [0, 1]")
    rng = random.Random(seed)
    values = tuple(1 + rng.getrandbits(32) % value_max for _ in range(num_resources))
    interest = []
    for _ in range(num_players):
        row = [
            r
            for r in range(num_resources)
            if rng.getrandbits(32) / 2**32 < interest_prob
        ]
        interest.append(frozenset(row))
    return Instance(values=values, interest=tuple(interest))


def allocation_min_value(inst: Instance, alloc: Allocation) -> int:
    """Smallest bundle value over all players."""
    if len(alloc) != inst.num_players:
        raise ValueError("allocation size does not match instance")
    if inst.num_players == 0:
        return 0
    return min(inst.bundle_value(p, b) for p, b in enumerate(alloc))


def verify_allocation(
    inst: Instance, alloc: Allocation, threshold: Fraction | int
) -> bool:
    """Check an allocation is well formed and everyone clears the threshold.

    Well formed means one bundle per player, known resources, no resource
    given twice, and nobody holding a resource they are not interested in.
    """
    if len(alloc) != inst.num_players:
        return False
    seen: set[int] = set()
    for p, bundle in enumerate(alloc):
        for r in bundle:
            if not 0 <= r < inst.num_resources:
                return False
            if r in seen:
                return False
            if r not in inst.interest[p]:
                return False
            seen.add(r)
    if inst.num_players == 0:
        return True
    return all(
        Fraction(inst.bundle_value(p, b)) >= threshold for p, b in enumerate(alloc)
    )


def _content_lines(text: str) -> list[tuple[int, str]]:
    """Non-blank lines with comments stripped, paired with 1-based numbers."""
    out = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((ln, line))
    return out


def _int(token: str, ln: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceFormatError(f"line {ln}: expected integer, got {token!r}") from None


def _parse_player_line(line: str, ln: int, num_resources: int) -> tuple[int, frozenset[int]]:
    head, sep, tail = line.partition(":")
    if not sep:
        raise InstanceFormatError(f"line {ln}: expected '<player-id>: <resource-ids>'")
    pid = _int(head.strip(), ln)
    if pid < 0:
        raise InstanceFormatError(f"line {ln}: negative player id {pid}")
    ids = [_int(tok, ln) for tok in tail.split()]
    for r in ids:
        if not 0 <= r < num_resources:
            raise InstanceFormatError(f"line {ln}: unknown resource {r}")
    bundle = frozenset(ids)
    if len(bundle) != len(ids):
        raise InstanceFormatError(f"line {ln}: repeated resource id")
    return pid, bundle
