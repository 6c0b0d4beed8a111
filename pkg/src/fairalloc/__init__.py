"""Max-min fair allocation under restricted valuations.

Every resource has one value and a set of interested players; the goal is
an allocation maximizing the least bundle value. The solver runs a purely
combinatorial layered local search per probe value and binary-searches the
largest certified probe, guaranteeing at least a 1/beta share of the
optimum (beta=13 by default).
"""

from .edges import FatEdge, Params, ThinEdge, classify_resources, validate_params
from .instance import (
    Allocation,
    Instance,
    InstanceFormatError,
    allocation_min_value,
    generate_random,
    parse_allocation,
    parse_instance,
    verify_allocation,
    write_allocation,
    write_instance,
)
from .localsearch import InvariantViolation, PartialMatching, ProbeAborted
from .oracle import brute_force_opt
from .solver import SolveReport, max_fat_matching, solve, solve_for_tau

__all__ = [
    "Allocation",
    "FatEdge",
    "Instance",
    "InstanceFormatError",
    "InvariantViolation",
    "Params",
    "PartialMatching",
    "ProbeAborted",
    "SolveReport",
    "ThinEdge",
    "allocation_min_value",
    "brute_force_opt",
    "classify_resources",
    "generate_random",
    "max_fat_matching",
    "parse_allocation",
    "parse_instance",
    "solve",
    "solve_for_tau",
    "validate_params",
    "verify_allocation",
    "write_allocation",
    "write_instance",
]
