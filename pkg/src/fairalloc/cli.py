"""Command line front end: gen, solve, verify, and opt subcommands."""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import oracle
from .edges import Params, validate_params
from .instance import (
    Instance,
    InstanceFormatError,
    allocation_min_value,
    generate_random,
    parse_allocation,
    parse_instance,
    verify_allocation,
    write_allocation,
    write_instance,
    _content_lines,
)
from .localsearch import InvariantViolation, ProbeAborted
from .solver import TraceEvent, solve, solve_for_tau

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INVARIANT = 3


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except InstanceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairalloc",
        description="Max-min fair allocation under restricted valuations.",
    )
    sub = parser.add_subparsers(required=True)

    gen = sub.add_parser("gen", help="generate a random instance")
    gen.add_argument("--players", type=int, required=True)
    gen.add_argument("--resources", type=int, required=True)
    gen.add_argument("--value-max", type=int, default=100)
    gen.add_argument("--interest-prob", type=float, default=0.5)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(run=_cmd_gen)

    slv = sub.add_parser("solve", help="solve an instance")
    slv.add_argument("instance")
    group = slv.add_mutually_exclusive_group()
    group.add_argument("--beta", type=_fraction, default=Fraction(13))
    group.add_argument("--epsilon", type=_fraction)
    slv.add_argument("--tau", type=int, help="probe a single value, no search")
    slv.add_argument("--trace", help="write one line per phase to this file")
    slv.add_argument("--check-invariants", action="store_true")
    slv.add_argument("--jobs", type=int, default=1)
    slv.add_argument("-o", "--output", required=True)
    slv.set_defaults(run=_cmd_solve)

    ver = sub.add_parser("verify", help="verify an allocation file")
    ver.add_argument("instance")
    ver.add_argument("allocation")
    ver.add_argument("--threshold", type=_fraction, required=True)
    ver.set_defaults(run=_cmd_verify)

    opt = sub.add_parser("opt", help="exact optimum of a small instance")
    opt.add_argument("instance")
    opt.set_defaults(run=_cmd_opt)
    return parser


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _cmd_gen(args: argparse.Namespace) -> int:
    seed = args.seed
    env = os.environ.get("FAIRALLOC_SEED")
    if env is not None:
        seed = int(env)
    inst = generate_random(
        args.players, args.resources, args.value_max, args.interest_prob, seed
    )
    Path(args.output).write_text(write_instance(inst))
    print(f"wrote {args.players} players, {args.resources} resources to {args.output}")
    return EXIT_OK


def _cmd_solve(args: argparse.Namespace) -> int:
    inst, scale = _load_instance(args.instance)
    if args.jobs < 1:
        raise ValueError("--jobs must be at least 1")
    params = _resolve_params(args)
    events: list[TraceEvent] = []
    if args.tau is not None:
        tau = args.tau * scale
        try:
            alloc = solve_for_tau(
                inst,
                tau,
                params,
                check=args.check_invariants,
                collect=events if args.trace else None,
            )
        except ProbeAborted:
            _write_trace(args.trace, events)
            print(f"probe tau={args.tau} aborted: no certificate at this value")
            return EXIT_FAIL
        Path(args.output).write_text(write_allocation(alloc))
        _write_trace(args.trace, events)
        print(
            f"certified tau={args.tau}: every player gets at least "
            f"{Fraction(tau) / params.beta / scale}"
        )
        return EXIT_OK
    report = solve(
        inst,
        params,
        jobs=args.jobs,
        check=args.check_invariants,
        trace=args.trace is not None,
    )
    Path(args.output).write_text(write_allocation(report.allocation))
    _write_trace(args.trace, report.events)
    tau_star = Fraction(report.tau_star, scale)
    print(
        f"tau*={tau_star} guarantee={report.guarantee / scale} "
        f"min={Fraction(allocation_min_value(inst, report.allocation), scale)} "
        f"probes={len(report.probes)}"
    )
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    inst, scale = _load_instance(args.instance)
    alloc = parse_allocation(Path(args.allocation).read_text(), inst)
    threshold = args.threshold * scale
    if verify_allocation(inst, alloc, threshold):
        print(f"ok: every player reaches {args.threshold}")
        return EXIT_OK
    print(f"fail: allocation does not certify {args.threshold}")
    return EXIT_FAIL


def _cmd_opt(args: argparse.Namespace) -> int:
    inst, scale = _load_instance(args.instance)
    value = oracle.brute_force_opt(inst)
    print(Fraction(value, scale))
    return EXIT_OK


def _resolve_params(args: argparse.Namespace) -> Params:
    if args.epsilon is not None:
        params = params_from_epsilon(args.epsilon)
    elif args.beta == 13:
        params = Params(tau=Fraction(1))
    else:
        params = params_from_beta(args.beta)
    ok, why = validate_params(params)
    if not ok:
        raise ValueError(why)
    return params


def params_from_beta(beta: Fraction) -> Params:
    """Default mu and delta with gamma centered in its feasible interval."""
    base = Params(tau=Fraction(1), beta=beta)
    lo, hi = _gamma_interval(base)
    if lo > hi:
        raise ValueError(
            f"beta={beta} leaves no feasible gamma with the default mu and delta; "
            f"use --epsilon to derive a full parameter set"
        )
    return Params(tau=Fraction(1), beta=beta, gamma=(lo + hi) / 2)


def params_from_epsilon(epsilon: Fraction) -> Params:
    """Near-tight parameters: beta just above 2*(3 + sqrt(10)) + epsilon."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    q = 10**6
    root = Fraction(math.isqrt(10 * q * q) + 1, q)  # rational just above sqrt(10)
    beta = 2 * (3 + root) + epsilon
    mu = delta = epsilon / 100
    base = Params(tau=Fraction(1), beta=beta, mu=mu, delta=delta)
    lo, hi = _gamma_interval(base)
    if lo > hi:
        raise ValueError(f"epsilon={epsilon} leaves no feasible gamma")
    return Params(tau=Fraction(1), beta=beta, mu=mu, delta=delta, gamma=(lo + hi) / 2)


def _gamma_interval(p: Params) -> tuple[Fraction, Fraction]:
    lo = (2 * p.alpha / (p.beta - p.alpha)) * (1 + p.delta) + (1 + p.delta) * p.mu
    hi = (p.alpha * p.beta - (1 + p.mu) * (p.alpha + p.beta)) / (
        p.alpha * p.beta + p.alpha
    )
    return lo, hi


def _write_trace(path: str | None, events: list[TraceEvent] | tuple[TraceEvent, ...]) -> None:
    if path is None:
        return
    Path(path).write_text("".join(e.format_line() + "\n" for e in events))


def _load_instance(path: str) -> tuple[Instance, int]:
    """Read an instance; rational values are scaled up to integers."""
    text = Path(path).read_text()
    lines = _content_lines(text)
    if len(lines) >= 2:
        ln, value_line = lines[1]
        tokens = value_line.split()
        if any("/" in t or "." in t for t in tokens):
            try:
                fracs = [Fraction(t) for t in tokens]
            except (ValueError, ZeroDivisionError):
                raise InstanceFormatError(f"line {ln}: unreadable value") from None
            scale = math.lcm(*(f.denominator for f in fracs))
            scaled = [int(f * scale) for f in fracs]
            raw = text.splitlines()
            raw[ln - 1] = " ".join(str(v) for v in scaled)
            print(f"note: values scaled by {scale} to integers", file=sys.stderr)
            return parse_instance("\n".join(raw)), scale
    return parse_instance(text), 1


if __name__ == "__main__":
    sys.exit(main())
