"""Command-line entry point.

Subcommands: ``emit`` (write the work-delivery spec), ``synth`` (solve a
spec and extract a controller), ``simulate`` (drive a controller against an
adversary), ``check`` (verify traces or strategies), ``oracle``
(cross-validate the solver against the brute-force game solver).

Exit codes: 0 success, 2 parse/validation errors, 3 runtime strategy hole,
4 check failure or oracle mismatch, 5 capacity exceeded, 10 unrealizable.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import arena as ar
from . import check as ck
from . import gr1
from . import sim
from . import speclang as sl
from . import workdelivery as wd
from .errors import (AdversaryNotFinite, CapacityExceeded, InvalidParams,
                     SpecError, StrategyHole, TooLarge)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_HOLE = 3
EXIT_CHECK = 4
EXIT_CAPACITY = 5
EXIT_UNREALIZABLE = 10


def _params_from_args(args):
    items = []
    if getattr(args, "config", None):
        with open(args.config) as fp:
            for raw in fp:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidParams(f"bad config line: {raw.rstrip()}")
                key, val = line.split("=", 1)
                items.append((key.strip(), val.strip()))
    for kv in getattr(args, "param", None) or []:
        if "=" not in kv:
            raise InvalidParams(f"--param needs key=value, got {kv!r}")
        key, val = kv.split("=", 1)
        items.append((key.strip(), val.strip()))
    return wd.params_from_items(items)


def cmd_emit(args):
    try:
        params = _params_from_args(args)
        text = wd.emit_text(params)
    except InvalidParams as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.out:
        with open(args.out, "w") as fp:
            fp.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _load_spec(path):
    with open(path, "rb") as fp:
        return sl.parse_spec(fp.read())


def cmd_synth(args):
    try:
        doc = _load_spec(args.spec)
    except SpecError as exc:
        for d in exc.diagnostics:
            print(f"error: {d!r}", file=sys.stderr)
        return EXIT_PARSE
    t0 = time.perf_counter()
    try:
        arena = ar.build_arena(doc, cap=args.cap)
    except CapacityExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    if not gr1.init_feasible(arena):
        print(f"unrealizable: some initial environment assignment admits "
              f"no initial system assignment "
              f"({time.perf_counter() - t0:.2f}s)")
        return EXIT_UNREALIZABLE
    result = gr1.solve(arena, doc.env_liveness, doc.sys_liveness)
    elapsed = time.perf_counter() - t0
    if not result.realizable:
        print(f"unrealizable: {int(result.winning.sum())} of "
              f"{arena.n_states} states winning, but some initial "
              f"environment assignment escapes ({elapsed:.2f}s)")
        return EXIT_UNREALIZABLE
    strategy = gr1.extract_strategy(result, arena)
    print(f"realizable: {int(result.winning.sum())} of {arena.n_states} "
          f"states winning; controller has {strategy.n_nodes} nodes "
          f"({elapsed:.2f}s)")
    if args.out:
        strategy.save(args.out)
        print(f"strategy written to {args.out}")
    return EXIT_OK


def cmd_simulate(args):
    strategy = gr1.Strategy.load(args.strategy)
    events = []
    if args.events:
        with open(args.events) as fp:
            events = sim.parse_events(fp.read())
    if args.runs > 1 and not args.out:
        print("error: --runs needs --out", file=sys.stderr)
        return EXIT_PARSE
    for k in range(args.runs):
        adversary = sim.make_adversary(args.adversary, seed=args.seed + k,
                                       events=events)
        try:
            trace = sim.run(strategy, adversary, args.steps, events=events,
                            td=args.td, pace=args.pace)
        except StrategyHole as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_HOLE
        if args.out:
            path = args.out if args.runs == 1 else f"{args.out}.{k:03d}"
            with open(path, "w") as fp:
                sim.write_csv(trace, fp)
        else:
            sim.write_csv(trace, sys.stdout)
    return EXIT_OK


def cmd_check(args):
    try:
        doc = _load_spec(args.spec)
    except SpecError as exc:
        for d in exc.diagnostics:
            print(f"error: {d!r}", file=sys.stderr)
        return EXIT_PARSE
    if args.mode in ("safety", "recurrence"):
        if not args.trace:
            print("error: --trace required", file=sys.stderr)
            return EXIT_PARSE
        with open(args.trace) as fp:
            trace = sim.read_csv(fp)
        if args.mode == "safety":
            verdict = ck.check_safety(trace, doc)
        else:
            if not args.window:
                print("error: --window required for recurrence",
                      file=sys.stderr)
                return EXIT_PARSE
            goal = doc.sys_liveness[args.goal]
            verdict = ck.check_recurrence(trace, goal, args.window)
    elif args.mode in ("lasso", "closure"):
        if not args.strategy:
            print("error: --strategy required", file=sys.stderr)
            return EXIT_PARSE
        strategy = gr1.Strategy.load(args.strategy)
        if args.mode == "lasso":
            adversary = sim.make_adversary(args.adversary)
            try:
                verdict = ck.lasso_check(strategy, adversary, doc)
            except AdversaryNotFinite as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_PARSE
        else:
            arena = ar.build_arena(doc)
            result = gr1.solve(arena, doc.env_liveness, doc.sys_liveness)
            verdict = ck.verify_strategy_closure(strategy, arena, result)
    else:
        raise AssertionError(args.mode)
    if args.json:
        print(json.dumps(verdict.summary()))
    else:
        print(verdict.render())
    return EXIT_OK if verdict.passed else EXIT_CHECK


def cmd_oracle(args):
    if args.spec:
        try:
            doc = _load_spec(args.spec)
        except SpecError as exc:
            for d in exc.diagnostics:
                print(f"error: {d!r}", file=sys.stderr)
            return EXIT_PARSE
        arena = ar.build_arena(doc)
        try:
            oracle = gr1.brute_force_oracle(
                arena, doc.env_liveness, doc.sys_liveness,
                cap=args.max_states)
        except TooLarge as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CAPACITY
        result = gr1.solve(arena, doc.env_liveness, doc.sys_liveness)
        if np.array_equal(result.winning, oracle):
            print(f"agreement on all {arena.n_states} states")
            return EXIT_OK
        diff = int(np.sum(result.winning != oracle))
        print(f"MISMATCH on {diff} of {arena.n_states} states")
        return EXIT_CHECK
    mismatches = 0
    for k in range(args.random):
        seed = args.seed + k
        arena, env_live, sys_live = ar.random_arena(seed)
        result = gr1.solve(arena, env_live, sys_live)
        oracle = gr1.brute_force_oracle(arena, env_live, sys_live,
                                        cap=args.max_states)
        if not np.array_equal(result.winning, oracle):
            mismatches += 1
            print(f"MISMATCH at seed {seed}")
    print(f"{args.random} random arenas checked, {mismatches} mismatches")
    return EXIT_OK if mismatches == 0 else EXIT_CHECK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gr1kit",
        description="Reactive synthesis for two-player games, with the "
                    "work-delivery scenario generator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("emit", help="write the work-delivery spec")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--config", help="flat key=value parameter file")
    p.add_argument("--param", action="append", metavar="K=V",
                   help="parameter override (wins over --config)")
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("synth", help="solve a spec, extract a controller")
    p.add_argument("spec")
    p.add_argument("--out", help="strategy output path (JSON)")
    p.add_argument("--cap", type=int, default=1 << 24,
                   help="state-space cap")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run a controller in closed loop")
    p.add_argument("strategy")
    p.add_argument("--adversary", default="random",
                   choices=["random", "min-bl", "max-bl", "scripted",
                            "interactive"])
    p.add_argument("--steps", type=int, default=180)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1,
                   help="batch of runs with seeds seed, seed+1, ...")
    p.add_argument("--events", help="scripted events file")
    p.add_argument("--td", type=float, default=10.0,
                   help="seconds per step (trace time column)")
    p.add_argument("--pace", action="store_true",
                   help="sleep td seconds per step")
    p.add_argument("--out", help="trace CSV path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="verify a trace or a strategy")
    p.add_argument("--spec", required=True)
    p.add_argument("--mode", required=True,
                   choices=["safety", "recurrence", "lasso", "closure"])
    p.add_argument("--trace", help="trace CSV (safety / recurrence)")
    p.add_argument("--strategy", help="strategy JSON (lasso / closure)")
    p.add_argument("--window", type=int, help="recurrence window")
    p.add_argument("--goal", type=int, default=0,
                   help="system liveness goal index")
    p.add_argument("--adversary", default="min-bl",
                   choices=["min-bl", "max-bl"])
    p.add_argument("--json", action="store_true",
                   help="machine-readable verdict")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("oracle", help="cross-validate solver vs brute force")
    p.add_argument("--spec", help="check one spec instance")
    p.add_argument("--random", type=int, default=100,
                   help="number of random arenas when no spec is given")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-states", type=int, default=10_000)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
