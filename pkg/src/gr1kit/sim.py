"""Closed-loop execution of synthesized strategies against adversaries.

The strategy is the single source of truth during a run: its per-node edge
table enumerates the environment assignments legal at that node (closure
guarantees the table is total), the adversary picks one, and the recorded
response advances the controller.  Scripted events can pin environment
variables at given steps and take the human away for a span of steps;
during such a span the world is frozen in place and only the step counter
and wall-clock column advance.
"""

from __future__ import annotations

import random
import time as _time
from dataclasses import dataclass, field

from .errors import AdversaryIllegalMove, StrategyHole
from . import workdelivery as wd


@dataclass(frozen=True)
class ScriptedEvent:
    step: int
    overrides: tuple = ()        # ((name, value), ...)
    human_away: int | None = None
    duration: int = 0


def parse_events(text):
    """Parse an events file: ``step=<n> set <var>=<val>`` or
    ``step=<n> human_away=<0|1> duration=<steps>`` per line."""
    events = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            if not toks[0].startswith("step="):
                raise ValueError("line must start with step=<n>")
            step = int(toks[0][5:])
            if toks[1] == "set":
                pairs = []
                for assign in toks[2:]:
                    name, val = assign.split("=", 1)
                    pairs.append((name, int(val)))
                if not pairs:
                    raise ValueError("set needs var=val")
                events.append(ScriptedEvent(step, overrides=tuple(pairs)))
            elif toks[1].startswith("human_away="):
                away = int(toks[1].split("=", 1)[1])
                duration = 0
                if len(toks) > 2 and toks[2].startswith("duration="):
                    duration = int(toks[2].split("=", 1)[1])
                events.append(ScriptedEvent(step, human_away=away,
                                            duration=duration))
            else:
                raise ValueError(f"unknown event {toks[1]!r}")
        except (ValueError, IndexError) as exc:
            raise ValueError(f"bad event line {line_no}: {raw!r} ({exc})")
    return sorted(events, key=lambda ev: ev.step)


# --------------------------------------------------------------------------
# adversary policies


class UniformRandomPolicy:
    kind = "random"
    deterministic_finite = False

    def __init__(self, seed=0):
        self.seed = seed
        self.rng = random.Random(seed)

    def choose(self, step, state, legal, env_names):
        return legal[self.rng.randrange(len(legal))]


class GreedyBLPolicy:
    """Deterministic: pick the move minimizing (or maximizing) the next
    backlog value, breaking ties toward the lowest assignment index."""

    deterministic_finite = True

    def __init__(self, maximize=False):
        self.maximize = maximize
        self.kind = "max-bl" if maximize else "min-bl"

    def choose(self, step, state, legal, env_names):
        if "bl" in env_names:
            pos = env_names.index("bl")
            key = (lambda m: -m[pos]) if self.maximize else (lambda m: m[pos])
            best = min(range(len(legal)), key=lambda k: (key(legal[k]), k))
            return legal[best]
        return legal[0]


class ScriptedPolicy:
    """Uniform random with per-step variable overrides applied when legal."""

    kind = "scripted"
    deterministic_finite = False

    def __init__(self, events=(), seed=0):
        self.rng = random.Random(seed)
        self.overrides = {}
        for ev in events:
            if ev.overrides:
                self.overrides.setdefault(ev.step, []).extend(ev.overrides)

    def choose(self, step, state, legal, env_names):
        want = self.overrides.get(step)
        pool = legal
        if want:
            match = [m for m in legal
                     if all(m[env_names.index(n)] == v for n, v in want)]
            if match:
                pool = match
        return pool[self.rng.randrange(len(pool))]


class InteractivePolicy:
    kind = "interactive"
    deterministic_finite = False

    def __init__(self, out=None, inp=None):
        import sys
        self.out = out or sys.stdout
        self.inp = inp or sys.stdin

    def choose(self, step, state, legal, env_names):
        self.out.write(f"\nstep {step} | state: {state}\n")
        for k, m in enumerate(legal):
            vals = ", ".join(f"{n}={v}" for n, v in zip(env_names, m))
            self.out.write(f"  [{k}] {vals}\n")
        while True:
            self.out.write(f"environment move 0..{len(legal) - 1}> ")
            self.out.flush()
            line = self.inp.readline()
            if not line:
                return legal[0]
            try:
                k = int(line.strip())
                if 0 <= k < len(legal):
                    return legal[k]
            except ValueError:
                pass


def make_adversary(kind, seed=0, events=()):
    if kind == "random":
        return UniformRandomPolicy(seed)
    if kind == "min-bl":
        return GreedyBLPolicy(maximize=False)
    if kind == "max-bl":
        return GreedyBLPolicy(maximize=True)
    if kind == "scripted":
        return ScriptedPolicy(events, seed)
    if kind == "interactive":
        return InteractivePolicy()
    raise ValueError(f"unknown adversary kind {kind!r}")


def adversary_choice(policy, state, legal_moves, env_names, step=0):
    """Resolve one environment choice; the result must come from
    `legal_moves` or the caller aborts with AdversaryIllegalMove."""
    if not legal_moves:
        raise ValueError("no legal moves to choose from")
    pick = policy.choose(step, state, list(legal_moves), list(env_names))
    pick = tuple(pick)
    if pick not in set(map(tuple, legal_moves)):
        raise AdversaryIllegalMove(
            f"policy {getattr(policy, 'kind', '?')} returned {pick}")
    return pick


# --------------------------------------------------------------------------
# traces


@dataclass
class TraceRow:
    index: int
    time_s: float
    state: dict
    env: tuple | None
    sys: tuple | None
    human_away: bool = False


@dataclass
class Trace:
    env_names: tuple
    sys_names: tuple
    td: float
    rows: list = field(default_factory=list)

    @property
    def names(self):
        return tuple(self.env_names) + tuple(self.sys_names)

    def states(self):
        return [r.state for r in self.rows]

    def n_steps(self):
        return len(self.rows) - 1


def run(strategy, adversary, max_steps, events=(), td=10.0,
        arena=None, pace=False):
    """Execute up to max_steps transitions; returns the Trace.

    Rows hold the initial snapshot at index 0 followed by one row per
    transition.  `events` freeze the world for human-away spans and pin
    environment variables at given steps (where legal).  When `arena` is
    given, node responses are cross-checked against it and a missing edge
    raises StrategyHole.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    env_names = list(strategy.env_names)
    away_events = {ev.step: ev for ev in events if ev.human_away is not None}
    set_events = {}
    for ev in events:
        if ev.overrides:
            set_events.setdefault(ev.step, []).extend(ev.overrides)

    inits = list(dict.fromkeys(strategy.init_env))
    if not inits:
        raise StrategyHole("strategy has no initial nodes")
    if len(inits) == 1:
        ev0 = inits[0]
    else:
        ev0 = adversary_choice(adversary, None, inits, env_names, step=0)
    nid = strategy.init_node[strategy.init_env.index(ev0)]

    trace = Trace(tuple(env_names), tuple(strategy.sys_names), td)
    state = strategy.node_state(nid)
    trace.rows.append(TraceRow(0, 0.0, state, None, None))

    frozen = 0
    for k in range(1, max_steps + 1):
        if pace:
            _time.sleep(td)
        ev = away_events.get(k)
        if ev is not None:
            frozen = ev.duration if ev.human_away else 0
        if frozen > 0:
            frozen -= 1
            trace.rows.append(TraceRow(k, k * td, state, None, None,
                                       human_away=True))
            continue
        legal = strategy.legal_env_moves(nid)
        if arena is not None:
            s_idx = arena.encode_state(strategy.node_vals[nid])
            truth = [tuple(arena.decode_env(int(e)))
                     for e in arena.env_moves(s_idx)]
            missing = [m for m in truth if m not in set(legal)]
            if missing:
                raise StrategyHole(
                    f"node {nid} lacks an edge for legal env move {missing[0]}")
            legal = truth
        if not legal:
            raise StrategyHole(f"node {nid} has no outgoing edges")
        pool = legal
        want = set_events.get(k)
        if want:
            match = [m for m in legal
                     if all(m[env_names.index(n)] == v for n, v in want)]
            if match:
                pool = match
        choice = adversary_choice(adversary, state, pool, env_names, step=k)
        resp = strategy.respond(nid, choice)
        if resp is None:
            raise StrategyHole(f"node {nid} has no edge for {choice}")
        sys_vals, nid = resp
        state = strategy.node_state(nid)
        trace.rows.append(TraceRow(k, k * td, state, choice, sys_vals))
    return trace


# --------------------------------------------------------------------------
# CSV rendering


def _scenario_shape(names):
    need = {"bl", "s", "rs", "act", "hf", "tries"}
    if not need.issubset(names):
        return None
    n_obstacles = 0
    while f"o{n_obstacles + 1}" in names:
        n_obstacles += 1
    return n_obstacles + 1     # workstation cell index


def write_csv(trace, fp):
    """Render a trace as CSV; work-delivery traces get the scenario header
    with derived mode and action columns."""
    names = set(trace.names)
    n = _scenario_shape(names)
    if n is None:
        header = ["step", "time_s"] + list(trace.names) + ["human_away"]
        fp.write(",".join(header) + "\n")
        for r in trace.rows:
            vals = [str(r.index), _fmt_time(r.time_s)]
            vals += [str(r.state[k]) for k in trace.names]
            vals.append(str(int(r.human_away)))
            fp.write(",".join(vals) + "\n")
        return
    obstacle_cols = [f"O{j}" for j in range(1, n)]
    header = (["step", "time_s", "RS", "BL", "HF", "tries", "S"] +
              obstacle_cols + ["mode", "ACT", "human_away"])
    fp.write(",".join(header) + "\n")
    for r in trace.rows:
        st = r.state
        world = wd.WorldState.from_valuation(st, n)
        vals = [str(r.index), _fmt_time(r.time_s), str(st["rs"]),
                str(st["bl"]), str(int(st["hf"])), str(st["tries"]),
                str(int(st["s"]))]
        vals += [str(int(st[f"o{j}"])) for j in range(1, n)]
        vals.append(wd.human_mode(world))
        vals.append(f"Go_S{st['act']}")
        vals.append(str(int(r.human_away)))
        fp.write(",".join(vals) + "\n")


def _fmt_time(x):
    return str(int(x)) if float(x).is_integer() else f"{x:g}"


def read_csv(fp):
    """Parse a scenario CSV back into a Trace (inverse of write_csv)."""
    header = fp.readline().strip().split(",")
    rows = []
    if header[:2] != ["step", "time_s"]:
        raise ValueError("not a trace CSV")
    scenario = "mode" in header and "ACT" in header
    obstacle_cols = [h for h in header if h.startswith("O") and h[1:].isdigit()]
    for line in fp:
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        rec = dict(zip(header, parts))
        if scenario:
            state = {"rs": int(rec["RS"]), "bl": int(rec["BL"]),
                     "hf": int(rec["HF"]), "tries": int(rec["tries"]),
                     "s": int(rec["S"]),
                     "act": int(rec["ACT"].replace("Go_S", ""))}
            for col in obstacle_cols:
                state[col.lower()] = int(rec[col])
            # the stalled bit is not a CSV column; rebuild it from its
            # deterministic update (backlog unchanged across the last
            # non-frozen transition)
            away = bool(int(rec["human_away"]))
            if not rows:
                state["stalled"] = 0
            elif away:
                state["stalled"] = rows[-1].state["stalled"]
            else:
                state["stalled"] = int(state["bl"] == rows[-1].state["bl"])
        else:
            skip = {"step", "time_s", "human_away"}
            state = {k: int(v) for k, v in rec.items() if k not in skip}
        rows.append(TraceRow(int(rec["step"]), float(rec["time_s"]), state,
                             None, None, human_away=bool(int(rec["human_away"]))))
    env_names = tuple(k for k in rows[0].state if k in
                      ("bl", "s", "stalled") or k.startswith("o")) if rows else ()
    sys_names = tuple(k for k in rows[0].state if k not in env_names) if rows else ()
    td = rows[1].time_s - rows[0].time_s if len(rows) > 1 else 1.0
    tr = Trace(env_names, sys_names, td, rows)
    return tr
