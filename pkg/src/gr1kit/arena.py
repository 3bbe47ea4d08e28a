"""Explicit two-player game arenas compiled from spec documents.

A state is a full valuation of all declared variables, indexed by its
mixed-radix encoding with environment variables first (most significant).
Each step, the environment commits next values for its variables, then the
system responds with next values for its own; the successor state is the
combined assignment.  ``env_moves`` and ``sys_moves`` are exactly the
assignments passing every environment / system safety clause.

The move relations are stored in CSR form over (state, env-choice) pairs so
that solvers can run vectorized fixpoints.  Environment moves with no legal
system response are kept as pairs with empty system slices: they are system
deadlocks, not missing environment options.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

import numpy as np

from .errors import CapacityExceeded
from . import speclang as sl

_BLOCK_CELLS = 1 << 24


@dataclass
class GameArena:
    decls: tuple                 # VarDecl, environment vars first
    n_env_vars: int
    n_env: int                   # number of env assignments
    n_sys: int                   # number of sys assignments
    env_indptr: np.ndarray       # [n_states+1] -> slice into env_next
    env_next: np.ndarray         # env assignment index per (state, choice) pair
    pair_state: np.ndarray       # state index per pair
    sys_indptr: np.ndarray       # [n_pairs+1] -> slice into sys_next
    sys_next: np.ndarray         # sys assignment index per edge
    env_init: np.ndarray         # bool over env assignments
    sys_init: np.ndarray         # bool over states
    doc: object = None

    @property
    def n_states(self):
        return self.n_env * self.n_sys

    @property
    def n_pairs(self):
        return len(self.env_next)

    @property
    def names(self):
        return tuple(d.name for d in self.decls)

    def env_decls(self):
        return self.decls[:self.n_env_vars]

    def sys_decls(self):
        return self.decls[self.n_env_vars:]

    # ---- mixed-radix codec -------------------------------------------

    def _weights(self, decls):
        w = [1] * len(decls)
        for i in range(len(decls) - 2, -1, -1):
            w[i] = w[i + 1] * decls[i + 1].size
        return w

    def encode_env(self, values):
        w = self._weights(self.env_decls())
        return sum((v - d.lo) * wi
                   for v, d, wi in zip(values, self.env_decls(), w))

    def encode_sys(self, values):
        w = self._weights(self.sys_decls())
        return sum((v - d.lo) * wi
                   for v, d, wi in zip(values, self.sys_decls(), w))

    def encode_state(self, values):
        ne = self.n_env_vars
        return self.encode_env(values[:ne]) * self.n_sys + \
            self.encode_sys(values[ne:])

    def decode_env(self, e):
        vals = []
        rem = int(e)
        for d in reversed(self.env_decls()):
            vals.append(d.lo + rem % d.size)
            rem //= d.size
        return tuple(reversed(vals))

    def decode_state(self, s):
        vals = []
        rem = int(s)
        for d in reversed(self.decls):
            vals.append(d.lo + rem % d.size)
            rem //= d.size
        return tuple(reversed(vals))

    def valuation(self, s):
        """State as a name -> value dict."""
        return dict(zip(self.names, self.decode_state(s)))

    def env_values(self, e):
        """Env assignment index as a name -> value dict."""
        vals = []
        rem = int(e)
        for d in reversed(self.env_decls()):
            vals.append(d.lo + rem % d.size)
            rem //= d.size
        return dict(zip((d.name for d in self.env_decls()), reversed(vals)))

    def sys_values(self, y):
        vals = []
        rem = int(y)
        for d in reversed(self.sys_decls()):
            vals.append(d.lo + rem % d.size)
            rem //= d.size
        return dict(zip((d.name for d in self.sys_decls()), reversed(vals)))

    # ---- moves --------------------------------------------------------

    def env_moves(self, s):
        """Legal next env assignments at state s (ascending indices)."""
        return self.env_next[self.env_indptr[s]:self.env_indptr[s + 1]]

    def pair_index(self, s, e):
        lo, hi = self.env_indptr[s], self.env_indptr[s + 1]
        pos = lo + np.searchsorted(self.env_next[lo:hi], e)
        if pos >= hi or self.env_next[pos] != e:
            raise ValueError(f"env assignment {e} not legal at state {s}")
        return int(pos)

    def sys_moves(self, s, e):
        """Legal sys responses at state s given committed env assignment e."""
        p = self.pair_index(s, e)
        return self.sys_next[self.sys_indptr[p]:self.sys_indptr[p + 1]]

    def successor(self, e, y):
        return int(e) * self.n_sys + int(y)

    # ---- misc ---------------------------------------------------------

    def column(self, name, idx=None):
        """Values of a variable across all states (or the given indices)."""
        pos = self.names.index(name)
        w = 1
        for d in self.decls[pos + 1:]:
            w *= d.size
        if idx is None:
            idx = np.arange(self.n_states, dtype=np.int64)
        return (idx // w) % self.decls[pos].size + self.decls[pos].lo

    def env_column(self, name, idx=None):
        """Values of an env variable across env assignment indices."""
        decls = self.env_decls()
        pos = [d.name for d in decls].index(name)
        w = 1
        for d in decls[pos + 1:]:
            w *= d.size
        if idx is None:
            idx = np.arange(self.n_env, dtype=np.int64)
        return (idx // w) % decls[pos].size + decls[pos].lo

    def dump(self, fp):
        """Adjacency dump: one ``state TAB env TAB sys`` line per edge."""
        for p in range(self.n_pairs):
            s = self.pair_state[p]
            e = self.env_next[p]
            for y in self.sys_next[self.sys_indptr[p]:self.sys_indptr[p + 1]]:
                fp.write(f"{s}\t{e}\t{y}\n")


# --------------------------------------------------------------------------
# vectorized clause evaluation


def _depends_primed(e, names):
    """Does the expression reference a primed variable from `names`?"""
    return any(primed and name in names for name, primed in sl.expr_refs(e))


class _Frame:
    """Column provider for vectorized evaluation.

    cur(name) and nxt(name) return numpy arrays (or scalars) that broadcast
    against each other; eval caches subtrees that do not depend on the
    volatile (per-candidate) variables listed in `volatile`.
    """

    def __init__(self, cur, nxt, volatile=()):
        self.cur = cur
        self.nxt = nxt
        self.volatile = frozenset(volatile)
        self._cache = {}
        self._dep = {}

    def _volatile_node(self, e):
        key = id(e)
        if key not in self._dep:
            self._dep[key] = _depends_primed(e, self.volatile)
        return self._dep[key]

    def eval(self, e):
        key = id(e)
        cacheable = self.volatile and not self._volatile_node(e)
        if not self.volatile:
            cacheable = False  # single-shot frames need no cache
        if cacheable and key in self._cache:
            return self._cache[key]
        val = self._eval(e)
        if cacheable:
            self._cache[key] = val
        return val

    def _term(self, t):
        if t.name is None:
            return t.offset
        col = self.nxt(t.name) if t.primed else self.cur(t.name)
        return col + t.offset if t.offset else col

    def _eval(self, e):
        if isinstance(e, sl.BoolLit):
            return e.value
        if isinstance(e, sl.VarRef):
            col = self.nxt(e.name) if e.primed else self.cur(e.name)
            if isinstance(col, (int, np.integer)):
                return bool(col)
            return col != 0
        if isinstance(e, sl.Cmp):
            a, b = self._term(e.lhs), self._term(e.rhs)
            ops = {"=": np.equal, "!=": np.not_equal, "<": np.less,
                   "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal}
            scalars = isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer))
            if scalars:
                return {"=": a == b, "!=": a != b, "<": a < b,
                        "<=": a <= b, ">": a > b, ">=": a >= b}[e.op]
            return ops[e.op](a, b)
        if isinstance(e, sl.Not):
            v = self.eval(e.arg)
            return (not v) if isinstance(v, bool) else np.logical_not(v)
        if isinstance(e, sl.And):
            acc = True
            for a in e.args:
                v = self.eval(a)
                if v is False:
                    return False
                acc = v if acc is True else (
                    acc if v is True else np.logical_and(acc, v))
            return acc
        if isinstance(e, sl.Or):
            acc = False
            for a in e.args:
                v = self.eval(a)
                if v is True:
                    return True
                acc = v if acc is False else (
                    acc if v is False else np.logical_or(acc, v))
            return acc
        if isinstance(e, sl.Implies):
            a, b = self.eval(e.lhs), self.eval(e.rhs)
            if a is False or b is True:
                return True
            if a is True:
                return b
            if b is False:
                return np.logical_not(a)
            return np.logical_or(np.logical_not(a), b)
        if isinstance(e, sl.Iff):
            a, b = self.eval(e.lhs), self.eval(e.rhs)
            if isinstance(a, bool) and isinstance(b, bool):
                return a == b
            return np.equal(a, b)
        raise TypeError(f"not an expression: {e!r}")


def _var_layout(decls):
    sizes = [d.size for d in decls]
    weights = [1] * len(decls)
    for i in range(len(decls) - 2, -1, -1):
        weights[i] = weights[i + 1] * sizes[i + 1]
    return {d.name: (weights[i], d.size, d.lo)
            for i, d in enumerate(decls)}


def _column_from(layout, name, idx):
    w, size, lo = layout[name]
    return (idx // w) % size + lo


# Clauses usually touch few variables, so their truth tables are tiny
# compared to the full (state, move) product.  Expressions are evaluated
# once on a small profile grid indexed by the joint values of the
# variables they reference, then applied to the big masks by one gather.


def _refs_split(clause, cur_order, nxt_order):
    refs = sl.expr_refs(clause)
    cur = [n for n in cur_order if (n, False) in refs]
    nxt = [n for n in nxt_order if (n, True) in refs]
    return cur, nxt


def _profile_layout(layout, names):
    """Mixed-radix packing of a variable subset, most significant first."""
    sizes = [layout[n][1] for n in names]
    weights = [1] * len(names)
    for i in range(len(names) - 2, -1, -1):
        weights[i] = weights[i + 1] * sizes[i + 1]
    total = weights[0] * sizes[0] if names else 1
    return weights, sizes, total


def _profile_index(layout, names, idx, cache):
    key = tuple(names)
    if key in cache:
        return cache[key]
    weights, sizes, _ = _profile_layout(layout, names)
    out = np.zeros(len(idx), dtype=np.int64)
    for n, w2 in zip(names, weights):
        w, size, _lo = layout[n]
        out += ((idx // w) % size) * w2
    cache[key] = out
    return out


def _clause_grid(clause, cur_names, nxt_names, layout, nxt_layout,
                 sys_scalars=None):
    """Truth table of a clause over the joint domains of its references.

    Returns a bool array of shape [#cur profiles, #nxt profiles]; primed
    system variables (when `sys_scalars` is given) come from that mapping
    instead of the grid axes."""
    cw, cs, P = _profile_layout(layout, cur_names)
    nw, ns, Q = _profile_layout(nxt_layout, nxt_names)
    pi = np.arange(P, dtype=np.int64)
    qi = np.arange(Q, dtype=np.int64)

    def cur(name):
        k = cur_names.index(name)
        return (((pi // cw[k]) % cs[k]) + layout[name][2])[:, None]

    def nxt(name):
        if sys_scalars is not None and name in sys_scalars:
            return sys_scalars[name]
        k = nxt_names.index(name)
        return (((qi // nw[k]) % ns[k]) + nxt_layout[name][2])[None, :]

    val = _Frame(cur, nxt).eval(clause)
    if isinstance(val, bool):
        return np.full((P, Q), val, dtype=bool)
    return np.broadcast_to(val, (P, Q))


def build_arena(doc, cap=1 << 24):
    """Compile a validated document into an explicit arena.

    Raises CapacityExceeded when the valuation space is larger than `cap`
    states.  Move relations are computed vectorized; they agree with
    clause-by-clause evaluation through ``speclang.eval_expr``.
    """
    env_decls = tuple(doc.env_vars())
    sys_decls = tuple(doc.sys_vars())
    decls = env_decls + sys_decls
    # a side with no variables keeps one (empty) assignment: product = 1
    n_env = 1
    for d in env_decls:
        n_env *= d.size
    n_sys = 1
    for d in sys_decls:
        n_sys *= d.size
    n_states = n_env * n_sys
    if n_states > cap:
        raise CapacityExceeded(
            f"valuation space has {n_states} states, cap is {cap}")

    state_layout = _var_layout(decls)
    env_layout = _var_layout(env_decls) if env_decls else {}
    sys_layout = _var_layout(sys_decls) if sys_decls else {}
    env_names = {d.name for d in env_decls}
    sys_names = {d.name for d in sys_decls}

    # ---- stage 1: legal (state, env') pairs ---------------------------
    decl_order = [d.name for d in decls]
    env_order = [d.name for d in env_decls]
    block = max(1, min(n_states, _BLOCK_CELLS // max(n_env, 1)))
    s_parts, e_parts = [], []
    env_idx = np.arange(n_env, dtype=np.int64)
    for lo in range(0, n_states, block):
        hi = min(lo + block, n_states)
        rows = np.arange(lo, hi, dtype=np.int64)

        def cur(name, rows=rows):
            return _column_from(state_layout, name, rows)[:, None]

        def nxt(name):
            if name not in env_names:
                raise AssertionError("validator must forbid primed sys here")
            return _column_from(env_layout, name, env_idx)[None, :]

        frame = _Frame(cur, nxt)
        mask = np.ones((hi - lo, n_env), dtype=bool)
        for clause in doc.env_safety:
            val = frame.eval(clause)
            if val is True:
                continue
            if val is False:
                mask[:] = False
                break
            mask &= np.broadcast_to(val, mask.shape)
        r, c = np.nonzero(mask)
        s_parts.append(r + lo)
        e_parts.append(c)
    pair_state = np.concatenate(s_parts) if s_parts else np.zeros(0, np.int64)
    env_next = (np.concatenate(e_parts) if e_parts else
                np.zeros(0, np.int64)).astype(np.int64)
    env_indptr = np.zeros(n_states + 1, dtype=np.int64)
    np.cumsum(np.bincount(pair_state, minlength=n_states), out=env_indptr[1:])

    # ---- stage 2: sys responses per pair ------------------------------
    n_pairs = len(pair_state)
    cur_cache, nxt_cache = {}, {}

    def cur_pairs(name):
        if name not in cur_cache:
            cur_cache[name] = _column_from(state_layout, name, pair_state)
        return cur_cache[name]

    sys_box = {}

    def nxt_dispatch(name):
        if name in env_names:
            if name not in nxt_cache:
                nxt_cache[name] = _column_from(env_layout, name, env_next)
            return nxt_cache[name]
        return sys_box[name]

    frame = _Frame(cur_pairs, nxt_dispatch, volatile=sys_names)
    pair_clauses = [c for c in doc.sys_safety
                    if not _depends_primed(c, sys_names)]
    choice_clauses = [c for c in doc.sys_safety
                      if _depends_primed(c, sys_names)]
    pair_pi_cache, pair_qi_cache = {}, {}

    alive = np.ones(n_pairs, dtype=bool)
    for clause in pair_clauses:
        cur_names, nxt_names = _refs_split(clause, decl_order, env_order)
        _, _, P = _profile_layout(state_layout, cur_names)
        _, _, Q = _profile_layout(env_layout, nxt_names)
        if n_pairs and P * Q * 4 <= n_pairs:
            grid = _clause_grid(clause, cur_names, nxt_names,
                                state_layout, env_layout)
            pi = _profile_index(state_layout, cur_names, pair_state,
                                pair_pi_cache)
            qi = _profile_index(env_layout, nxt_names, env_next,
                                pair_qi_cache)
            alive &= grid.reshape(-1)[pi * Q + qi]
            continue
        val = frame.eval(clause)
        if val is True:
            continue
        if val is False:
            alive[:] = False
            break
        alive &= val

    # the per-choice clauses usually reference few variables, so their
    # conjunction fits one truth table over (current, next-env, response)
    cur_u = [n for n in decl_order
             if any((n, False) in sl.expr_refs(c) for c in choice_clauses)]
    nxtenv_u = [n for n in env_order
                if any((n, True) in sl.expr_refs(c) for c in choice_clauses)]
    _, _, Pu = _profile_layout(state_layout, cur_u)
    _, _, Qu = _profile_layout(env_layout, nxtenv_u)
    gridded = (n_pairs > 0 and choice_clauses
               and Pu * Qu * n_sys <= (1 << 22)
               and Pu * Qu * 4 <= n_pairs * 3)
    if gridded:
        pi = _profile_index(state_layout, cur_u, pair_state, pair_pi_cache)
        qi = _profile_index(env_layout, nxtenv_u, env_next, pair_qi_cache)
        flat = pi * Qu + qi

    pair_parts, y_parts = [], []
    for y in range(n_sys):
        for d in sys_decls:
            w, size, lo = sys_layout[d.name]
            sys_box[d.name] = (y // w) % size + lo
        if gridded:
            g = np.ones((Pu, Qu), dtype=bool)
            for clause in choice_clauses:
                g &= _clause_grid(clause, cur_u, nxtenv_u, state_layout,
                                  env_layout, sys_scalars=sys_box)
            mask = alive & g.reshape(-1)[flat]
        else:
            mask = alive
            dead = False
            for clause in choice_clauses:
                val = frame.eval(clause)
                if val is True:
                    continue
                if val is False:
                    dead = True
                    break
                mask = np.logical_and(mask, val)
            if dead:
                continue
        sel = np.nonzero(mask)[0]
        if len(sel):
            pair_parts.append(sel)
            y_parts.append(np.full(len(sel), y, dtype=np.int64))
    if pair_parts:
        all_pairs = np.concatenate(pair_parts)
        all_ys = np.concatenate(y_parts)
        order = np.argsort(all_pairs, kind="stable")
        edge_pair = all_pairs[order]
        sys_next = all_ys[order]
    else:
        edge_pair = np.zeros(0, np.int64)
        sys_next = np.zeros(0, np.int64)
    sys_indptr = np.zeros(n_pairs + 1, dtype=np.int64)
    np.cumsum(np.bincount(edge_pair, minlength=n_pairs), out=sys_indptr[1:])

    arena = GameArena(
        decls=decls, n_env_vars=len(env_decls), n_env=n_env, n_sys=n_sys,
        env_indptr=env_indptr, env_next=env_next, pair_state=pair_state,
        sys_indptr=sys_indptr, sys_next=sys_next,
        env_init=np.ones(n_env, dtype=bool),
        sys_init=np.ones(n_states, dtype=bool),
        doc=doc)
    return with_inits(arena, doc)


def with_inits(arena, doc):
    """Recompute initial sets from a document's init clauses.

    The move structure is shared; only env_init / sys_init are replaced.
    Useful when scanning initial conditions over one compiled arena.
    """
    env_decls = arena.env_decls()
    env_layout = _var_layout(env_decls) if env_decls else {}
    env_idx = np.arange(arena.n_env, dtype=np.int64)

    def cur_env(name):
        return _column_from(env_layout, name, env_idx)

    frame = _Frame(cur_env, lambda n: None)
    env_init = np.ones(arena.n_env, dtype=bool)
    for clause in doc.env_init:
        val = frame.eval(clause)
        if val is True:
            continue
        env_init = np.logical_and(env_init, val)

    state_layout = _var_layout(arena.decls)
    state_idx = np.arange(arena.n_states, dtype=np.int64)

    def cur_state(name):
        return _column_from(state_layout, name, state_idx)

    frame2 = _Frame(cur_state, lambda n: None)
    sys_init = np.ones(arena.n_states, dtype=bool)
    for clause in doc.sys_init:
        val = frame2.eval(clause)
        if val is True:
            continue
        sys_init = np.logical_and(sys_init, val)
    return replace(arena, env_init=env_init,
                   sys_init=sys_init, doc=doc)


def state_predicate(arena, expr):
    """Evaluate a current-state expression over all states (bool array)."""
    layout = _var_layout(arena.decls)
    idx = np.arange(arena.n_states, dtype=np.int64)
    frame = _Frame(lambda n: _column_from(layout, n, idx), lambda n: None)
    val = frame.eval(expr)
    if isinstance(val, bool):
        return np.full(arena.n_states, val, dtype=bool)
    return val


# --------------------------------------------------------------------------
# construction from explicit relations (synthetic and random arenas)


def from_functions(decls, n_env_vars, env_fn, sys_fn,
                   env_init=None, sys_init=None):
    """Build an arena from explicit move functions (small instances).

    env_fn(s) -> iterable of env assignment indices;
    sys_fn(s, e) -> iterable of sys assignment indices.
    """
    decls = tuple(decls)
    env_decls, sys_decls = decls[:n_env_vars], decls[n_env_vars:]
    n_env = 1
    for d in env_decls:
        n_env *= d.size
    n_sys = 1
    for d in sys_decls:
        n_sys *= d.size
    n_states = n_env * n_sys
    env_indptr = [0]
    env_next, pair_state, sys_indptr, sys_next = [], [], [0], []
    for s in range(n_states):
        es = sorted(set(env_fn(s)))
        for e in es:
            env_next.append(e)
            pair_state.append(s)
            ys = sorted(set(sys_fn(s, e)))
            sys_next.extend(ys)
            sys_indptr.append(len(sys_next))
        env_indptr.append(len(env_next))
    if env_init is None:
        env_init = np.ones(n_env, dtype=bool)
    if sys_init is None:
        sys_init = np.ones(n_states, dtype=bool)
    return GameArena(
        decls=decls, n_env_vars=n_env_vars, n_env=n_env, n_sys=n_sys,
        env_indptr=np.asarray(env_indptr, dtype=np.int64),
        env_next=np.asarray(env_next, dtype=np.int64),
        pair_state=np.asarray(pair_state, dtype=np.int64),
        sys_indptr=np.asarray(sys_indptr, dtype=np.int64),
        sys_next=np.asarray(sys_next, dtype=np.int64),
        env_init=np.asarray(env_init, dtype=bool),
        sys_init=np.asarray(sys_init, dtype=bool))


def random_arena(seed, max_states=200, max_goals=2):
    """Seeded random arena plus liveness predicates, for oracle testing.

    Returns (arena, env_live, sys_live) where the liveness lists hold
    boolean state arrays (between 1 and max_goals each side).
    """
    rng = random.Random(seed)
    while True:
        env_sizes = [rng.randint(1, 4) for _ in range(rng.randint(1, 2))]
        sys_sizes = [rng.randint(1, 4) for _ in range(rng.randint(1, 2))]
        n_env = np.prod(env_sizes)
        n_sys = np.prod(sys_sizes)
        if 2 <= n_env * n_sys <= max_states:
            break
    decls = tuple(
        [sl.VarDecl(f"u{i}", sl.ENV, 0, s - 1, s == 2)
         for i, s in enumerate(env_sizes)] +
        [sl.VarDecl(f"x{i}", sl.SYS, 0, s - 1, s == 2)
         for i, s in enumerate(sys_sizes)])
    n_states = int(n_env * n_sys)
    env_density = rng.uniform(0.3, 0.9)
    sys_density = rng.uniform(0.3, 0.9)

    env_table = []
    for s in range(n_states):
        moves = [e for e in range(n_env) if rng.random() < env_density]
        if not moves and rng.random() < 0.7:
            moves = [rng.randrange(n_env)]   # keep deadlocks occasional
        env_table.append(moves)
    sys_table = {}
    for s in range(n_states):
        for e in env_table[s]:
            moves = [y for y in range(int(n_sys)) if rng.random() < sys_density]
            if not moves and rng.random() < 0.7:
                moves = [rng.randrange(int(n_sys))]
            sys_table[(s, e)] = moves

    arena = from_functions(decls, len(env_sizes),
                           lambda s: env_table[s],
                           lambda s, e: sys_table[(s, e)])
    env_live = [np.array([rng.random() < 0.5 for _ in range(n_states)])
                for _ in range(rng.randint(0, max_goals))]
    sys_live = [np.array([rng.random() < 0.5 for _ in range(n_states)])
                for _ in range(rng.randint(1, max_goals))]
    return arena, env_live, sys_live


def env_moves(arena, s):
    return arena.env_moves(s)


def sys_moves(arena, s, e):
    return arena.sys_moves(s, e)
