"""Sectioned text format for two-player safety/liveness specifications.

The format is line oriented.  Eight section headers split a document into
variable declarations and clause lists::

    [ENV_VARS] [SYS_VARS] [ENV_INIT] [SYS_INIT]
    [ENV_TRANS] [SYS_TRANS] [ENV_LIVENESS] [SYS_LIVENESS]

Declarations are ``name : bool`` or ``name : lo..hi``.  Clauses are boolean
expressions over ``! & | -> <->``, integer comparisons ``= != < <= > >=``
between a variable (optionally offset by ``+ k`` / ``- k``) or a literal,
next-step references written ``name'``, and parentheses.  ``#`` starts a
comment.

Ownership discipline: environment transition clauses may not mention
next-step system variables, init and liveness clauses may not mention
next-step variables at all, and environment init clauses may only mention
environment variables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import Diagnostic, MissingBinding, SpecError

ENV = "env"
SYS = "sys"

SECTIONS = (
    "[ENV_VARS]", "[SYS_VARS]", "[ENV_INIT]", "[SYS_INIT]",
    "[ENV_TRANS]", "[SYS_TRANS]", "[ENV_LIVENESS]", "[SYS_LIVENESS]",
)

_IDENT_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*")


# --------------------------------------------------------------------------
# abstract syntax


@dataclass(frozen=True)
class VarDecl:
    name: str
    owner: str            # ENV or SYS
    lo: int               # booleans are 0..1
    hi: int
    is_bool: bool

    @property
    def size(self):
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class VarRef:
    """A variable used as a boolean atom."""
    name: str
    primed: bool


@dataclass(frozen=True)
class IntTerm:
    """Integer-valued term: a constant, or a variable plus a constant offset."""
    name: str | None      # None means pure constant
    primed: bool
    offset: int


@dataclass(frozen=True)
class Cmp:
    op: str               # = != < <= > >=
    lhs: IntTerm
    rhs: IntTerm


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Implies:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Iff:
    lhs: object
    rhs: object


@dataclass
class SpecDocument:
    vars: list[VarDecl] = field(default_factory=list)
    env_init: list = field(default_factory=list)
    sys_init: list = field(default_factory=list)
    env_safety: list = field(default_factory=list)
    sys_safety: list = field(default_factory=list)
    env_liveness: list = field(default_factory=list)
    sys_liveness: list = field(default_factory=list)

    def decl(self, name):
        for d in self.vars:
            if d.name == name:
                return d
        return None

    def env_vars(self):
        return [d for d in self.vars if d.owner == ENV]

    def sys_vars(self):
        return [d for d in self.vars if d.owner == SYS]


# --------------------------------------------------------------------------
# lexer

_TOKEN_SPEC = [
    ("INT", r"\d+"),
    ("NAME", r"[a-zA-Z_][a-zA-Z0-9_]*"),
    ("OP", r"<->|->|<=|>=|!=|\.\.|[!&|=<>+\-():']"),
    ("WS", r"[ \t\r]+"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{k}>{v})" for k, v in _TOKEN_SPEC))


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _lex_line(text, line_no, diags):
    """Tokenize one source line; returns None if a bad character is hit."""
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            diags.append(Diagnostic(Diagnostic.SYNTAX, "illegal character",
                                    line_no, pos + 1, text[pos]))
            return None
        kind = m.lastgroup
        if kind != "WS":
            toks.append(_Tok(kind, m.group(), line_no, pos + 1))
        pos = m.end()
    return toks


# --------------------------------------------------------------------------
# expression parser (recursive descent)


class _ExprParser:
    def __init__(self, toks, line_no):
        self.toks = toks
        self.i = 0
        self.line = line_no

    def _peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def _take(self):
        t = self._peek()
        if t is not None:
            self.i += 1
        return t

    def _fail(self, message, tok=None):
        tok = tok or self._peek()
        col = tok.col if tok else (self.toks[-1].col if self.toks else 1)
        text = tok.text if tok else ""
        raise _ParseAbort(Diagnostic(Diagnostic.SYNTAX, message,
                                     self.line, col, text))

    def parse(self):
        e = self._iff()
        if self._peek() is not None:
            self._fail("unexpected trailing token")
        return e

    def _iff(self):
        e = self._implies()
        while self._peek() and self._peek().text == "<->":
            self._take()
            e = Iff(e, self._implies())
        return e

    def _implies(self):
        e = self._or()
        if self._peek() and self._peek().text == "->":
            self._take()
            return Implies(e, self._implies())
        return e

    def _or(self):
        args = [self._and()]
        while self._peek() and self._peek().text == "|":
            self._take()
            args.append(self._and())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def _and(self):
        args = [self._unary()]
        while self._peek() and self._peek().text == "&":
            self._take()
            args.append(self._unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def _unary(self):
        t = self._peek()
        if t and t.text == "!":
            self._take()
            return Not(self._unary())
        return self._atom()

    _CMP_OPS = {"=", "!=", "<", "<=", ">", ">="}

    def _atom(self):
        t = self._peek()
        if t is None:
            self._fail("expected expression")
        if t.text == "(":
            self._take()
            e = self._iff()
            close = self._take()
            if close is None or close.text != ")":
                self._fail("expected ')'", close or t)
            return e
        if t.kind == "NAME" and t.text == "true":
            self._take()
            return BoolLit(True)
        if t.kind == "NAME" and t.text == "false":
            self._take()
            return BoolLit(False)
        # a term, possibly the left side of a comparison
        lhs = self._term()
        nxt = self._peek()
        if nxt is not None and nxt.text in self._CMP_OPS:
            op = self._take().text
            rhs = self._term()
            return Cmp(op, lhs, rhs)
        # bare boolean variable reference
        if lhs.name is None or lhs.offset != 0:
            self._fail("integer term needs a comparison", t)
        return VarRef(lhs.name, lhs.primed)

    def _term(self):
        t = self._take()
        if t is None:
            self._fail("expected term")
        neg = False
        if t.text == "-":
            neg = True
            t = self._take()
            if t is None:
                self._fail("expected integer after '-'")
        if t.kind == "INT":
            base = IntTerm(None, False, -int(t.text) if neg else int(t.text))
        elif t.kind == "NAME" and not neg:
            primed = False
            if self._peek() and self._peek().text == "'":
                self._take()
                primed = True
            base = IntTerm(t.text, primed, 0)
        else:
            self._fail("expected variable or integer", t)
        # optional +k / -k chain (constant folding)
        while self._peek() and self._peek().text in ("+", "-"):
            sign = 1 if self._take().text == "+" else -1
            t2 = self._take()
            if t2 is None or t2.kind != "INT":
                self._fail("expected integer offset", t2)
            base = IntTerm(base.name, base.primed, base.offset + sign * int(t2.text))
        return base


class _ParseAbort(Exception):
    def __init__(self, diagnostic):
        self.diagnostic = diagnostic


def parse_expr(text, line_no=1):
    """Parse a single clause; raises SpecError on bad syntax."""
    diags = []
    toks = _lex_line(text, line_no, diags)
    if toks is None:
        raise SpecError(diags)
    if not toks:
        raise SpecError([Diagnostic(Diagnostic.SYNTAX, "empty expression", line_no, 1)])
    try:
        return _ExprParser(toks, line_no).parse()
    except _ParseAbort as a:
        raise SpecError([a.diagnostic]) from None


# --------------------------------------------------------------------------
# document parser


_SECTION_FIELD = {
    "[ENV_INIT]": "env_init",
    "[SYS_INIT]": "sys_init",
    "[ENV_TRANS]": "env_safety",
    "[SYS_TRANS]": "sys_safety",
    "[ENV_LIVENESS]": "env_liveness",
    "[SYS_LIVENESS]": "sys_liveness",
}


def parse_spec(text):
    """Parse and validate spec text into a SpecDocument.

    Raises SpecError carrying positioned diagnostics on any problem; never
    raises anything else, for arbitrary byte input decoded as UTF-8.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    doc = SpecDocument()
    diags = []
    section = None
    clause_lines = []   # (section-field, expr, line_no) resolved after decls
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if line in SECTIONS:
                section = line
            else:
                diags.append(Diagnostic(Diagnostic.SYNTAX, "unknown section header",
                                        line_no, 1, line))
                section = None
            continue
        if section is None:
            diags.append(Diagnostic(Diagnostic.SYNTAX, "clause outside any section",
                                    line_no, 1, line.split()[0]))
            continue
        if section in ("[ENV_VARS]", "[SYS_VARS]"):
            _parse_decl(line, line_no, ENV if section == "[ENV_VARS]" else SYS,
                        doc, diags)
        else:
            toks = _lex_line(line, line_no, diags)
            if toks is None or not toks:
                continue
            try:
                expr = _ExprParser(toks, line_no).parse()
            except _ParseAbort as a:
                diags.append(a.diagnostic)
                continue
            clause_lines.append((_SECTION_FIELD[section], expr, line_no))
    for fieldname, expr, line_no in clause_lines:
        getattr(doc, fieldname).append(expr)
        _validate_clause(doc, fieldname, expr, line_no, diags)
    if not doc.sys_liveness:
        doc.sys_liveness.append(BoolLit(True))
    if diags:
        raise SpecError(diags)
    return doc


_DECL_RE = re.compile(
    r"^([a-zA-Z_][a-zA-Z0-9_]*)\s*:\s*(bool|(-?\d+)\s*\.\.\s*(-?\d+))$")


def _parse_decl(line, line_no, owner, doc, diags):
    m = _DECL_RE.match(line)
    if m is None:
        diags.append(Diagnostic(Diagnostic.SYNTAX, "bad declaration",
                                line_no, 1, line))
        return
    name = m.group(1)
    if name in ("true", "false"):
        diags.append(Diagnostic(Diagnostic.SYNTAX, "reserved word as name",
                                line_no, 1, name))
        return
    if doc.decl(name) is not None:
        diags.append(Diagnostic(Diagnostic.DUPLICATE,
                                f"variable {name!r} declared twice",
                                line_no, 1, name))
        return
    if m.group(2) == "bool":
        doc.vars.append(VarDecl(name, owner, 0, 1, True))
    else:
        lo, hi = int(m.group(3)), int(m.group(4))
        if lo > hi:
            diags.append(Diagnostic(Diagnostic.TYPE_MISMATCH,
                                    f"empty range {lo}..{hi}", line_no, 1, name))
            return
        doc.vars.append(VarDecl(name, owner, lo, hi, False))


# --------------------------------------------------------------------------
# validation


def _walk_refs(expr):
    """Yield (name, primed, as_bool) for every variable reference."""
    stack = [expr]
    while stack:
        e = stack.pop()
        if isinstance(e, VarRef):
            yield e.name, e.primed, True
        elif isinstance(e, IntTerm):
            if e.name is not None:
                yield e.name, e.primed, False
        elif isinstance(e, Cmp):
            stack.append(e.lhs)
            stack.append(e.rhs)
        elif isinstance(e, Not):
            stack.append(e.arg)
        elif isinstance(e, (And, Or)):
            stack.extend(e.args)
        elif isinstance(e, (Implies, Iff)):
            stack.append(e.lhs)
            stack.append(e.rhs)


def _validate_clause(doc, fieldname, expr, line_no, diags):
    init_or_live = fieldname in ("env_init", "sys_init",
                                 "env_liveness", "sys_liveness")
    for name, primed, as_bool in _walk_refs(expr):
        d = doc.decl(name)
        if d is None:
            diags.append(Diagnostic(Diagnostic.UNKNOWN_VARIABLE,
                                    f"undeclared variable {name!r}",
                                    line_no, 1, name))
            continue
        if as_bool and not d.is_bool:
            diags.append(Diagnostic(Diagnostic.TYPE_MISMATCH,
                                    f"integer variable {name!r} used as boolean",
                                    line_no, 1, name))
        if not as_bool and d.is_bool:
            diags.append(Diagnostic(Diagnostic.TYPE_MISMATCH,
                                    f"boolean variable {name!r} used in arithmetic",
                                    line_no, 1, name))
        if primed and init_or_live:
            diags.append(Diagnostic(Diagnostic.PRIMED_NOT_ALLOWED,
                                    f"next-step reference {name}' not allowed here",
                                    line_no, 1, name))
        if fieldname == "env_safety" and primed and d.owner == SYS:
            diags.append(Diagnostic(Diagnostic.OWNERSHIP,
                                    f"environment clause references next-step "
                                    f"system variable {name}'",
                                    line_no, 1, name))
        if fieldname == "env_init" and d.owner == SYS:
            diags.append(Diagnostic(Diagnostic.OWNERSHIP,
                                    f"environment init references system "
                                    f"variable {name!r}",
                                    line_no, 1, name))


def validate_document(doc):
    """Validate a programmatically built document; raises SpecError."""
    diags = []
    seen = set()
    for d in doc.vars:
        if d.name in seen:
            diags.append(Diagnostic(Diagnostic.DUPLICATE,
                                    f"variable {d.name!r} declared twice",
                                    0, 0, d.name))
        seen.add(d.name)
        if not _IDENT_RE.fullmatch(d.name):
            diags.append(Diagnostic(Diagnostic.SYNTAX,
                                    f"bad identifier {d.name!r}", 0, 0, d.name))
        if d.lo > d.hi:
            diags.append(Diagnostic(Diagnostic.TYPE_MISMATCH,
                                    f"empty range for {d.name!r}", 0, 0, d.name))
    for fieldname in ("env_init", "sys_init", "env_safety", "sys_safety",
                      "env_liveness", "sys_liveness"):
        for expr in getattr(doc, fieldname):
            _validate_clause(doc, fieldname, expr, 0, diags)
    if not doc.sys_liveness:
        doc.sys_liveness.append(BoolLit(True))
    if diags:
        raise SpecError(diags)
    return doc


# --------------------------------------------------------------------------
# canonical printer


_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}
_ATOM_PREC = 6


def _term_text(t):
    if t.name is None:
        return str(t.offset)
    s = t.name + ("'" if t.primed else "")
    if t.offset > 0:
        s += f" + {t.offset}"
    elif t.offset < 0:
        s += f" - {-t.offset}"
    return s


def _fmt(e, required=0):
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, VarRef):
        return e.name + ("'" if e.primed else "")
    if isinstance(e, Cmp):
        return f"{_term_text(e.lhs)} {e.op} {_term_text(e.rhs)}"
    prec = _PREC[type(e)]
    if isinstance(e, Not):
        if isinstance(e.arg, Cmp):
            body = f"!({_fmt(e.arg)})"   # parenthesized for readability
        else:
            body = "!" + _fmt(e.arg, prec)
    elif isinstance(e, And):
        body = " & ".join(_fmt(a, prec + 1) for a in e.args)
    elif isinstance(e, Or):
        body = " | ".join(_fmt(a, prec + 1) for a in e.args)
    elif isinstance(e, Implies):
        body = f"{_fmt(e.lhs, prec + 1)} -> {_fmt(e.rhs, prec)}"
    elif isinstance(e, Iff):
        body = f"{_fmt(e.lhs, prec + 1)} <-> {_fmt(e.rhs, prec + 1)}"
    else:
        raise TypeError(f"not an expression: {e!r}")
    if prec < required:
        return f"({body})"
    return body


def format_expr(e):
    return _fmt(e, 0)


def print_spec(doc):
    """Render a document in canonical text form.

    The output parses back to a structurally equal document, and printing
    that parse reproduces the same bytes.
    """
    out = []
    for header, owner in (("[ENV_VARS]", ENV), ("[SYS_VARS]", SYS)):
        out.append(header)
        for d in doc.vars:
            if d.owner != owner:
                continue
            dom = "bool" if d.is_bool else f"{d.lo}..{d.hi}"
            out.append(f"{d.name} : {dom}")
        out.append("")
    for header, fieldname in (("[ENV_INIT]", "env_init"),
                              ("[SYS_INIT]", "sys_init"),
                              ("[ENV_TRANS]", "env_safety"),
                              ("[SYS_TRANS]", "sys_safety"),
                              ("[ENV_LIVENESS]", "env_liveness"),
                              ("[SYS_LIVENESS]", "sys_liveness")):
        out.append(header)
        for expr in getattr(doc, fieldname):
            out.append(format_expr(expr))
        out.append("")
    return "\n".join(out)


# --------------------------------------------------------------------------
# evaluation


def _term_value(t, current, nxt):
    if t.name is None:
        return t.offset
    env = nxt if t.primed else current
    where = "next" if t.primed else "current"
    if env is None or t.name not in env:
        raise MissingBinding(f"{t.name}{'′' if t.primed else ''} missing from "
                             f"{where} valuation")
    return env[t.name] + t.offset


def eval_expr(e, current, nxt=None):
    """Evaluate a clause over a current valuation and a (partial) next one.

    Valuations are name -> int mappings with booleans as 0/1.  Integer
    arithmetic is exact; nothing is clamped here.
    """
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, VarRef):
        env = nxt if e.primed else current
        where = "next" if e.primed else "current"
        if env is None or e.name not in env:
            raise MissingBinding(f"{e.name}{'′' if e.primed else ''} missing "
                                 f"from {where} valuation")
        return bool(env[e.name])
    if isinstance(e, Cmp):
        a = _term_value(e.lhs, current, nxt)
        b = _term_value(e.rhs, current, nxt)
        return {"=": a == b, "!=": a != b, "<": a < b,
                "<=": a <= b, ">": a > b, ">=": a >= b}[e.op]
    if isinstance(e, Not):
        return not eval_expr(e.arg, current, nxt)
    if isinstance(e, And):
        return all(eval_expr(a, current, nxt) for a in e.args)
    if isinstance(e, Or):
        return any(eval_expr(a, current, nxt) for a in e.args)
    if isinstance(e, Implies):
        return (not eval_expr(e.lhs, current, nxt)) or eval_expr(e.rhs, current, nxt)
    if isinstance(e, Iff):
        return eval_expr(e.lhs, current, nxt) == eval_expr(e.rhs, current, nxt)
    raise TypeError(f"not an expression: {e!r}")


def expr_refs(e):
    """Set of (name, primed) pairs referenced by an expression."""
    return {(name, primed) for name, primed, _ in _walk_refs(e)}


# convenience constructors used by generators and tests

def v(name):
    return VarRef(name, False)


def vp(name):
    return VarRef(name, True)


def t(name, offset=0):
    return IntTerm(name, False, offset)


def tp(name, offset=0):
    return IntTerm(name, True, offset)


def const(k):
    return IntTerm(None, False, k)


def conj(*args):
    args = [a for a in args if not (isinstance(a, BoolLit) and a.value)]
    if not args:
        return BoolLit(True)
    return args[0] if len(args) == 1 else And(tuple(args))


def disj(*args):
    args = [a for a in args if not (isinstance(a, BoolLit) and not a.value)]
    if not args:
        return BoolLit(False)
    return args[0] if len(args) == 1 else Or(tuple(args))
