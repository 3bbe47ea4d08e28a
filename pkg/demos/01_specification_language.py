"""
The specification language
==========================

A tour of the sectioned text format: declaring variables for the two
players, writing safety clauses over current and next-step values, and
evaluating clauses against concrete valuations.
"""

from gr1kit.speclang import eval_expr, parse_expr, parse_spec, print_spec

# A specification is a plain text document.  Environment variables are
# committed first each step; system variables respond.  A next-step value
# is written with a prime.
source = """
[ENV_VARS]
request : bool
level : 0..5

[SYS_VARS]
grant : bool
pos : 0..3

[ENV_TRANS]
# requests are never dropped two steps in a row
request & !grant -> request'
# the level drifts by at most one
level' <= level + 1
level' >= level - 1

[SYS_TRANS]
# the system answers a pending request immediately
request' -> grant'
# and moves through 0..3 one cell at a time
pos' <= pos + 1
pos' >= pos - 1

[SYS_LIVENESS]
pos = 0
"""

doc = parse_spec(source)
print(f"{len(doc.vars)} variables, "
      f"{len(doc.env_safety)} environment clauses, "
      f"{len(doc.sys_safety)} system clauses")

# Printing is canonical: a second parse/print round trip is byte-identical.
canon = print_spec(doc)
assert print_spec(parse_spec(canon)) == canon
print(canon)

# Clauses are ordinary two-state predicates and can be evaluated directly.
clause = parse_expr("level' <= level + 1")
print("level 3 -> 4 ok:", eval_expr(clause, {"level": 3}, {"level": 4}))
print("level 3 -> 5 ok:", eval_expr(clause, {"level": 3}, {"level": 5}))

# Malformed input never crashes the parser; it reports positioned
# diagnostics instead.
from gr1kit.errors import SpecError

try:
    parse_spec("[SYS_VARS]\npos : 0..3\n[ENV_TRANS]\npos' = 0\n")
except SpecError as err:
    for diag in err.diagnostics:
        print("diagnostic:", diag)
