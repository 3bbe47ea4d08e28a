import random
from pathlib import Path

import pytest

from gr1kit import speclang as sl
from gr1kit.errors import MissingBinding, SpecError
from gr1kit.speclang import (eval_expr, format_expr, parse_expr, parse_spec,
                             print_spec)

from genspec import random_document

DATA = Path(__file__).parent / "data"


def test_minimal_document():
    doc = parse_spec("""
        [ENV_VARS]
        o1 : bool
        [SYS_VARS]
        rs : 0..3
        [SYS_TRANS]
        rs' <= rs + 1
    """)
    assert len(doc.vars) == 2
    assert doc.vars[0].owner == sl.ENV and doc.vars[1].owner == sl.SYS
    assert len(doc.sys_safety) == 1
    # a liveness goal is always present
    assert doc.sys_liveness == [sl.BoolLit(True)]


def test_ownership_violation():
    with pytest.raises(SpecError) as exc:
        parse_spec("[SYS_VARS]\nrs : 0..3\n[ENV_TRANS]\nrs' = 0\n")
    kinds = {d.kind for d in exc.value.diagnostics}
    assert "OwnershipViolation" in kinds


def test_env_init_cannot_touch_sys_vars():
    with pytest.raises(SpecError) as exc:
        parse_spec("[SYS_VARS]\nrs : 0..3\n[ENV_INIT]\nrs = 0\n")
    assert any(d.kind == "OwnershipViolation" for d in exc.value.diagnostics)


def test_duplicate_declaration():
    with pytest.raises(SpecError) as exc:
        parse_spec("[ENV_VARS]\na : bool\na : 0..2\n")
    assert any(d.kind == "DuplicateDeclaration"
               for d in exc.value.diagnostics)


def test_unknown_variable_and_position():
    with pytest.raises(SpecError) as exc:
        parse_spec("[ENV_VARS]\na : bool\n[ENV_TRANS]\nb -> a'\n")
    d = [d for d in exc.value.diagnostics if d.kind == "UnknownVariable"][0]
    assert d.line == 4
    assert d.token == "b"


def test_type_mismatch():
    with pytest.raises(SpecError) as exc:
        parse_spec("[ENV_VARS]\na : bool\nk : 0..4\n[ENV_TRANS]\na + 1 = 2\n")
    assert any(d.kind == "TypeMismatch" for d in exc.value.diagnostics)
    with pytest.raises(SpecError) as exc:
        parse_spec("[ENV_VARS]\nk : 0..4\n[ENV_TRANS]\nk\n")
    assert any(d.kind == "TypeMismatch" for d in exc.value.diagnostics)


def test_no_primes_in_init_or_liveness():
    with pytest.raises(SpecError) as exc:
        parse_spec("[ENV_VARS]\na : bool\n[ENV_LIVENESS]\na'\n")
    assert any(d.kind == "PrimedNotAllowed" for d in exc.value.diagnostics)
    with pytest.raises(SpecError) as exc:
        parse_spec("[ENV_VARS]\na : bool\n[ENV_INIT]\na'\n")
    assert any(d.kind == "PrimedNotAllowed" for d in exc.value.diagnostics)


def test_syntax_error_reports_line_and_column():
    with pytest.raises(SpecError) as exc:
        parse_spec("[ENV_VARS]\na : bool\n[ENV_TRANS]\na & (a |\n")
    d = exc.value.diagnostics[0]
    assert d.kind == "SyntaxError" and d.line == 4 and d.column >= 1


def test_eval_expr_examples():
    assert eval_expr(parse_expr("bl' = bl - 1"), {"bl": 20}, {"bl": 19})
    assert eval_expr(parse_expr("bl' = bl + 15"), {"bl": 10}, {"bl": 25})
    assert not eval_expr(parse_expr("o1 -> !o1'"), {"o1": 1}, {"o1": 1})


def test_eval_missing_binding():
    e = parse_expr("bl' = bl - 1")
    with pytest.raises(MissingBinding):
        eval_expr(e, {"bl": 20}, {})
    with pytest.raises(MissingBinding):
        eval_expr(e, {}, {"bl": 19})


def test_eval_is_exact_integer_arithmetic():
    # no clamping at the expression level
    e = parse_expr("k' = k + 7")
    assert eval_expr(e, {"k": 1000000}, {"k": 1000007})


def test_empty_sections_print():
    doc = sl.SpecDocument()
    sl.validate_document(doc)
    text = print_spec(doc)
    for header in sl.SECTIONS:
        assert header in text
    doc2 = parse_spec(text)
    assert doc2.vars == [] and doc2.sys_liveness == [sl.BoolLit(True)]


def test_roundtrip_generated_documents():
    rng = random.Random(20240)
    for _ in range(200):
        doc = random_document(rng)
        text = print_spec(doc)
        doc2 = parse_spec(text)
        assert doc2.vars == doc.vars
        for field in ("env_init", "sys_init", "env_safety", "sys_safety",
                      "env_liveness", "sys_liveness"):
            assert getattr(doc2, field) == getattr(doc, field), text
        # printing is a fixpoint after one pass
        assert print_spec(doc2) == text


def test_golden_workdelivery_roundtrip():
    text = (DATA / "work_delivery_n3.spec").read_text()
    doc = parse_spec(text)
    assert print_spec(doc) == text
    assert print_spec(parse_spec(print_spec(doc))) == text


def test_fuzz_never_panics():
    rng = random.Random(99)
    golden = (DATA / "work_delivery_n3.spec").read_bytes()
    for i in range(1000):
        if i % 2:
            blob = bytes(rng.randrange(256) for _ in range(rng.randrange(120)))
        else:
            blob = bytearray(golden[:rng.randrange(len(golden))])
            for _ in range(rng.randrange(8)):
                if blob:
                    blob[rng.randrange(len(blob))] = rng.randrange(256)
            blob = bytes(blob)
        try:
            parse_spec(blob)
        except SpecError:
            pass


def test_expression_precedence():
    e = parse_expr("a -> b -> c")
    assert isinstance(e, sl.Implies) and isinstance(e.rhs, sl.Implies)
    e = parse_expr("a & b | c & d")
    assert isinstance(e, sl.Or)
    e = parse_expr("!a & b")
    assert isinstance(e, sl.And) and isinstance(e.args[0], sl.Not)
    e = parse_expr("x = 1 & y = 2")
    assert isinstance(e, sl.And)
    assert format_expr(parse_expr(format_expr(e))) == format_expr(e)
