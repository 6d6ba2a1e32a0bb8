import pytest

from choo.state import (
    BindError,
    BoolVal,
    EvalError,
    IntVal,
    MachineState,
    ProgramStore,
    StrVal,
    bind,
    display,
    eval_expr,
    first_unresolved,
    lookup_procedure,
    resolve_choice,
    resolved_const,
    unresolved_choices,
)
from choo.syntax import parse_program
from choo.syntax import (
    Binary,
    ChoiceDecl,
    ConstDecl,
    IntLit,
    Plain,
    ProcDecl,
    Skip,
    StrLit,
    Var,
)


def store_for(source: str) -> ProgramStore:
    return ProgramStore.initial(parse_program(source))


def test_display_forms():
    assert display(IntVal(4000)) == "4000"
    assert display(IntVal(-7)) == "-7"
    assert display(StrVal("medical")) == "medical"
    assert display(BoolVal(True)) == "true"
    assert display(BoolVal(False)) == "false"


def test_binding_is_replacement_union():
    state = MachineState({}).with_binding("x", IntVal(1))
    state = state.with_binding("x", IntVal(2))
    assert state.get("x") == IntVal(2)
    assert state.snapshot() == (("x", "2"),)


def test_snapshot_is_sorted():
    state = MachineState({"b": IntVal(2), "a": StrVal("one")})
    assert state.snapshot() == (("a", "one"), ("b", "2"))


def test_bind_rejects_constant_names():
    store = store_for('const major == "medical";\nmain { skip }')
    with pytest.raises(BindError):
        bind(store, "major", IntVal(1))
    store = bind(store, "tuition", IntVal(4000))
    assert store.theta.get("tuition") == IntVal(4000)


def test_bind_rejects_names_from_unresolved_alternatives():
    store = store_for('choose { const major == "a" | const major == "b" }\nmain { skip }')
    with pytest.raises(BindError):
        bind(store, "major", StrVal("c"))


def eval_in(source: str, expr_src: str):
    store = store_for(source)
    program = parse_program("main { t = " + expr_src + " }")
    return eval_expr(store, program.main.value)


def test_eval_reads_theta_before_constants():
    store = store_for("const x == 1;\nmain { skip }")
    assert eval_expr(store, Var("x")) == IntVal(1)
    shadow = ProgramStore(store.decls, store.theta.with_binding("y", IntVal(9)))
    assert eval_expr(shadow, Var("y")) == IntVal(9)


def test_eval_constant_chain():
    assert eval_in("const a == 2;\nconst b == a * 3;\nmain { skip }", "b + 1") == IntVal(7)


def test_unresolved_constants_are_not_visible():
    store = store_for("choose { const a == 1 | const a == 2 }\nmain { skip }")
    with pytest.raises(EvalError) as err:
        eval_expr(store, Var("a"))
    assert err.value.code == "unbound_variable"


@pytest.mark.parametrize(
    "lhs,rhs,quot",
    [(7, 2, 3), (-7, 2, -3), (7, -2, -3), (-7, -2, 3), (6, 3, 2), (-6, 3, -2)],
)
def test_division_truncates_toward_zero(lhs, rhs, quot):
    assert eval_in("main { skip }", f"{lhs} / ({rhs})") == IntVal(quot)


def test_division_by_zero():
    with pytest.raises(EvalError) as err:
        eval_in("main { skip }", "1 / (2 - 2)")
    assert err.value.code == "division_by_zero"


@pytest.mark.parametrize(
    "expr_src",
    ['"a" + 1', "1 && true", "!5", '-"a"', '"a" < "b"', "true < false", '1 - "x"'],
)
def test_type_mismatches(expr_src):
    with pytest.raises(EvalError) as err:
        eval_in("main { skip }", expr_src)
    assert err.value.code == "type_mismatch"


def test_equality_across_kinds_is_false_not_an_error():
    assert eval_in("main { skip }", '1 == "1"') == BoolVal(False)
    assert eval_in("main { skip }", "true == 1") == BoolVal(False)
    assert eval_in("main { skip }", 'true != "true"') == BoolVal(True)
    assert eval_in("main { skip }", "0 == false") == BoolVal(False)


def test_boolean_operators_are_strict():
    # Even when the left operand decides, the right one still evaluates.
    with pytest.raises(EvalError) as err:
        eval_in("main { skip }", "false && 1 / 0 == 0")
    assert err.value.code == "division_by_zero"
    with pytest.raises(EvalError):
        eval_in("main { skip }", "true || 1 / 0 == 0")


def test_unresolved_choice_counting():
    store = store_for(
        "choose { choose { const a == 1 | const a == 2 } | const a == 3 }\n"
        "choose { const b == 1 | const b == 2 }\n"
        "const c == 0;\nmain { skip }"
    )
    assert unresolved_choices(store) == 3  # nested node counts too
    assert first_unresolved(store) == 0


def test_resolve_choice_replaces_in_place_and_keeps_theta():
    store = store_for("choose { const a == 1 | const a == 2 }\nconst c == 0;\nmain { skip }")
    store = ProgramStore(store.decls, store.theta.with_binding("x", IntVal(5)))
    resolved = resolve_choice(store, 0, 1)
    assert resolved.decls[0] == Plain(ConstDecl("a", IntLit(2)))
    assert resolved.decls[1] == store.decls[1]
    assert resolved.theta.get("x") == IntVal(5)
    assert unresolved_choices(resolved) == 0
    with pytest.raises(ValueError):
        resolve_choice(resolved, 1, 0)


def test_resolved_const_ignores_pending_alternatives():
    store = store_for("choose { const a == 1 | const a == 2 }\nconst b == 9;\nmain { skip }")
    assert resolved_const(store, "a") is None
    assert resolved_const(store, "b") == ConstDecl("b", IntLit(9))


def test_lookup_procedure_takes_first_resolved_match():
    # Hand-built stores may hold duplicates; lookup stays total.
    first = ProcDecl("p", (), Skip())
    second = ProcDecl("p", ("x",), Skip())
    store = ProgramStore((Plain(first), Plain(second)))
    assert lookup_procedure(store, "p") is first
    assert lookup_procedure(store, "q") is None


def test_cycle_guard_on_hand_built_constants():
    looped = ProgramStore(
        (
            Plain(ConstDecl("a", Var("b"))),
            Plain(ConstDecl("b", Var("a"))),
        )
    )
    with pytest.raises(EvalError) as err:
        eval_expr(looped, Binary("+", Var("a"), IntLit(1)))
    assert err.value.code == "unbound_variable"
    assert "cyclic" in err.value.message
