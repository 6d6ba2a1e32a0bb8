"""Runtime values, the variable state, and the evolving program store.

A `ProgramStore` is what executes: the declarations as written (choice
declarations may still be unresolved) together with the machine state
theta, the variable bindings produced by assignment.  Binding is a
replacement union: a new binding for an existing name overwrites it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    Binary,
    BoolLit,
    ChoiceDecl,
    ConstDecl,
    DFormula,
    Expr,
    IntLit,
    Plain,
    ProcDecl,
    SourceProgram,
    StrLit,
    Unary,
    Var,
)

# --- values ----------------------------------------------------------------


@dataclass(frozen=True)
class IntVal:
    value: int


@dataclass(frozen=True)
class StrVal:
    value: str


@dataclass(frozen=True)
class BoolVal:
    value: bool


Value = IntVal | StrVal | BoolVal

TRUE = BoolVal(True)
FALSE = BoolVal(False)


def display(value: Value) -> str:
    """Human-facing rendering: ints as digits, strings bare, bools lowercase."""
    if isinstance(value, BoolVal):
        return "true" if value.value else "false"
    return str(value.value)


def _typename(value: Value) -> str:
    return {IntVal: "int", StrVal: "string", BoolVal: "bool"}[type(value)]


# --- errors ----------------------------------------------------------------

UNBOUND_VARIABLE = "unbound_variable"
TYPE_MISMATCH = "type_mismatch"
DIVISION_BY_ZERO = "division_by_zero"


class EvalError(Exception):
    """Expression evaluation fault; `code` is one of the module constants."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class BindError(Exception):
    """Attempt to assign to a name reserved by a constant declaration."""


# --- state and store -------------------------------------------------------


@dataclass(frozen=True)
class MachineState:
    """The bindings theta.  Treated as immutable: updates build a new state."""

    bindings: dict[str, Value] = field(default_factory=dict)

    def get(self, name: str) -> Value | None:
        return self.bindings.get(name)

    def with_binding(self, name: str, value: Value) -> "MachineState":
        return MachineState({**self.bindings, name: value})

    def snapshot(self) -> tuple[tuple[str, str], ...]:
        """Bindings as sorted (name, displayed value) pairs."""
        return tuple(sorted((k, display(v)) for k, v in self.bindings.items()))


@dataclass(frozen=True)
class ProgramStore:
    decls: tuple[DFormula, ...]
    theta: MachineState = field(default_factory=MachineState)

    @staticmethod
    def initial(program: SourceProgram) -> "ProgramStore":
        return ProgramStore(program.decls, MachineState({}))


def const_leaf_names(decls: tuple[DFormula, ...]) -> set[str]:
    """Every constant name declared anywhere, alternatives included."""
    names: set[str] = set()
    stack = list(decls)
    while stack:
        d = stack.pop()
        if isinstance(d, ChoiceDecl):
            stack.extend(d.alternatives)
        elif isinstance(d.clause, ConstDecl):
            names.add(d.clause.name)
    return names


def bind(store: ProgramStore, name: str, value: Value) -> ProgramStore:
    """Bind a variable; constant names stay off-limits even while a choice
    offering them is unresolved, so a later move cannot be shadowed."""
    if name in const_leaf_names(store.decls):
        raise BindError(f"cannot assign to constant '{name}'")
    return ProgramStore(store.decls, store.theta.with_binding(name, value))


def resolved_const(store: ProgramStore, name: str) -> ConstDecl | None:
    """The constant declaration for `name`, ignoring unresolved choices."""
    for d in store.decls:
        if isinstance(d, Plain) and isinstance(d.clause, ConstDecl) and d.clause.name == name:
            return d.clause
    return None


def lookup_procedure(store: ProgramStore, name: str) -> ProcDecl | None:
    for d in store.decls:
        if isinstance(d, Plain) and isinstance(d.clause, ProcDecl) and d.clause.name == name:
            return d.clause
    return None


# --- expression evaluation -------------------------------------------------


def eval_expr(store: ProgramStore, expr: Expr) -> Value:
    """Evaluate under theta first, then resolved constants.  Every operator
    is strict: both operands evaluate even when the left one decides."""
    return _eval(store, expr, frozenset())


def _eval(store: ProgramStore, expr: Expr, active: frozenset[str]) -> Value:
    match expr:
        case IntLit(value):
            return IntVal(value)
        case StrLit(value):
            return StrVal(value)
        case BoolLit(value):
            return BoolVal(value)
        case Var(name):
            bound = store.theta.get(name)
            if bound is not None:
                return bound
            const = resolved_const(store, name)
            if const is None:
                raise EvalError(UNBOUND_VARIABLE, f"'{name}' is not bound")
            if name in active:
                raise EvalError(UNBOUND_VARIABLE, f"cyclic constant definition '{name}'")
            return _eval(store, const.value, active | {name})
        case Unary(op, operand):
            val = _eval(store, operand, active)
            if op == "!":
                if not isinstance(val, BoolVal):
                    raise EvalError(TYPE_MISMATCH, f"cannot apply '!' to {_typename(val)}")
                return BoolVal(not val.value)
            if not isinstance(val, IntVal):
                raise EvalError(TYPE_MISMATCH, f"cannot apply unary '-' to {_typename(val)}")
            return IntVal(-val.value)
        case Binary(op, lhs_e, rhs_e):
            lhs = _eval(store, lhs_e, active)
            rhs = _eval(store, rhs_e, active)
            return _apply_binary(op, lhs, rhs)
    raise TypeError(f"not an expression: {expr!r}")


def _apply_binary(op: str, lhs: Value, rhs: Value) -> Value:
    if op in ("&&", "||"):
        if not (isinstance(lhs, BoolVal) and isinstance(rhs, BoolVal)):
            raise EvalError(
                TYPE_MISMATCH, f"cannot apply '{op}' to {_typename(lhs)} and {_typename(rhs)}"
            )
        if op == "&&":
            return BoolVal(lhs.value and rhs.value)
        return BoolVal(lhs.value or rhs.value)
    if op == "==":
        return BoolVal(type(lhs) is type(rhs) and lhs.value == rhs.value)
    if op == "!=":
        return BoolVal(not (type(lhs) is type(rhs) and lhs.value == rhs.value))
    if op in ("<", "<=", ">", ">="):
        if not (isinstance(lhs, IntVal) and isinstance(rhs, IntVal)):
            raise EvalError(
                TYPE_MISMATCH, f"cannot apply '{op}' to {_typename(lhs)} and {_typename(rhs)}"
            )
        table = {"<": lhs.value < rhs.value, "<=": lhs.value <= rhs.value,
                 ">": lhs.value > rhs.value, ">=": lhs.value >= rhs.value}
        return BoolVal(table[op])
    if op in ("+", "-", "*", "/"):
        if not (isinstance(lhs, IntVal) and isinstance(rhs, IntVal)):
            raise EvalError(
                TYPE_MISMATCH, f"cannot apply '{op}' to {_typename(lhs)} and {_typename(rhs)}"
            )
        if op == "+":
            return IntVal(lhs.value + rhs.value)
        if op == "-":
            return IntVal(lhs.value - rhs.value)
        if op == "*":
            return IntVal(lhs.value * rhs.value)
        if rhs.value == 0:
            raise EvalError(DIVISION_BY_ZERO, f"{lhs.value} / 0")
        quotient = lhs.value // rhs.value
        if lhs.value % rhs.value != 0 and (lhs.value < 0) != (rhs.value < 0):
            quotient += 1  # floor division corrected to truncate toward zero
        return IntVal(quotient)
    raise TypeError(f"unknown operator {op!r}")


# --- choice bookkeeping ----------------------------------------------------


def _choice_nodes(decl: DFormula) -> int:
    if isinstance(decl, Plain):
        return 0
    return 1 + sum(_choice_nodes(a) for a in decl.alternatives)


def unresolved_choices(store: ProgramStore) -> int:
    """Total count of choice-declaration nodes left anywhere in the store."""
    return sum(_choice_nodes(d) for d in store.decls)


def first_unresolved(store: ProgramStore) -> int | None:
    """Index of the leftmost top-level unresolved choice declaration."""
    for i, d in enumerate(store.decls):
        if isinstance(d, ChoiceDecl):
            return i
    return None


def resolve_choice(store: ProgramStore, index: int, alternative: int) -> ProgramStore:
    """Replace the choice declaration at `index` by its chosen alternative."""
    decl = store.decls[index]
    if not isinstance(decl, ChoiceDecl):
        raise ValueError(f"declaration {index} is not a choice declaration")
    chosen = decl.alternatives[alternative]
    decls = store.decls[:index] + (chosen,) + store.decls[index + 1 :]
    return ProgramStore(decls, store.theta)
