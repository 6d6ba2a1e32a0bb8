"""The execution engine: stability, move alternation, and statement dispatch.

Execution alternates two kinds of moves.  While the store still holds an
unresolved choice declaration, a pending choice statement is *stable* and
it is the user's turn: one declaration gets resolved per move.  Once no
declarations are pending the statement turns *instable* and the machine
moves: it evaluates all branch guards and commits to the single true one.
Everything else (skip, assignment, cond, sequencing, calls) is ordinary
small-step execution threading the store left to right.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .events import Done, EventSink, MachineMove, Output, StateSnapshot, WarningNote
from .interaction import ChoiceSource, InteractionError, user_move
from .state import (
    BindError,
    BoolVal,
    EvalError,
    IntVal,
    ProgramStore,
    StrVal,
    Value,
    bind,
    display,
    eval_expr,
    lookup_procedure,
    unresolved_choices,
)
from .syntax import (
    Assign,
    Binary,
    BoolLit,
    Branch,
    Call,
    Choice,
    ChoiceDecl,
    Cond,
    DFormula,
    Expr,
    GoalStmt,
    IntLit,
    Plain,
    Seq,
    Skip,
    SourceProgram,
    StrLit,
    Unary,
    Var,
    format_expr,
)

# Failure codes.
GUARD_FALSE = "guard_false"
NO_TRUE_BRANCH = "no_true_branch"
EXCLUSIVITY_VIOLATION = "exclusivity_violation"
EVAL_FAULT = "eval_fault"
UNKNOWN_PROCEDURE = "unknown_procedure"
ARITY_MISMATCH = "arity_mismatch"
ASSIGN_TO_CONSTANT = "assign_to_constant"
CALL_DEPTH_EXCEEDED = "call_depth_exceeded"
CHOICE_SOURCE_EXHAUSTED = "choice_source_exhausted"
INDEX_OUT_OF_RANGE = "index_out_of_range"

# Procedure calls are the only unbounded recursion; each level costs a few
# Python frames, so the ceiling stays well below the interpreter's own limit.
MAX_CALL_DEPTH = 256

# Built-in procedures and their arities; a user procedure of the same name
# takes precedence.
BUILTINS = {"print": 1}


@dataclass(frozen=True)
class FailureReason:
    code: str
    detail: str = ""
    indices: tuple[int, ...] = ()

    def render(self) -> str:
        if self.detail:
            return f"{self.code}: {self.detail}"
        return self.code


@dataclass(frozen=True)
class Success:
    store: ProgramStore


@dataclass(frozen=True)
class Failure:
    reason: FailureReason


ExecOutcome = Success | Failure


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    witness: str


# --- elementarization and stability ----------------------------------------


def elementarize_goal(goal: GoalStmt) -> bool:
    """Truth value of the goal with choice statements read as false and all
    other simple statements read as true."""
    match goal:
        case Choice():
            return False
        case Seq(first, second):
            return elementarize_goal(first) and elementarize_goal(second)
        case _:
            return True


def elementarize_program(decls: tuple[DFormula, ...]) -> bool:
    """Truth value of the declaration set with unresolved choice
    declarations read as false and plain clauses read as true."""
    return all(isinstance(d, Plain) for d in decls)


def is_stable(store: ProgramStore, goal: GoalStmt) -> StabilityVerdict:
    """A goal is stable when the program does not elementarize to true or
    the goal does: stable means the machine has no move and it is the
    user's turn (or the run is finished)."""
    program_elem = elementarize_program(store.decls)
    goal_elem = elementarize_goal(goal)
    stable = (not program_elem) or goal_elem
    if not program_elem:
        position = next(i for i, d in enumerate(store.decls) if isinstance(d, ChoiceDecl))
        witness = f"pending choice declaration at position {position}"
    elif goal_elem:
        witness = "declarations resolved and the goal elementarizes to true"
    else:
        witness = "declarations resolved; a choice statement elementarizes to false"
    return StabilityVerdict(stable, witness)


# --- execution -------------------------------------------------------------


@dataclass
class _Ctx:
    choices: ChoiceSource
    events: EventSink
    first_match: bool
    max_call_depth: int
    choice_ids: Iterator[int] = field(default_factory=lambda: itertools.count())
    call_depth: int = 0


def execute(
    store: ProgramStore,
    goal: GoalStmt,
    choices: ChoiceSource,
    events: EventSink,
    *,
    first_match: bool = False,
    max_call_depth: int = MAX_CALL_DEPTH,
) -> ExecOutcome:
    """Run one goal statement against the store.  The outcome carries the
    final store on success or the first failure reason otherwise."""
    ctx = _Ctx(choices, events, first_match, max_call_depth)
    return _exec(ctx, store, goal)


def run_program(
    program: SourceProgram,
    choices: ChoiceSource,
    events: EventSink,
    *,
    first_match: bool = False,
    max_call_depth: int = MAX_CALL_DEPTH,
) -> ExecOutcome:
    """Execute a whole program from an empty variable state and emit the
    terminal Done event."""
    store = ProgramStore.initial(program)
    outcome = execute(
        store, program.main, choices, events, first_match=first_match, max_call_depth=max_call_depth
    )
    if isinstance(outcome, Success):
        events(Done("success"))
    else:
        events(Done("failure", outcome.reason.render()))
    return outcome


def _exec(ctx: _Ctx, store: ProgramStore, goal: GoalStmt) -> ExecOutcome:
    while True:
        match goal:
            case Skip():
                return Success(store)
            case Assign(target, value_expr):
                try:
                    value = eval_expr(store, value_expr)
                except EvalError as err:
                    return Failure(FailureReason(EVAL_FAULT, str(err)))
                try:
                    store = bind(store, target, value)
                except BindError as err:
                    return Failure(FailureReason(ASSIGN_TO_CONSTANT, str(err)))
                ctx.events(StateSnapshot(store.theta.snapshot()))
                return Success(store)
            case Cond(test):
                try:
                    value = eval_expr(store, test)
                except EvalError as err:
                    return Failure(FailureReason(EVAL_FAULT, str(err)))
                if not isinstance(value, BoolVal):
                    return Failure(
                        FailureReason(
                            EVAL_FAULT,
                            f"type_mismatch: condition '{format_expr(test)}' is not a boolean",
                        )
                    )
                if value.value:
                    return Success(store)
                return Failure(FailureReason(GUARD_FALSE, format_expr(test)))
            case Seq(first, second):
                outcome = _exec(ctx, store, first)
                if isinstance(outcome, Failure):
                    return outcome
                store = outcome.store
                goal = second
            case Call():
                return _call(ctx, store, goal)
            case Choice():
                return _choice(ctx, store, goal)
            case _:
                raise TypeError(f"not a statement: {goal!r}")


def _choice(ctx: _Ctx, store: ProgramStore, goal: Choice) -> ExecOutcome:
    while True:
        verdict = is_stable(store, goal)
        if verdict.stable:
            pending_before = unresolved_choices(store)
            try:
                move = user_move(store, ctx.choices, ctx.events, ctx.choice_ids)
            except InteractionError as err:
                return Failure(FailureReason(err.code, err.message))
            if not move.moved:
                # Unreachable from parsed programs: a stable pending choice
                # statement always leaves a declaration to resolve.
                return Success(store)
            assert unresolved_choices(move.store) < pending_before
            store = move.store
            continue

        true_indices: list[int] = []
        for i, branch in enumerate(goal.branches):
            try:
                value = eval_expr(store, branch.guard)
            except EvalError as err:
                return Failure(FailureReason(EVAL_FAULT, f"guard {i}: {err}"))
            if not isinstance(value, BoolVal):
                return Failure(
                    FailureReason(
                        EVAL_FAULT,
                        f"type_mismatch: guard '{format_expr(branch.guard)}' is not a boolean",
                    )
                )
            if value.value:
                true_indices.append(i)

        if not true_indices:
            return Failure(FailureReason(NO_TRUE_BRANCH, "no guard evaluated to true"))
        if len(true_indices) > 1:
            listed = ", ".join(str(i) for i in true_indices)
            if not ctx.first_match:
                return Failure(
                    FailureReason(
                        EXCLUSIVITY_VIOLATION,
                        f"guards {listed} are simultaneously true",
                        tuple(true_indices),
                    )
                )
            ctx.events(
                WarningNote(
                    f"guards {listed} are simultaneously true; taking branch {true_indices[0]}"
                )
            )
        chosen = true_indices[0]
        branch = goal.branches[chosen]
        ctx.events(MachineMove(chosen, format_expr(branch.guard)))
        return _exec(ctx, store, Seq(Cond(branch.guard), branch.body))


def _call(ctx: _Ctx, store: ProgramStore, call: Call) -> ExecOutcome:
    proc = lookup_procedure(store, call.name)
    if proc is not None:
        if len(call.args) != len(proc.params):
            return Failure(
                FailureReason(
                    ARITY_MISMATCH,
                    f"'{call.name}' takes {len(proc.params)} argument(s), got {len(call.args)}",
                )
            )
        values = []
        for arg in call.args:
            try:
                values.append(eval_expr(store, arg))
            except EvalError as err:
                return Failure(FailureReason(EVAL_FAULT, str(err)))
        if ctx.call_depth >= ctx.max_call_depth:
            return Failure(
                FailureReason(
                    CALL_DEPTH_EXCEEDED,
                    f"call depth limit {ctx.max_call_depth} reached at '{call.name}'",
                )
            )
        body = _substitute_goal(proc.body, dict(zip(proc.params, values)))
        ctx.call_depth += 1
        try:
            return _exec(ctx, store, body)
        finally:
            ctx.call_depth -= 1
    if call.name in BUILTINS:
        expected = BUILTINS[call.name]
        if len(call.args) != expected:
            return Failure(
                FailureReason(
                    ARITY_MISMATCH,
                    f"'{call.name}' takes {expected} argument(s), got {len(call.args)}",
                )
            )
        try:
            value = eval_expr(store, call.args[0])
        except EvalError as err:
            return Failure(FailureReason(EVAL_FAULT, str(err)))
        ctx.events(Output(display(value)))
        return Success(store)
    return Failure(FailureReason(UNKNOWN_PROCEDURE, f"no procedure named '{call.name}'"))


# --- call-by-value substitution ---------------------------------------------


def _value_literal(value: Value) -> Expr:
    if isinstance(value, IntVal):
        return IntLit(value.value)
    if isinstance(value, StrVal):
        return StrLit(value.value)
    return BoolLit(value.value)


def _substitute_expr(expr: Expr, mapping: dict[str, Value]) -> Expr:
    match expr:
        case Var(name) if name in mapping:
            return _value_literal(mapping[name])
        case Var():
            return expr
        case Unary(op, operand):
            return Unary(op, _substitute_expr(operand, mapping))
        case Binary(op, lhs, rhs):
            return Binary(op, _substitute_expr(lhs, mapping), _substitute_expr(rhs, mapping))
        case _:
            return expr


def _substitute_goal(goal: GoalStmt, mapping: dict[str, Value]) -> GoalStmt:
    """Substitute argument values for parameter names in expression
    positions.  Assignment targets and callee names are left alone:
    parameters are values, not assignable cells."""
    match goal:
        case Skip():
            return goal
        case Assign(target, value):
            return Assign(target, _substitute_expr(value, mapping))
        case Cond(test):
            return Cond(_substitute_expr(test, mapping))
        case Call(name, args, pos):
            return Call(name, tuple(_substitute_expr(a, mapping) for a in args), pos)
        case Seq(first, second):
            return Seq(_substitute_goal(first, mapping), _substitute_goal(second, mapping))
        case Choice(branches):
            return Choice(
                tuple(
                    Branch(_substitute_expr(b.guard, mapping), _substitute_goal(b.body, mapping))
                    for b in branches
                )
            )
    raise TypeError(f"not a statement: {goal!r}")
