"""Choo: a tiny imperative language where programs may leave decisions open.

A program is a set of declarations plus a main block.  Declarations are
either ordinary (constants, procedures) or *choice declarations* offering
several alternatives; running a program alternates between the user
resolving pending choices and the machine executing choice statements.
"""

from .engine import (
    ExecOutcome,
    Failure,
    FailureReason,
    StabilityVerdict,
    Success,
    execute,
    is_stable,
    run_program,
)
from .interaction import ChoicePrompt, ChoiceSource, InteractiveSource, ScriptedSource, user_move
from .state import MachineState, ProgramStore, eval_expr
from .syntax import ParseError, SourceProgram, parse_program, pretty_print

__all__ = [
    "ChoicePrompt",
    "ChoiceSource",
    "ExecOutcome",
    "Failure",
    "FailureReason",
    "InteractiveSource",
    "MachineState",
    "ParseError",
    "ProgramStore",
    "ScriptedSource",
    "SourceProgram",
    "StabilityVerdict",
    "Success",
    "eval_expr",
    "execute",
    "is_stable",
    "parse_program",
    "pretty_print",
    "run_program",
    "user_move",
]
