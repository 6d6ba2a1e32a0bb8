"""Command line front end: run, check, fmt, and serve.

Exit codes: 0 on success, 1 when a run fails at runtime, 2 for parse
errors and bad invocations.  `run` keeps stdout clean: only program
output lands there; menus, traces, and diagnostics go to stderr.
"""

from __future__ import annotations

import sys

import click

from .engine import BUILTINS, Failure, run_program
from .events import Done, Event, MachineMove, Output, StateSnapshot, UserPrompt, UserResolved, WarningNote
from .interaction import InteractiveSource, ScriptedSource
from .protocol import serve_forever, serve_stdio
from .syntax import (
    Call,
    Choice,
    Cond,
    ParseError,
    Plain,
    ProcDecl,
    Seq,
    SourceProgram,
    parse_program,
    pretty_print,
)


def _load_program(path: str) -> SourceProgram:
    with open(path, "r", encoding="utf-8") as handle:
        source = handle.read()
    try:
        return parse_program(source)
    except ParseError as err:
        click.echo(f"{path}:{err.line}:{err.col}: error: {err.message}", err=True)
        sys.exit(2)


def _parse_choices(spec: str) -> list[int]:
    indices = []
    for part in spec.split(","):
        part = part.strip()
        if part == "":
            continue
        try:
            indices.append(int(part))
        except ValueError:
            raise click.BadParameter(f"'{part}' is not an integer", param_hint="--choices")
    return indices


def _trace_line(event: Event) -> str | None:
    match event:
        case UserPrompt(choice_id, alternatives):
            return f"[choice {choice_id}] awaiting one of {len(alternatives)} alternatives"
        case UserResolved(choice_id, index):
            return f"[choice {choice_id}] resolved to alternative {index}"
        case MachineMove(branch_index, guard_text):
            return f"[machine] branch {branch_index}: {guard_text}"
        case StateSnapshot(bindings):
            shown = ", ".join(f"{name} = {text}" for name, text in bindings)
            return f"[state] {shown if shown else '(empty)'}"
        case Done(status, reason):
            return f"[done] {status}" + (f" ({reason})" if reason else "")
    return None


@click.group()
def cli() -> None:
    """Interpreter and tooling for Choo programs (.choo files)."""


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--choices",
    "choices_spec",
    default=None,
    metavar="I,J,...",
    help="Answer pending choices from this comma-separated list of 0-based "
    "indices instead of prompting.",
)
@click.option("--trace", is_flag=True, help="Mirror moves and state updates to stderr.")
@click.option(
    "--first-match",
    is_flag=True,
    help="When several guards are true, warn and take the lowest index instead of failing.",
)
def run(file: str, choices_spec: str | None, trace: bool, first_match: bool) -> None:
    """Run a program; prompt on stderr for any pending choices."""
    program = _load_program(file)

    def sink(event: Event) -> None:
        if isinstance(event, Output):
            click.echo(event.text)
        elif isinstance(event, WarningNote):
            click.echo(f"warning: {event.message}", err=True)
        elif trace:
            line = _trace_line(event)
            if line is not None:
                click.echo(line, err=True)

    if choices_spec is not None:
        source = ScriptedSource(_parse_choices(choices_spec))
    else:
        source = InteractiveSource(sys.stdin, sys.stderr)
    outcome = run_program(program, source, sink, first_match=first_match)
    if isinstance(outcome, Failure):
        click.echo(f"error: {outcome.reason.render()}", err=True)
        sys.exit(1)
    sys.exit(0)


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
def check(file: str) -> None:
    """Parse a program and report static findings without running it."""
    program = _load_program(file)
    arities = dict(BUILTINS)
    for decl in program.decls:
        for proc in _proc_leaves(decl):
            arities[proc.name] = len(proc.params)
    findings: list[tuple[int, int, str]] = []
    bodies = [program.main] + [
        proc.body for decl in program.decls for proc in _proc_leaves(decl)
    ]
    for body in bodies:
        for call in _calls_in(body):
            expected = arities.get(call.name)
            if expected is not None and expected != len(call.args):
                line, col = call.pos if call.pos is not None else (0, 0)
                findings.append(
                    (
                        line,
                        col,
                        f"call to '{call.name}' with {len(call.args)} argument(s); "
                        f"'{call.name}' takes {expected}",
                    )
                )
    for line, col, message in sorted(findings):
        click.echo(f"{file}:{line}:{col}: error: {message}", err=True)
    sys.exit(2 if findings else 0)


def _proc_leaves(decl) -> list[ProcDecl]:
    if isinstance(decl, Plain):
        return [decl.clause] if isinstance(decl.clause, ProcDecl) else []
    leaves: list[ProcDecl] = []
    for alt in decl.alternatives:
        leaves.extend(_proc_leaves(alt))
    return leaves


def _calls_in(goal) -> list[Call]:
    match goal:
        case Call():
            return [goal]
        case Seq(first, second):
            return _calls_in(first) + _calls_in(second)
        case Choice(branches):
            found: list[Call] = []
            for branch in branches:
                found.extend(_calls_in(branch.body))
            return found
        case _:
            return []


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--write", is_flag=True, help="Rewrite the file in place instead of printing.")
def fmt(file: str, write: bool) -> None:
    """Print (or rewrite) a program in canonical form."""
    program = _load_program(file)
    text = pretty_print(program)
    if write:
        with open(file, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        click.echo(text, nl=False)
    sys.exit(0)


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--stdio", is_flag=True, help="Speak the session protocol on stdin/stdout.")
@click.option("--port", type=int, default=None, help="Listen on this TCP port (0 picks one).")
@click.option("--trace", is_flag=True, help="Also send machine moves and state over the wire.")
@click.option(
    "--first-match",
    is_flag=True,
    help="When several guards are true, warn and take the lowest index instead of failing.",
)
def serve(file: str, stdio: bool, port: int | None, trace: bool, first_match: bool) -> None:
    """Serve program sessions over the newline-delimited JSON protocol."""
    if stdio == (port is not None):
        raise click.UsageError("pass exactly one of --stdio or --port")
    program = _load_program(file)
    if stdio:
        serve_stdio(program, sys.stdin, sys.stdout, trace=trace, first_match=first_match)
        sys.exit(0)
    try:
        serve_forever(
            program,
            "127.0.0.1",
            port,
            trace=trace,
            first_match=first_match,
            log=lambda line: click.echo(line, err=True),
        )
    except OSError as err:
        click.echo(f"error: cannot listen on port {port}: {err}", err=True)
        sys.exit(2)
    sys.exit(0)


def main() -> None:
    cli(prog_name="choo")


if __name__ == "__main__":
    main()
