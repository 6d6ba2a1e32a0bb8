"""Execution events.

Every observable step of a run is reported through a callback taking one
of these records; the CLI, the session protocol, and the tests are all
just different consumers of the same stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union


@dataclass(frozen=True)
class MachineMove:
    """The engine committed to a choice-statement branch."""

    branch_index: int
    guard_text: str


@dataclass(frozen=True)
class UserPrompt:
    """A pending choice declaration awaits a selection."""

    choice_id: int
    alternatives: tuple[str, ...]


@dataclass(frozen=True)
class UserResolved:
    """A selection arrived for an earlier prompt."""

    choice_id: int
    index: int


@dataclass(frozen=True)
class Output:
    """A line produced by `print`."""

    text: str


@dataclass(frozen=True)
class StateSnapshot:
    """The variable bindings right after an assignment, sorted by name."""

    bindings: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class WarningNote:
    """A non-fatal diagnostic, e.g. overlapping guards under first-match."""

    message: str


@dataclass(frozen=True)
class Done:
    """Terminal event; `status` is "success" or "failure"."""

    status: str
    reason: str | None = None


Event = Union[MachineMove, UserPrompt, UserResolved, Output, StateSnapshot, WarningNote, Done]

EventSink = Callable[[Event], None]


class EventLog:
    """A sink that just remembers everything, mostly for tests."""

    def __init__(self) -> None:
        self.events: list[Event] = []

    def __call__(self, event: Event) -> None:
        self.events.append(event)

    def of_type(self, kind: type) -> list[Event]:
        return [e for e in self.events if isinstance(e, kind)]
