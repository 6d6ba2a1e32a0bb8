"""User moves: how pending choice declarations get resolved.

A user move picks the leftmost unresolved choice declaration, asks a
`ChoiceSource` for a 0-based alternative index, and rewrites the store.
Sources are interchangeable: an interactive menu, a scripted list, or a
connected client speaking the session protocol.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Protocol

from .events import EventSink, UserPrompt, UserResolved
from .state import ProgramStore, first_unresolved, resolve_choice
from .syntax import ChoiceDecl, format_dformula

CHOICE_SOURCE_EXHAUSTED = "choice_source_exhausted"
INDEX_OUT_OF_RANGE = "index_out_of_range"


class InteractionError(Exception):
    """A source could not produce a usable selection."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class ChoicePrompt:
    """What a source gets asked: which pending declaration (by id and by
    position in the store) and the renderings of its alternatives."""

    choice_id: int
    alternatives: tuple[str, ...]
    position: int


@dataclass(frozen=True)
class MoveResult:
    store: ProgramStore
    moved: bool


class ChoiceSource(Protocol):
    def next_choice(self, prompt: ChoicePrompt) -> int:
        """Return a 0-based index into `prompt.alternatives`."""
        ...


class ScriptedSource:
    """Replays a fixed sequence of indices, then reports exhaustion."""

    def __init__(self, indices: Iterable[int]):
        self._queue = deque(indices)

    def next_choice(self, prompt: ChoicePrompt) -> int:
        if not self._queue:
            raise InteractionError(
                CHOICE_SOURCE_EXHAUSTED, f"script exhausted at choice {prompt.choice_id}"
            )
        return self._queue.popleft()


class InteractiveSource:
    """Numbered menu on an output stream, answers read from an input stream.

    Menus number alternatives from 1 for human fingers; the index handed
    back is 0-based like everywhere else.  Unparseable or out-of-range
    input re-prints the menu; end of input counts as exhaustion.
    """

    def __init__(self, in_stream: IO[str], out_stream: IO[str]):
        self._in = in_stream
        self._out = out_stream

    def next_choice(self, prompt: ChoicePrompt) -> int:
        count = len(prompt.alternatives)
        while True:
            self._out.write("choose one:\n")
            for i, alt in enumerate(prompt.alternatives, start=1):
                self._out.write(f"  {i}) {alt}\n")
            self._out.write("> ")
            self._out.flush()
            line = self._in.readline()
            if line == "":
                raise InteractionError(CHOICE_SOURCE_EXHAUSTED, "input stream closed")
            try:
                picked = int(line.strip())
            except ValueError:
                continue
            if 1 <= picked <= count:
                return picked - 1


def user_move(
    store: ProgramStore,
    source: ChoiceSource,
    events: EventSink,
    choice_ids: Iterator[int] | None = None,
) -> MoveResult:
    """Resolve the leftmost pending choice declaration, if any.

    Returns the unchanged store with moved=False when nothing is pending.
    `choice_ids` supplies prompt ids; standalone calls default to id 0.
    """
    position = first_unresolved(store)
    if position is None:
        return MoveResult(store, False)
    decl = store.decls[position]
    assert isinstance(decl, ChoiceDecl)
    alternatives = tuple(format_dformula(a) for a in decl.alternatives)
    choice_id = next(choice_ids) if choice_ids is not None else 0
    events(UserPrompt(choice_id, alternatives))
    index = source.next_choice(ChoicePrompt(choice_id, alternatives, position))
    if not isinstance(index, int) or isinstance(index, bool) or not 0 <= index < len(alternatives):
        raise InteractionError(
            INDEX_OUT_OF_RANGE,
            f"requested index {index!r} of {len(alternatives)} alternatives",
        )
    events(UserResolved(choice_id, index))
    return MoveResult(resolve_choice(store, position, index), True)
