"""Concrete syntax: AST types, lexer, parser, and the canonical formatter.

The grammar accepted here (and reproduced by `pretty_print`):

    program ::= decl* "main" "{" gstmt "}"
    decl    ::= clause ";"
              | "choose" "{" dform ("|" dform)+ "}"
    dform   ::= clause
              | "choose" "{" dform ("|" dform)+ "}"
    clause  ::= "const" IDENT "==" expr
              | "proc" IDENT "(" [IDENT ("," IDENT)*] ")" "=" "{" gstmt "}"
    gstmt   ::= simple (";" simple)*
    simple  ::= "skip"
              | IDENT "=" expr
              | IDENT "(" [expr ("," expr)*] ")"
              | "cond" "(" expr ")"
              | "choose" "{" branch ("|" branch)* "}"
    branch  ::= expr "->" gstmt

Expressions use the usual precedence: unary `!`/`-` bind tightest, then
`*` `/`, then `+` `-`, then the comparisons, then `&&`, then `||`.
Comments run from `//` to end of line.  Identifiers are an ASCII letter
followed by ASCII letters, digits, or underscores.  Integer literals must
fit in a signed 64-bit word.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# --- expressions -----------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


Expr = IntLit | StrLit | BoolLit | Var | Binary | Unary

# --- goal statements -------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    """The trivially succeeding statement, spelled `skip`."""


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Expr, ...]
    # Source position of the callee name, for diagnostics only: two Call
    # nodes that differ just in position are the same statement.
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Cond:
    test: Expr


@dataclass(frozen=True)
class Assign:
    target: str
    value: Expr


@dataclass(frozen=True)
class Seq:
    first: "GoalStmt"
    second: "GoalStmt"


@dataclass(frozen=True)
class Branch:
    guard: Expr
    body: "GoalStmt"


@dataclass(frozen=True)
class Choice:
    branches: tuple[Branch, ...]


GoalStmt = Skip | Call | Cond | Assign | Seq | Choice

# --- declarations ----------------------------------------------------------


@dataclass(frozen=True)
class ConstDecl:
    name: str
    value: Expr


@dataclass(frozen=True)
class ProcDecl:
    name: str
    params: tuple[str, ...]
    body: GoalStmt


Clause = ConstDecl | ProcDecl


@dataclass(frozen=True)
class Plain:
    clause: Clause


@dataclass(frozen=True)
class ChoiceDecl:
    alternatives: tuple["DFormula", ...]


DFormula = Plain | ChoiceDecl


@dataclass(frozen=True)
class SourceProgram:
    decls: tuple[DFormula, ...]
    main: GoalStmt


# --- errors ----------------------------------------------------------------


class ParseError(Exception):
    """Lexical or syntactic rejection, with a 1-based line and column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# --- lexer -----------------------------------------------------------------

KEYWORDS = frozenset({"const", "proc", "choose", "main", "skip", "cond", "true", "false"})

INT_MAX = 2**63 - 1

_TWO_CHAR = ("==", "!=", "<=", ">=", "&&", "||", "->")
_ONE_CHAR = frozenset("{}();,|=<>+-*/!")

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "string", "eof", or the spelling itself
    value: object
    line: int
    col: int


def _is_ident_start(ch: str) -> bool:
    return ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def _is_ident_char(ch: str) -> bool:
    return _is_ident_start(ch) or ch.isdigit() or ch == "_"


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
        elif ch in " \t\r":
            i += 1
            col += 1
        elif source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
        elif _is_ident_start(ch):
            start, start_col = i, col
            while i < n and _is_ident_char(source[i]):
                i += 1
            word = source[start:i]
            col += i - start
            kind = word if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, line, start_col))
        elif ch.isdigit():
            start, start_col = i, col
            while i < n and source[i].isdigit():
                i += 1
            col += i - start
            if i < n and _is_ident_start(source[i]):
                raise ParseError("malformed number", line, col)
            value = int(source[start:i])
            if value > INT_MAX:
                raise ParseError("integer literal exceeds the signed 64-bit range", line, start_col)
            tokens.append(Token("int", value, line, start_col))
        elif ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            parts: list[str] = []
            while True:
                if i >= n or source[i] in "\n\r":
                    raise ParseError("unterminated string literal", start_line, start_col)
                c = source[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise ParseError("unterminated string literal", start_line, start_col)
                    esc = source[i + 1]
                    if esc not in _ESCAPES:
                        raise ParseError(f"unknown escape '\\{esc}'", line, col)
                    parts.append(_ESCAPES[esc])
                    i += 2
                    col += 2
                else:
                    parts.append(c)
                    i += 1
                    col += 1
            tokens.append(Token("string", "".join(parts), start_line, start_col))
        elif source[i : i + 2] in _TWO_CHAR:
            tokens.append(Token(source[i : i + 2], source[i : i + 2], line, col))
            i += 2
            col += 2
        elif ch in _ONE_CHAR:
            tokens.append(Token(ch, ch, line, col))
            i += 1
            col += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", None, line, col))
    return tokens


# --- parser ----------------------------------------------------------------

_COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")


def _describe(tok: Token) -> str:
    if tok.kind == "eof":
        return "end of file"
    if tok.kind == "ident":
        return f"identifier '{tok.value}'"
    if tok.kind == "int":
        return f"integer {tok.value}"
    if tok.kind == "string":
        return "string literal"
    return f"'{tok.kind}'"


class _Parser:
    def __init__(self, tokens: list[Token]):
        self._toks = tokens
        self._pos = 0
        # Constants already visible (any earlier declaration, including
        # alternatives of earlier choice declarations) and where each
        # procedure name was first declared.
        self._consts: set[str] = set()
        self._procs: dict[str, tuple[int, int]] = {}

    # token plumbing

    def _peek(self, ahead: int = 0) -> Token:
        return self._toks[min(self._pos + ahead, len(self._toks) - 1)]

    def _next(self) -> Token:
        tok = self._toks[self._pos]
        if tok.kind != "eof":
            self._pos += 1
        return tok

    def _check(self, kind: str) -> bool:
        return self._peek().kind == kind

    def _accept(self, kind: str) -> Token | None:
        if self._check(kind):
            return self._next()
        return None

    def _expect(self, kind: str, what: str | None = None) -> Token:
        tok = self._peek()
        if tok.kind != kind:
            wanted = what or f"'{kind}'"
            raise ParseError(f"expected {wanted}, found {_describe(tok)}", tok.line, tok.col)
        return self._next()

    # program structure

    def program(self) -> SourceProgram:
        decls: list[DFormula] = []
        while not self._check("main"):
            if self._check("eof"):
                tok = self._peek()
                raise ParseError("expected 'main' block", tok.line, tok.col)
            decls.append(self._decl())
        self._next()  # main
        self._expect("{")
        body = self._gstmt()
        self._expect("}")
        tok = self._peek()
        if tok.kind != "eof":
            raise ParseError(f"expected end of file, found {_describe(tok)}", tok.line, tok.col)
        return SourceProgram(tuple(decls), body)

    def _decl(self) -> DFormula:
        tok = self._peek()
        if tok.kind in ("const", "proc"):
            clause = self._clause()
            self._expect(";")
            decl: DFormula = Plain(clause)
        elif tok.kind == "choose":
            decl = self._choice_decl()
        else:
            raise ParseError(
                f"expected declaration or 'main', found {_describe(tok)}", tok.line, tok.col
            )
        self._consts |= _const_names(decl)
        return decl

    def _dform(self) -> DFormula:
        tok = self._peek()
        if tok.kind in ("const", "proc"):
            return Plain(self._clause())
        if tok.kind == "choose":
            return self._choice_decl()
        raise ParseError(f"expected declaration, found {_describe(tok)}", tok.line, tok.col)

    def _choice_decl(self) -> ChoiceDecl:
        opener = self._expect("choose")
        self._expect("{")
        alts = [self._dform()]
        while self._accept("|"):
            alts.append(self._dform())
        self._expect("}")
        if len(alts) < 2:
            raise ParseError(
                "choice declaration requires at least 2 alternatives", opener.line, opener.col
            )
        return ChoiceDecl(tuple(alts))

    def _clause(self) -> Clause:
        tok = self._next()  # const | proc, guaranteed by callers
        if tok.kind == "const":
            name_tok = self._expect("ident", "constant name")
            self._expect("==")
            value = self._expr()
            for ref in sorted(_free_vars(value)):
                if ref not in self._consts:
                    raise ParseError(
                        f"constant '{name_tok.value}' references undeclared constant '{ref}'",
                        name_tok.line,
                        name_tok.col,
                    )
            return ConstDecl(str(name_tok.value), value)
        name_tok = self._expect("ident", "procedure name")
        name = str(name_tok.value)
        if name in self._procs:
            first = self._procs[name]
            raise ParseError(
                f"duplicate procedure '{name}' (first declared at {first[0]}:{first[1]})",
                name_tok.line,
                name_tok.col,
            )
        self._procs[name] = (name_tok.line, name_tok.col)
        self._expect("(")
        params: list[str] = []
        if not self._check(")"):
            while True:
                p_tok = self._expect("ident", "parameter name")
                if p_tok.value in params:
                    raise ParseError(
                        f"duplicate parameter '{p_tok.value}'", p_tok.line, p_tok.col
                    )
                params.append(str(p_tok.value))
                if not self._accept(","):
                    break
        self._expect(")")
        self._expect("=")
        self._expect("{")
        body = self._gstmt()
        self._expect("}")
        return ProcDecl(name, tuple(params), body)

    # statements

    def _gstmt(self) -> GoalStmt:
        stmts = [self._simple()]
        while self._accept(";"):
            stmts.append(self._simple())
        goal = stmts[-1]
        for s in reversed(stmts[:-1]):
            goal = Seq(s, goal)
        return goal

    def _simple(self) -> GoalStmt:
        tok = self._peek()
        if tok.kind == "skip":
            self._next()
            return Skip()
        if tok.kind == "cond":
            self._next()
            self._expect("(")
            test = self._expr()
            self._expect(")")
            return Cond(test)
        if tok.kind == "choose":
            return self._choice_stmt()
        if tok.kind == "ident":
            self._next()
            follow = self._peek()
            if follow.kind == "(":
                self._next()
                args: list[Expr] = []
                if not self._check(")"):
                    while True:
                        args.append(self._expr())
                        if not self._accept(","):
                            break
                self._expect(")")
                return Call(str(tok.value), tuple(args), pos=(tok.line, tok.col))
            if follow.kind == "=":
                self._next()
                return Assign(str(tok.value), self._expr())
            raise ParseError(
                f"expected '=' or '(' after identifier, found {_describe(follow)}",
                follow.line,
                follow.col,
            )
        raise ParseError(f"expected statement, found {_describe(tok)}", tok.line, tok.col)

    def _choice_stmt(self) -> Choice:
        self._expect("choose")
        self._expect("{")
        branches = [self._branch()]
        while self._accept("|"):
            branches.append(self._branch())
        self._expect("}")
        return Choice(tuple(branches))

    def _branch(self) -> Branch:
        guard = self._expr()
        self._expect("->")
        return Branch(guard, self._gstmt())

    # expressions, lowest precedence first

    def _expr(self) -> Expr:
        return self._or()

    def _or(self) -> Expr:
        left = self._and()
        while self._accept("||"):
            left = Binary("||", left, self._and())
        return left

    def _and(self) -> Expr:
        left = self._cmp()
        while self._accept("&&"):
            left = Binary("&&", left, self._cmp())
        return left

    def _cmp(self) -> Expr:
        left = self._add()
        while self._peek().kind in _COMPARISONS:
            op = self._next().kind
            left = Binary(op, left, self._add())
        return left

    def _add(self) -> Expr:
        left = self._mul()
        while self._peek().kind in ("+", "-"):
            op = self._next().kind
            left = Binary(op, left, self._mul())
        return left

    def _mul(self) -> Expr:
        left = self._unary()
        while self._peek().kind in ("*", "/"):
            op = self._next().kind
            left = Binary(op, left, self._unary())
        return left

    def _unary(self) -> Expr:
        tok = self._peek()
        if tok.kind in ("!", "-"):
            self._next()
            return Unary(tok.kind, self._unary())
        return self._primary()

    def _primary(self) -> Expr:
        tok = self._next()
        if tok.kind == "int":
            return IntLit(int(tok.value))  # type: ignore[arg-type]
        if tok.kind == "string":
            return StrLit(str(tok.value))
        if tok.kind in ("true", "false"):
            return BoolLit(tok.kind == "true")
        if tok.kind == "ident":
            return Var(str(tok.value))
        if tok.kind == "(":
            inner = self._expr()
            self._expect(")")
            return inner
        raise ParseError(f"expected expression, found {_describe(tok)}", tok.line, tok.col)


def parse_program(source: str) -> SourceProgram:
    """Parse a whole program, raising ParseError on the first defect."""
    return _Parser(tokenize(source)).program()


def _free_vars(expr: Expr) -> set[str]:
    match expr:
        case Var(name):
            return {name}
        case Binary(_, lhs, rhs):
            return _free_vars(lhs) | _free_vars(rhs)
        case Unary(_, operand):
            return _free_vars(operand)
        case _:
            return set()


def _const_names(decl: DFormula) -> set[str]:
    if isinstance(decl, Plain):
        if isinstance(decl.clause, ConstDecl):
            return {decl.clause.name}
        return set()
    names: set[str] = set()
    for alt in decl.alternatives:
        names |= _const_names(alt)
    return names


# --- formatter -------------------------------------------------------------

_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 3,
    "<=": 3,
    ">": 3,
    ">=": 3,
    "+": 4,
    "-": 4,
    "*": 5,
    "/": 5,
}
_UNARY_PREC = 6

_IND = "  "


def _quote(s: str) -> str:
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def format_expr(expr: Expr) -> str:
    """Render an expression with the fewest parentheses that reparse equal."""
    return _fmt_expr(expr, 0, False)


def _fmt_expr(expr: Expr, parent_prec: int, is_right: bool) -> str:
    match expr:
        case IntLit(value):
            return str(value)
        case StrLit(value):
            return _quote(value)
        case BoolLit(value):
            return "true" if value else "false"
        case Var(name):
            return name
        case Unary(op, operand):
            text = op + _fmt_expr(operand, _UNARY_PREC, False)
            if _UNARY_PREC < parent_prec:
                return f"({text})"
            return text
        case Binary(op, lhs, rhs):
            prec = _PREC[op]
            text = f"{_fmt_expr(lhs, prec, False)} {op} {_fmt_expr(rhs, prec, True)}"
            if prec < parent_prec or (prec == parent_prec and is_right):
                return f"({text})"
            return text
    raise TypeError(f"not an expression: {expr!r}")


def _seq_list(goal: GoalStmt) -> list[GoalStmt]:
    parts: list[GoalStmt] = []
    while isinstance(goal, Seq):
        parts.append(goal.first)
        goal = goal.second
    parts.append(goal)
    return parts


def _simple_line(stmt: GoalStmt) -> str:
    match stmt:
        case Skip():
            return "skip"
        case Assign(target, value):
            return f"{target} = {format_expr(value)}"
        case Call(name, args):
            return f"{name}({', '.join(format_expr(a) for a in args)})"
        case Cond(test):
            return f"cond({format_expr(test)})"
    raise TypeError(f"not a one-line statement: {stmt!r}")


def format_goal(goal: GoalStmt) -> str:
    """One-line rendering of a statement, used inside prompts and traces."""
    if isinstance(goal, Seq):
        return "; ".join(format_goal(p) for p in _seq_list(goal))
    if isinstance(goal, Choice):
        inner = " | ".join(
            f"{format_expr(b.guard)} -> {format_goal(b.body)}" for b in goal.branches
        )
        return f"choose {{ {inner} }}"
    return _simple_line(goal)


def format_clause(clause: Clause) -> str:
    if isinstance(clause, ConstDecl):
        return f"const {clause.name} == {format_expr(clause.value)}"
    params = ", ".join(clause.params)
    return f"proc {clause.name}({params}) = {{ {format_goal(clause.body)} }}"


def format_dformula(decl: DFormula) -> str:
    """One-line rendering of a declaration, used for choice alternatives."""
    if isinstance(decl, Plain):
        return format_clause(decl.clause)
    inner = " | ".join(format_dformula(a) for a in decl.alternatives)
    return f"choose {{ {inner} }}"


def _stmt_lines(goal: GoalStmt, indent: int) -> list[str]:
    pad = _IND * indent
    if isinstance(goal, Seq):
        lines: list[str] = []
        parts = _seq_list(goal)
        for i, part in enumerate(parts):
            chunk = _stmt_lines(part, indent)
            if i < len(parts) - 1:
                chunk[-1] += ";"
            lines.extend(chunk)
        return lines
    if isinstance(goal, Choice):
        lines = [pad + "choose {"]
        for i, branch in enumerate(goal.branches):
            lines.extend(_branch_lines(branch, indent + 1, first=i == 0))
        lines.append(pad + "}")
        return lines
    return [pad + _simple_line(goal)]


def _branch_lines(branch: Branch, indent: int, first: bool) -> list[str]:
    pad = _IND * indent
    lead = "" if first else "| "
    head = f"{pad}{lead}{format_expr(branch.guard)} ->"
    if isinstance(branch.body, (Seq, Choice)):
        return [head] + _stmt_lines(branch.body, indent + 1)
    return [f"{head} {_simple_line(branch.body)}"]


def _dform_lines(decl: DFormula, indent: int, lead: str) -> list[str]:
    pad = _IND * indent
    if isinstance(decl, Plain):
        clause = decl.clause
        if isinstance(clause, ConstDecl):
            return [f"{pad}{lead}const {clause.name} == {format_expr(clause.value)}"]
        params = ", ".join(clause.params)
        lines = [f"{pad}{lead}proc {clause.name}({params}) = {{"]
        lines.extend(_stmt_lines(clause.body, indent + 1))
        lines.append(pad + "}")
        return lines
    lines = [f"{pad}{lead}choose {{"]
    for i, alt in enumerate(decl.alternatives):
        lines.extend(_dform_lines(alt, indent + 1, "" if i == 0 else "| "))
    lines.append(pad + "}")
    return lines


def pretty_print(program: SourceProgram) -> str:
    """Canonical multi-line rendering; parsing it back yields an equal AST."""
    lines: list[str] = []
    for decl in program.decls:
        chunk = _dform_lines(decl, 0, "")
        if isinstance(decl, Plain):
            chunk[-1] += ";"
        lines.extend(chunk)
    lines.append("main {")
    lines.extend(_stmt_lines(program.main, 1))
    lines.append("}")
    return "\n".join(lines) + "\n"
