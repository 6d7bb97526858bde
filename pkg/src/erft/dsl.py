"""Parser and canonical serializer for ``.ifc`` circuit files.

Grammar::

    circuit := "circuit" IDENT "{" stmt* "}"
    stmt    := "modes" IDENT ("," IDENT)* ";"
             | "source" "excite" IDENT ";"
             | "bs" IDENT IDENT ";"
             | "phase" IDENT ("0" | "pi") ";"
             | "measure" IDENT ("nondestructive" | "destructive") ";"
             | "block" IDENT ";"
             | "divert" IDENT ";"
             | "fresh" IDENT ";"
             | "detect" IDENT ("," IDENT)* ";"

``#`` starts a comment running to end of line.  A ``# block`` comment on
the same line as ``measure m destructive;`` restores the block sugar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from erft.circuit import (
    BS,
    Circuit,
    Detect,
    Divert,
    Fresh,
    Measure,
    Phase,
    PI,
    Source,
)

KEYWORDS = ("modes", "source", "bs", "phase", "measure", "block", "divert", "fresh", "detect")
IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
RESERVED = frozenset(KEYWORDS) | {"circuit", "excite", "nondestructive", "destructive", "pi"}
BLOCK_MARK = "block"

_TOKEN = re.compile(r"(?P<ws>[ \t\r\n]+)|(?P<comment>#[^\n]*)|(?P<punct>[{},;])|(?P<word>[^\s{},;#]+)")


class ParseError(Exception):
    def __init__(self, line: int, column: int, message: str, expected: frozenset[str] = frozenset()):
        self.line = line
        self.column = column
        self.message = message
        self.expected = expected
        super().__init__(f"{line}:{column}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # "word", "punct", "eof"
    text: str
    line: int
    column: int


def tokenize(text: str) -> tuple[list[Token], dict[int, str]]:
    """Split into tokens; comments are returned separately keyed by line."""
    tokens: list[Token] = []
    comments: dict[int, str] = {}
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:  # pragma: no cover - every char matches one branch
            raise ParseError(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")
        kind = mt.lastgroup
        value = mt.group()
        if kind == "comment":
            comments[line] = value[1:].strip()
        elif kind in ("punct", "word"):
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = mt.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens, comments


class _Parser:
    def __init__(self, text: str):
        self.tokens, self.comments = tokenize(text)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def fail(self, tok: Token, message: str, expected) -> ParseError:
        return ParseError(tok.line, tok.column, message, frozenset(expected))

    def expect(self, *texts: str) -> Token:
        tok = self.peek()
        if tok.text not in texts or tok.kind == "eof":
            want = " or ".join(repr(t) for t in texts)
            got = repr(tok.text) if tok.kind != "eof" else "end of input"
            raise self.fail(tok, f"expected {want}, got {got}", texts)
        self.pos += 1
        return tok

    def ident(self) -> str:
        tok = self.peek()
        if tok.kind != "word" or not IDENT.match(tok.text) or tok.text in RESERVED:
            got = repr(tok.text) if tok.kind != "eof" else "end of input"
            raise self.fail(tok, f"expected identifier, got {got}", {"IDENT"})
        self.pos += 1
        return tok.text

    def ident_list(self) -> list[str]:
        names = [self.ident()]
        while self.peek().text == ",":
            self.pos += 1
            names.append(self.ident())
        return names

    def circuit(self) -> Circuit:
        self.expect("circuit")
        name = self.ident()
        self.expect("{")
        modes: list[str] = []
        elements = []
        while self.peek().text != "}":
            tok = self.peek()
            if tok.kind == "eof":
                raise self.fail(tok, "expected statement or '}', got end of input", set(KEYWORDS) | {"}"})
            if tok.text not in KEYWORDS:
                raise self.fail(tok, f"unknown keyword {tok.text!r}", set(KEYWORDS) | {"}"})
            self.pos += 1
            kw = tok.text
            if kw == "modes":
                for m_tok_index, m in zip(range(self.pos, len(self.tokens), 2), self.ident_list()):
                    if m in modes:
                        t = self.tokens[m_tok_index]
                        raise ParseError(t.line, t.column, f"duplicate mode declaration {m!r}")
                    modes.append(m)
            elif kw == "source":
                self.expect("excite")
                elements.append(Source(self.ident()))
            elif kw == "bs":
                elements.append(BS(self.ident(), self.ident()))
            elif kw == "phase":
                m = self.ident()
                arg = self.peek()
                if arg.text == "0":
                    phi = 0.0
                elif arg.text == "pi":
                    phi = PI
                else:
                    got = repr(arg.text) if arg.kind != "eof" else "end of input"
                    raise self.fail(arg, f"unsupported phase {got}; only 0 and pi are allowed", {"0", "pi"})
                self.pos += 1
                elements.append(Phase(m, phi))
            elif kw == "measure":
                m = self.ident()
                flavour = self.expect("nondestructive", "destructive").text
                elements.append(Measure(m, destructive=flavour == "destructive"))
            elif kw == "block":
                elements.append(Measure(self.ident(), destructive=True, block=True))
            elif kw == "divert":
                elements.append(Divert(self.ident()))
            elif kw == "fresh":
                elements.append(Fresh(self.ident()))
            elif kw == "detect":
                elements.append(Detect(tuple(self.ident_list())))
            end = self.expect(";")
            if kw == "measure" and elements[-1].destructive and self.comments.get(end.line) == BLOCK_MARK:
                elements[-1] = Measure(elements[-1].mode, destructive=True, block=True)
        self.expect("}")
        tail = self.peek()
        if tail.kind != "eof":
            raise self.fail(tail, f"unexpected {tail.text!r} after circuit", {"end of input"})
        return Circuit(name, tuple(modes), tuple(elements))


def parse(text: str) -> Circuit:
    """Parse circuit text; raises :class:`ParseError` at the first syntax error."""
    return _Parser(text).circuit()


def _stmt(e) -> str:
    if isinstance(e, Source):
        return f"source excite {e.mode};"
    if isinstance(e, BS):
        return f"bs {e.i} {e.j};"
    if isinstance(e, Phase):
        if e.phi == 0:
            arg = "0"
        elif e.phi == PI:
            arg = "pi"
        else:
            raise ValueError(f"phase {e.phi!r} has no textual form")
        return f"phase {e.mode} {arg};"
    if isinstance(e, Measure):
        text = f"measure {e.mode} {'destructive' if e.destructive else 'nondestructive'};"
        return text + f"  # {BLOCK_MARK}" if e.block and e.destructive else text
    if isinstance(e, Divert):
        return f"divert {e.mode};"
    if isinstance(e, Fresh):
        return f"fresh {e.mode};"
    if isinstance(e, Detect):
        return f"detect {', '.join(e.targets)};"
    raise TypeError(f"not a circuit element: {e!r}")


def serialize(c: Circuit) -> str:
    lines = [f"circuit {c.name} {{"]
    if c.modes:
        lines.append(f"  modes {', '.join(c.modes)};")
    lines.extend("  " + _stmt(e) for e in c.elements)
    lines.append("}")
    return "\n".join(lines) + "\n"


def load(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
