#!/usr/bin/env python3
"""
Line-oriented tokenizer for taskdl

Each non-blank line becomes a ``Line`` of tokens. A line whose first token
starts in column 1 opens a top-level block; indented lines belong to the
block above them.
"""
import re
from dataclasses import dataclass
from typing import List, Tuple

from ..errors import Diagnostic

NUMBER = "NUMBER"
NAME = "NAME"
STRING = "STRING"
OP = "OP"
END = "END"

# Longest operators first so "<-" wins over "<"
_OPERATORS = (
    "<-", "<=", ">=", "==", "!=", "+-", "**",
    "<", ">", "+", "-", "*", "/", "^", "(", ")", "[", "]", ",", "=", "~",
)
_ALIASES = {
    "←": "<-",
    "±": "+-",
    "×": "*",
    "·": "*",
    "÷": "/",
    "−": "-",
    "≤": "<=",
    "≥": ">=",
    "≠": "!=",
}

_NUMBER_RE = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_STRING_RE = re.compile(r'"((?:[^"\\\n]|\\.)*)"')


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    @property
    def position(self) -> Tuple[int, int]:
        return (self.line, self.column)


@dataclass(frozen=True)
class Line:
    number: int
    tokens: Tuple[Token, ...]
    indented: bool


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", r"\1", body)


def tokenize(text: str) -> Tuple[List[Line], List[Diagnostic]]:
    """Split source text into lines of tokens

    Returns:
        The token lines and any lexical diagnostics; lines with a lexical
        error are dropped from the result.
    """
    lines: List[Line] = []
    diagnostics: List[Diagnostic] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        tokens: List[Token] = []
        pos = 0
        bad = False
        while pos < len(raw):
            ch = raw[pos]
            column = pos + 1
            if ch in " \t\r\f\v\ufeff":
                pos += 1
                continue
            if ch == "#":
                break
            if ch == "δ":
                tokens.append(Token(NAME, "delta", number, column))
                pos += 1
                continue
            if ch in _ALIASES:
                tokens.append(Token(OP, _ALIASES[ch], number, column))
                pos += 1
                continue
            match = _NUMBER_RE.match(raw, pos)
            if match:
                tokens.append(Token(NUMBER, match.group(0), number, column))
                pos = match.end()
                continue
            match = _NAME_RE.match(raw, pos)
            if match:
                tokens.append(Token(NAME, match.group(0), number, column))
                pos = match.end()
                continue
            if ch == '"':
                match = _STRING_RE.match(raw, pos)
                if not match:
                    diagnostics.append(
                        Diagnostic(number, column, "unterminated string")
                    )
                    bad = True
                    break
                tokens.append(Token(STRING, _unescape(match.group(1)), number, column))
                pos = match.end()
                continue
            for op in _OPERATORS:
                if raw.startswith(op, pos):
                    tokens.append(Token(OP, op, number, column))
                    pos += len(op)
                    break
            else:
                diagnostics.append(
                    Diagnostic(number, column, f"unexpected character {ch!r}")
                )
                bad = True
                break
        if tokens and not bad:
            indented = tokens[0].column > 1
            lines.append(Line(number, tuple(tokens), indented))
    return lines, diagnostics
