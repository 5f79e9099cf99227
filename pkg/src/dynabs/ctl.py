"""CTL over transition-system cells: parser and fixpoint model checker.

Grammar (precedence low to high, whitespace insensitive)::

    formula ::= formula '|' formula
              | formula '&' formula
              | '!' formula
              | 'EX' formula | 'AX' formula
              | 'EF' formula | 'AF' formula
              | 'EG' formula | 'AG' formula
              | 'E' '[' formula 'U' formula ']'
              | 'A' '[' formula 'U' formula ']'
              | 'Q' int | 'EXIT' | 'true' | '(' formula ')'

Atoms are cell identities (Q1 is the first cell) plus the EXIT sink. The
relation is total by construction, so EX/AX need no deadlock convention.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .abstraction import TransitionSystem


class CtlSyntaxError(ValueError):
    """Formula text rejected, with the offending position."""


class CtlFormula:
    """Base class for formula AST nodes."""


@dataclass(frozen=True)
class TrueF(CtlFormula):
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class CellAtom(CtlFormula):
    index: int

    def __str__(self):
        return f"Q{self.index}"


@dataclass(frozen=True)
class ExitAtom(CtlFormula):
    def __str__(self):
        return "EXIT"


@dataclass(frozen=True)
class Not(CtlFormula):
    arg: CtlFormula

    def __str__(self):
        return f"!{self.arg}"


@dataclass(frozen=True)
class And(CtlFormula):
    left: CtlFormula
    right: CtlFormula

    def __str__(self):
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class Or(CtlFormula):
    left: CtlFormula
    right: CtlFormula

    def __str__(self):
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class Unary(CtlFormula):
    op: str  # EX AX EF AF EG AG
    arg: CtlFormula

    def __str__(self):
        return f"{self.op} {self.arg}"


@dataclass(frozen=True)
class Until(CtlFormula):
    quantifier: str  # E or A
    left: CtlFormula
    right: CtlFormula

    def __str__(self):
        return f"{self.quantifier}[{self.left} U {self.right}]"


_TOKEN = re.compile(r"\s*(?:(Q\d+)|([A-Za-z]+)|([&|!()\[\]]))")
_UNARY_OPS = {"EX", "AX", "EF", "AF", "EG", "AG"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise CtlSyntaxError(f"unexpected character {text[pos]!r} at position {pos}")
        if m.group(1):
            tokens.append(("ATOM", m.group(1), m.start(1)))
        elif m.group(2):
            tokens.append(("NAME", m.group(2), m.start(2)))
        else:
            tokens.append(("PUNCT", m.group(3), m.start(3)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise CtlSyntaxError(f"unexpected end of formula at position {len(self.text)}")
        self.i += 1
        return tok

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value:
            raise CtlSyntaxError(f"expected {value!r} but found {tok[1]!r} at position {tok[2]}")

    def parse(self) -> CtlFormula:
        f = self.parse_or()
        tok = self.peek()
        if tok is not None:
            raise CtlSyntaxError(f"trailing input {tok[1]!r} at position {tok[2]}")
        return f

    def parse_or(self) -> CtlFormula:
        f = self.parse_and()
        while self.peek() and self.peek()[1] == "|":
            self.take()
            f = Or(f, self.parse_and())
        return f

    def parse_and(self) -> CtlFormula:
        f = self.parse_unary()
        while self.peek() and self.peek()[1] == "&":
            self.take()
            f = And(f, self.parse_unary())
        return f

    def parse_unary(self) -> CtlFormula:
        tok = self.peek()
        if tok is None:
            raise CtlSyntaxError(f"unexpected end of formula at position {len(self.text)}")
        kind, value, pos = tok
        if value == "!":
            self.take()
            return Not(self.parse_unary())
        if kind == "NAME" and value in _UNARY_OPS:
            self.take()
            return Unary(value, self.parse_unary())
        if kind == "NAME" and value in ("E", "A"):
            self.take()
            self.expect("[")
            left = self.parse_or()
            tok = self.take()
            if tok[1] != "U":
                raise CtlSyntaxError(f"expected 'U' in until at position {tok[2]}")
            right = self.parse_or()
            self.expect("]")
            return Until(value, left, right)
        return self.parse_primary()

    def parse_primary(self) -> CtlFormula:
        kind, value, pos = self.take()
        if kind == "ATOM":
            return CellAtom(int(value[1:]))
        if kind == "NAME":
            if value == "true":
                return TrueF()
            if value == "EXIT":
                return ExitAtom()
            raise CtlSyntaxError(f"unknown name {value!r} at position {pos}")
        if value == "(":
            f = self.parse_or()
            self.expect(")")
            return f
        raise CtlSyntaxError(f"unexpected token {value!r} at position {pos}")


def parse_ctl(text: str) -> CtlFormula:
    """Parse a formula in the module grammar; raises CtlSyntaxError."""
    return _Parser(text).parse()


def _pre_exists(relation: np.ndarray, z: np.ndarray) -> np.ndarray:
    """States with at least one successor in z."""
    return (relation & z[None, :]).any(axis=1)


def _sat(ts: TransitionSystem, f: CtlFormula) -> np.ndarray:
    n = ts.n_states
    r = ts.relation
    if isinstance(f, TrueF):
        return np.ones(n, dtype=bool)
    if isinstance(f, CellAtom):
        if not 1 <= f.index <= ts.n_cells:
            raise ValueError(f"atom Q{f.index} out of range: system has cells Q1..Q{ts.n_cells}")
        v = np.zeros(n, dtype=bool)
        v[f.index - 1] = True
        return v
    if isinstance(f, ExitAtom):
        v = np.zeros(n, dtype=bool)
        v[n - 1] = True
        return v
    if isinstance(f, Not):
        return ~_sat(ts, f.arg)
    if isinstance(f, And):
        return _sat(ts, f.left) & _sat(ts, f.right)
    if isinstance(f, Or):
        return _sat(ts, f.left) | _sat(ts, f.right)
    if isinstance(f, Unary):
        z = _sat(ts, f.arg)
        if f.op == "EX":
            return _pre_exists(r, z)
        if f.op == "AX":
            return ~_pre_exists(r, ~z)
        if f.op == "EF":
            return _fix(lambda cur: z | _pre_exists(r, cur), z)
        if f.op == "EG":
            return _fix(lambda cur: z & _pre_exists(r, cur), z)
        if f.op == "AF":
            return ~_fix(lambda cur: ~z & _pre_exists(r, cur), ~z)  # !EG !z
        if f.op == "AG":
            return ~_fix(lambda cur: ~z | _pre_exists(r, cur), ~z)  # !EF !z
        raise AssertionError(f.op)
    if isinstance(f, Until):
        a = _sat(ts, f.left)
        b = _sat(ts, f.right)
        if f.quantifier == "E":
            return _fix(lambda cur: b | (a & _pre_exists(r, cur)), b)
        # A[a U b] = !(E[!b U (!a & !b)] | EG !b)
        bad_reach = _fix(lambda cur: (~a & ~b) | (~b & _pre_exists(r, cur)), ~a & ~b)
        bad_loop = _fix(lambda cur: ~b & _pre_exists(r, cur), ~b)
        return ~(bad_reach | bad_loop)
    raise TypeError(f"not a CTL formula node: {f!r}")


def _fix(step, start):
    """Iterate to a fixpoint; monotone steps converge within n_states rounds."""
    cur = start
    while True:
        nxt = step(cur)
        if np.array_equal(nxt, cur):
            return cur
        cur = nxt


def sat_set(ts: TransitionSystem, f: CtlFormula) -> set[int]:
    """1-based ids of states satisfying f; the exit sink's id is n_cells+1."""
    mask = _sat(ts, f)
    return {int(i) + 1 for i in np.nonzero(mask)[0]}


def check(ts: TransitionSystem, f: CtlFormula, initial: int) -> bool:
    """True iff the initial cell satisfies f."""
    if not 1 <= initial <= ts.n_cells:
        raise ValueError(f"initial cell id {initial} out of range 1..{ts.n_cells}")
    return bool(_sat(ts, f)[initial - 1])
