"""Text syntax for IA-STL specifications.

    input a in [-10, 10];
    output c in [-50, 50];
    formula: G (H[0,1] a >= 4 -> F[0,1] c >= 4)

Binding strength, loosest first: ``->`` (right associative), ``or``, ``and``,
binary ``U``/``S``, then the prefix operators ``not G F H P``.  Intervals are
``[a,b]`` or ``[a,inf)`` over naturals; omitted means ``[0,inf)``.  ``#``
starts a comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..predicates import Atom, PredicateError
from ..signals import Kind, SignalError, VariableProfile
from .formula import (FALSE, TRUE, Always, And, Eventually, Formula, FormulaError,
                      Historically, IaStlSpec, Implies, Interval, Not, Once, Or,
                      Pred, Since, Until)


class SpecSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>->|<=|>=|[<>()\[\],;:+\-*])
""", re.VERBOSE)

KEYWORDS = {"input", "output", "in", "formula", "not", "and", "or", "true", "false",
            "inf", "G", "F", "H", "P", "U", "S"}
_UNARY = {"G": Always, "F": Eventually, "H": Historically, "P": Once}
_BINARY = {"U": Until, "S": Since}


def tokenize(text: str) -> list[Token]:
    tokens, line, start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SpecSyntaxError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind == "ident":
            word = m.group()
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, line, pos - start + 1))
        elif kind in ("num", "op"):
            tokens.append(Token(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.idents: list[Token] = []

    # -- helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        return SpecSyntaxError(message, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("kw", "op")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.pos += 1
        return tok

    def number(self) -> float:
        sign = -1.0 if self.accept("-") else 1.0
        if self.tok.kind != "num":
            raise self.error("expected a number")
        value = float(self.tok.text)
        self.pos += 1
        return sign * value

    # -- declarations
    def spec(self) -> tuple[list[VariableProfile], Formula]:
        decls = []
        while self.at("input") or self.at("output"):
            kind = Kind.INPUT if self.tok.text == "input" else Kind.OUTPUT
            self.pos += 1
            name_tok = self.tok
            if name_tok.kind != "ident":
                raise self.error("expected a variable name")
            self.pos += 1
            self.expect("in")
            self.expect("[")
            lo = self.number()
            self.expect(",")
            hi = self.number()
            self.expect("]")
            self.expect(";")
            try:
                decls.append((VariableProfile(name_tok.text, kind, lo, hi), name_tok))
            except SignalError as exc:
                raise self.error(str(exc), name_tok) from None
        self.expect("formula")
        self.expect(":")
        phi = self.formula()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        seen = {}
        for var, tok in decls:
            if var.name in seen:
                raise self.error(f"variable {var.name!r} declared twice", tok)
            seen[var.name] = var
        return [v for v, _ in decls], phi

    # -- formulas
    def formula(self) -> Formula:
        left = self.disjunction()
        if self.accept("->"):
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.accept("or"):
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.binary()
        while self.accept("and"):
            left = And(left, self.binary())
        return left

    def binary(self) -> Formula:
        left = self.unary()
        while self.tok.kind == "kw" and self.tok.text in _BINARY:
            cls = _BINARY[self.tok.text]
            self.pos += 1
            interval = self.interval()
            left = cls(left, self.unary(), interval)
        return left

    def unary(self) -> Formula:
        if self.accept("not"):
            return Not(self.unary())
        if self.tok.kind == "kw" and self.tok.text in _UNARY:
            cls = _UNARY[self.tok.text]
            self.pos += 1
            interval = self.interval()
            return cls(self.unary(), interval)
        return self.primary()

    def interval(self) -> Interval:
        if not self.at("["):
            return Interval(0, None)
        start = self.tok
        self.pos += 1
        lo = self.natural()
        self.expect(",")
        if self.accept("inf"):
            if not (self.accept(")") or self.accept("]")):
                raise self.error("expected ')' after inf")
            return Interval(lo, None)
        hi = self.natural()
        self.expect("]")
        if hi < lo:
            raise self.error(f"malformed interval [{lo},{hi}]: lower bound exceeds upper", start)
        return Interval(lo, hi)

    def natural(self) -> int:
        tok = self.tok
        if tok.kind != "num" or not tok.text.isdigit():
            raise self.error("interval bounds must be natural numbers")
        self.pos += 1
        return int(tok.text)

    def primary(self) -> Formula:
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.at("("):
            saved = self.pos
            try:
                return self.comparison()
            except SpecSyntaxError:
                self.pos = saved
            self.expect("(")
            inner = self.formula()
            self.expect(")")
            return inner
        return self.comparison()

    def comparison(self) -> Formula:
        start = self.tok
        lhs, lconst = self.affine()
        if self.tok.text not in ("<", "<=", ">", ">=") or self.tok.kind != "op":
            raise self.error("expected a comparison operator")
        op = self.tok.text
        self.pos += 1
        rhs, rconst = self.affine()
        coeffs = dict(lhs)
        for k, c in rhs.items():
            coeffs[k] = coeffs.get(k, 0.0) - c
        const = lconst - rconst
        # normal form: expr > 0 or expr >= 0
        if op in ("<", "<="):
            coeffs = {k: -c for k, c in coeffs.items()}
            const = -const
        try:
            atom = Atom.make(coeffs, const, op in ("<", ">"))
        except PredicateError as exc:
            raise self.error(str(exc), start) from None
        return Pred(atom)

    def affine(self) -> tuple[dict[str, float], float]:
        coeffs: dict[str, float] = {}
        const = 0.0
        sign = -1.0 if self.accept("-") else 1.0
        while True:
            c, name = self.term()
            if name is None:
                const += sign * c
            else:
                coeffs[name] = coeffs.get(name, 0.0) + sign * c
            if self.accept("+"):
                sign = 1.0
            elif self.accept("-"):
                sign = -1.0
            else:
                return coeffs, const

    def term(self) -> tuple[float, str | None]:
        if self.tok.kind == "num":
            value = float(self.tok.text)
            self.pos += 1
            self.accept("*")
            if self.tok.kind == "ident":
                return value, self.ident()
            return value, None
        if self.tok.kind == "ident":
            return 1.0, self.ident()
        raise self.error("expected a number or variable")

    def ident(self) -> str:
        tok = self.tok
        self.idents.append(tok)
        self.pos += 1
        return tok.text


def parse_spec(text: str) -> IaStlSpec:
    """Parse declarations and formula; raise SpecSyntaxError with a position."""
    parser = _Parser(text)
    variables, phi = parser.spec()
    declared = {v.name for v in variables}
    for tok in parser.idents:
        if tok.text not in declared:
            raise SpecSyntaxError(f"undeclared variable {tok.text!r}", tok.line, tok.col)
    try:
        return IaStlSpec(tuple(v for v in variables if v.kind is Kind.INPUT),
                         tuple(v for v in variables if v.kind is Kind.OUTPUT), phi, source=text)
    except FormulaError as exc:
        raise SpecSyntaxError(str(exc)) from None


def parse_formula(text: str) -> Formula:
    """Parse a bare formula (no declarations, no variable checks)."""
    parser = _Parser(text)
    phi = parser.formula()
    if parser.tok.kind != "eof":
        raise parser.error(f"unexpected {parser.tok.text!r}")
    return phi


def load_spec(path) -> IaStlSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())
