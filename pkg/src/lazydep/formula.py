"""Propositional formulas over feature names.

Feature models are pairs (features, constraint) where the constraint is a
propositional formula whose variables are feature names.  This module owns
the formula AST, the concrete text syntax, evaluation, and the Tseitin-style
CNF encoding consumed by the solver.

Evaluation is closed-world: a product (a set of selected features) is read
as the assignment that makes exactly those features true and every other
name false.
"""

from __future__ import annotations

import itertools
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

RESERVED_WORDS = frozenset({"true", "false", "and", "or", "not", "impl"})

# Feature names may not start with '@'; the Tseitin encoder owns that prefix,
# which keeps auxiliary variables disjoint from every feature name.
AUX_PREFIX = "@aux/"

_FEATURE_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_:+./@-]*")


class InvalidFeatureName(ValueError):
    """A token that cannot be used as a feature name."""


def validate_feature_name(token: str) -> str:
    """Return the token unchanged if it is a legal feature name."""
    if not _FEATURE_RE.fullmatch(token):
        raise InvalidFeatureName(f"invalid feature name: {token!r}")
    if token in RESERVED_WORDS:
        raise InvalidFeatureName(f"reserved word used as feature name: {token!r}")
    return token


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    antecedent: "Formula"
    consequent: "Formula"


@dataclass(frozen=True)
class Const:
    value: bool


Formula = Var | Not | And | Or | Implies | Const

TRUE = Const(True)
FALSE = Const(False)


def conjoin(parts: Sequence[Formula]) -> Formula:
    """Left-fold a list of formulas into a conjunction; empty list is true."""
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disjoin(parts: Sequence[Formula]) -> Formula:
    """Left-fold a list of formulas into a disjunction; empty list is false."""
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def eval_formula(f: Formula, assignment) -> bool:
    """Evaluate under an assignment; unmapped names read as false.

    Accepts either a name->bool mapping or a set of the selected names.
    """
    if isinstance(assignment, Mapping):
        selected = {name for name, value in assignment.items() if value}
    else:
        selected = assignment
    return _eval(f, selected)


def _eval(f: Formula, selected) -> bool:
    if isinstance(f, Var):
        return f.name in selected
    if isinstance(f, Not):
        return not _eval(f.operand, selected)
    if isinstance(f, And):
        return _eval(f.left, selected) and _eval(f.right, selected)
    if isinstance(f, Or):
        return _eval(f.left, selected) or _eval(f.right, selected)
    if isinstance(f, Implies):
        return (not _eval(f.antecedent, selected)) or _eval(f.consequent, selected)
    if isinstance(f, Const):
        return f.value
    raise TypeError(f"not a formula node: {f!r}")


def free_features(f: Formula) -> frozenset[str]:
    """The set of variable names occurring in the formula."""
    out: set[str] = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Implies):
            stack.append(node.antecedent)
            stack.append(node.consequent)
    return frozenset(out)


def rename_features(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rebuild the formula with variable names substituted via the mapping."""
    if isinstance(f, Var):
        new = mapping.get(f.name, f.name)
        return Var(validate_feature_name(new))
    if isinstance(f, Not):
        return Not(rename_features(f.operand, mapping))
    if isinstance(f, And):
        return And(rename_features(f.left, mapping), rename_features(f.right, mapping))
    if isinstance(f, Or):
        return Or(rename_features(f.left, mapping), rename_features(f.right, mapping))
    if isinstance(f, Implies):
        return Implies(
            rename_features(f.antecedent, mapping),
            rename_features(f.consequent, mapping),
        )
    return f


@dataclass(frozen=True)
class PropFM:
    """A feature model in propositional form: declared features plus a constraint.

    Features may be unconstrained, but the constraint may not mention names
    outside the declared set.
    """

    features: frozenset[str]
    constraint: Formula

    def __post_init__(self):
        object.__setattr__(self, "features", frozenset(self.features))
        extra = free_features(self.constraint) - self.features
        if extra:
            raise ValueError(
                f"constraint mentions undeclared features: {sorted(extra)}"
            )


# ---------------------------------------------------------------------------
# Concrete syntax
#
#   formula := impl
#   impl    := or ("->" impl)?            right-associative
#   or      := and ("|" and)*             left-associative
#   and     := unary ("&" unary)*         left-associative
#   unary   := "!" unary | "(" formula ")" | "true" | "false" | FEATURE
#
# Whitespace is insignificant; '#' starts a comment running to end of line.
# A '-' immediately followed by '>' always lexes as the implication arrow,
# never as part of a feature name.
# ---------------------------------------------------------------------------

class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.offset = len(text[:pos].encode("utf-8"))
        super().__init__(f"{message} (at byte {self.offset})")


_TOKEN_RE = re.compile(
    r"""\s+
      | \#[^\n]*
      | (?P<impl>->)
      | (?P<not>!)
      | (?P<and>&)
      | (?P<or>\|)
      | (?P<lparen>\()
      | (?P<rparen>\))
      | (?P<name>[A-Za-z0-9_](?:[A-Za-z0-9_:+./@]|-(?!>))*)
    """,
    re.VERBOSE,
)


def _lex(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        if m.lastgroup is not None:
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str):
        tok = self.take()
        if tok[0] != kind:
            raise FormulaSyntaxError(
                f"expected {kind}, found {tok[1]!r}", self.text, tok[2]
            )
        return tok

    def impl(self) -> Formula:
        left = self.disj()
        if self.peek()[0] == "impl":
            self.take()
            return Implies(left, self.impl())
        return left

    def disj(self) -> Formula:
        out = self.conj()
        while self.peek()[0] == "or":
            self.take()
            out = Or(out, self.conj())
        return out

    def conj(self) -> Formula:
        out = self.unary()
        while self.peek()[0] == "and":
            self.take()
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        kind, value, pos = self.take()
        if kind == "not":
            return Not(self.unary())
        if kind == "lparen":
            inner = self.impl()
            self.expect("rparen")
            return inner
        if kind == "name":
            if value == "true":
                return TRUE
            if value == "false":
                return FALSE
            if value in RESERVED_WORDS:
                raise FormulaSyntaxError(
                    f"reserved word {value!r} used as feature name", self.text, pos
                )
            return Var(value)
        raise FormulaSyntaxError(f"unexpected token {value!r}", self.text, pos)


def parse_formula(text: str) -> Formula:
    parser = _Parser(text)
    f = parser.impl()
    kind, value, pos = parser.peek()
    if kind != "eof":
        raise FormulaSyntaxError(f"trailing input {value!r}", text, pos)
    return f


# Node precedence for the printer; children with lower precedence than the
# printing context get parenthesized, so parse(format(f)) == f structurally.
_PREC_IMPL, _PREC_OR, _PREC_AND, _PREC_UNARY, _PREC_ATOM = 1, 2, 3, 4, 5


def format_formula(f: Formula) -> str:
    return _fmt(f, _PREC_IMPL)


def _fmt(f: Formula, min_prec: int) -> str:
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return _wrap(f"!{_fmt(f.operand, _PREC_UNARY)}", _PREC_UNARY, min_prec)
    if isinstance(f, And):
        s = f"{_fmt(f.left, _PREC_AND)} & {_fmt(f.right, _PREC_AND + 1)}"
        return _wrap(s, _PREC_AND, min_prec)
    if isinstance(f, Or):
        s = f"{_fmt(f.left, _PREC_OR)} | {_fmt(f.right, _PREC_OR + 1)}"
        return _wrap(s, _PREC_OR, min_prec)
    s = f"{_fmt(f.antecedent, _PREC_IMPL + 1)} -> {_fmt(f.consequent, _PREC_IMPL)}"
    return _wrap(s, _PREC_IMPL, min_prec)


def _wrap(s: str, prec: int, min_prec: int) -> str:
    return s if prec >= min_prec else f"({s})"


# ---------------------------------------------------------------------------
# CNF encoding
# ---------------------------------------------------------------------------

Literal = tuple[str, bool]  # (variable name, is_positive)


@dataclass(frozen=True)
class ClauseSet:
    """CNF clauses over feature and auxiliary variables.

    Equisatisfiable with the source formula: its models, projected to the
    feature variables, are exactly the models of the source.
    """

    clauses: tuple[tuple[Literal, ...], ...]
    var_kind: Mapping[str, str]  # "feature" | "auxiliary"


def fold_constants(f: Formula) -> Formula:
    """Eliminate Const nodes; the result is Const or Const-free."""
    if isinstance(f, (Var, Const)):
        return f
    if isinstance(f, Not):
        g = fold_constants(f.operand)
        if isinstance(g, Const):
            return Const(not g.value)
        return Not(g)
    if isinstance(f, And):
        a, b = fold_constants(f.left), fold_constants(f.right)
        if a == FALSE or b == FALSE:
            return FALSE
        if a == TRUE:
            return b
        if b == TRUE:
            return a
        return And(a, b)
    if isinstance(f, Or):
        a, b = fold_constants(f.left), fold_constants(f.right)
        if a == TRUE or b == TRUE:
            return TRUE
        if a == FALSE:
            return b
        if b == FALSE:
            return a
        return Or(a, b)
    a, b = fold_constants(f.antecedent), fold_constants(f.consequent)
    if a == FALSE or b == TRUE:
        return TRUE
    if a == TRUE:
        return b
    if b == FALSE:
        return Not(a)
    return Implies(a, b)


def to_cnf(f: Formula) -> ClauseSet:
    """Tseitin-style encoding; clause count is linear in the AST size.

    Leaf variables encode as themselves and negations fold into literals, so
    auxiliary variables are introduced only for binary connectives.
    """
    g = fold_constants(f)
    if g == TRUE:
        return ClauseSet((), {})
    if g == FALSE:
        return ClauseSet(((),), {})

    var_kind = {name: "feature" for name in free_features(g)}
    clauses: list[tuple[Literal, ...]] = []
    counter = itertools.count()

    def fresh() -> str:
        name = f"{AUX_PREFIX}{next(counter)}"
        var_kind[name] = "auxiliary"
        return name

    def enc(node: Formula) -> Literal:
        if isinstance(node, Var):
            return (node.name, True)
        if isinstance(node, Not):
            name, positive = enc(node.operand)
            return (name, not positive)
        la = enc(node.left if not isinstance(node, Implies) else node.antecedent)
        lb = enc(node.right if not isinstance(node, Implies) else node.consequent)
        x = fresh()
        pos, neg = (x, True), (x, False)
        na, nb = (la[0], not la[1]), (lb[0], not lb[1])
        if isinstance(node, And):
            clauses.append((neg, la))
            clauses.append((neg, lb))
            clauses.append((pos, na, nb))
        elif isinstance(node, Or):
            clauses.append((neg, la, lb))
            clauses.append((pos, na))
            clauses.append((pos, nb))
        else:  # Implies: x <-> (la -> lb)
            clauses.append((neg, na, lb))
            clauses.append((pos, la))
            clauses.append((pos, nb))
        return pos

    root = enc(g)
    clauses.append((root,))
    return ClauseSet(tuple(clauses), var_kind)
