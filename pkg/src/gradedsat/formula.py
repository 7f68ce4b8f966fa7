"""Formula AST for graded modal logic, its s-expression syntax, NNF and closure.

Two families of modal operators are supported:

* ``(ge rel n f)`` / ``(le rel n f)``: at least / at most ``n`` ``rel``-successors
  satisfy ``f``.  ``rel`` may be a relation name, an inverse ``(inv R)`` or an
  intersection ``(cap R (inv S) ...)``.
* ``(dia R n f)`` / ``(box R n f)``: the legacy operators, *more than* ``n``
  successors satisfy ``f`` / all but at most ``n`` successors satisfy ``f``.
  They are only understood by the legacy engine and by :func:`modernize`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

U64_MAX = 2**64 - 1

#: Reserved atom used for the contradiction that replaces ``not (ge R 0 f)``.
FALSE_ATOM = "p0__false"

_IDENT = re.compile(r"[a-zA-Z][a-zA-Z0-9_]*\Z")


class ParseError(ValueError):
    """Syntax error in formula text; carries a 1-based line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Relations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Name:
    r: str

    def __str__(self) -> str:
        return self.r


@dataclass(frozen=True, order=True)
class Inverse:
    r: str

    def __str__(self) -> str:
        return f"(inv {self.r})"


Directed = Union[Name, Inverse]


def _rel_key(d: Directed) -> tuple[str, int]:
    return (d.r, isinstance(d, Inverse))


@dataclass(frozen=True)
class Intersection:
    """Intersection of at least two distinct directed relations, sorted."""

    members: tuple[Directed, ...]

    def __str__(self) -> str:
        return "(cap " + " ".join(str(m) for m in self.members) + ")"


RelationExpr = Union[Name, Inverse, Intersection]


def inverse(d: Directed) -> Directed:
    return Name(d.r) if isinstance(d, Inverse) else Inverse(d.r)


def make_intersection(members: Iterable[RelationExpr]) -> RelationExpr:
    """Flatten, dedupe and sort; a single member collapses to itself."""
    flat: set[Directed] = set()
    for m in members:
        if isinstance(m, Intersection):
            flat.update(m.members)
        else:
            flat.add(m)
    if not flat:
        raise ValueError("empty intersection")
    ordered = tuple(sorted(flat, key=_rel_key))
    if len(ordered) == 1:
        return ordered[0]
    return Intersection(ordered)


def rel_members(rel: RelationExpr) -> frozenset[Directed]:
    """The set of directed relations an intersection is made of."""
    if isinstance(rel, Intersection):
        return frozenset(rel.members)
    return frozenset((rel,))


def invert_rel(rel: RelationExpr) -> RelationExpr:
    if isinstance(rel, Intersection):
        return make_intersection(inverse(m) for m in rel.members)
    return inverse(rel)


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Atom(Formula):
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, repr=False)
class Not(Formula):
    arg: Formula

    def __repr__(self) -> str:
        return f"Not({self.arg!r})"


@dataclass(frozen=True, repr=False)
class And(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"And({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Or(Formula):
    left: Formula
    right: Formula

    def __repr__(self) -> str:
        return f"Or({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Geq(Formula):
    rel: RelationExpr
    n: int
    arg: Formula

    def __repr__(self) -> str:
        return f"Geq({self.rel}, {self.n}, {self.arg!r})"


@dataclass(frozen=True, repr=False)
class Leq(Formula):
    rel: RelationExpr
    n: int
    arg: Formula

    def __repr__(self) -> str:
        return f"Leq({self.rel}, {self.n}, {self.arg!r})"


@dataclass(frozen=True, repr=False)
class Dia(Formula):
    """Legacy diamond: more than ``n`` successors satisfy ``arg``."""

    rel: Name
    n: int
    arg: Formula

    def __repr__(self) -> str:
        return f"Dia({self.rel}, {self.n}, {self.arg!r})"


@dataclass(frozen=True, repr=False)
class Box(Formula):
    """Legacy box: at most ``n`` successors falsify ``arg``."""

    rel: Name
    n: int
    arg: Formula

    def __repr__(self) -> str:
        return f"Box({self.rel}, {self.n}, {self.arg!r})"


Modal = (Geq, Leq, Dia, Box)
Graded = (Geq, Leq)
Legacy = (Dia, Box)


def conj(*fs: Formula) -> Formula:
    """Right-nested conjunction of one or more formulas."""
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = And(f, out)
    return out


# ---------------------------------------------------------------------------
# Parsing and printing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s+|#[^\n]*|\(|\)|[^\s()#]+")


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    tokens = []
    line, col_base = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        assert m is not None
        tok = m.group()
        if not tok[0].isspace() and tok[0] != "#":
            tokens.append((tok, line, pos - col_base + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            col_base = pos + tok.rindex("\n") + 1
        pos = m.end()
    tokens.append(("", line, pos - col_base + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, allow_reserved: bool):
        self.tokens = _tokenize(text)
        self.i = 0
        self.allow_reserved = allow_reserved

    def peek(self) -> tuple[str, int, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, int, int]:
        tok = self.tokens[self.i]
        if tok[0]:
            self.i += 1
        return tok

    def fail(self, msg: str, tok: tuple[str, int, int]):
        raise ParseError(msg, tok[1], tok[2])

    def expect(self, s: str) -> None:
        tok = self.take()
        if tok[0] != s:
            self.fail(f"expected {s!r}, got {tok[0] or 'end of input'!r}", tok)

    def ident(self, what: str) -> str:
        tok = self.take()
        if not _IDENT.match(tok[0]):
            self.fail(f"expected {what}, got {tok[0] or 'end of input'!r}", tok)
        return tok[0]

    def nat(self) -> int:
        tok = self.take()
        if not tok[0].isdigit() or not tok[0].isascii():
            self.fail(f"expected a natural number, got {tok[0] or 'end of input'!r}", tok)
        n = int(tok[0])
        if n > U64_MAX:
            self.fail("number does not fit in 64 bits", tok)
        return n

    def rel(self) -> RelationExpr:
        tok = self.peek()
        if tok[0] != "(":
            return Name(self.ident("relation name"))
        self.take()
        head = self.take()
        if head[0] == "inv":
            inner = self.rel()
            self.expect(")")
            return invert_rel(inner)
        if head[0] == "cap":
            members = [self.rel()]
            while self.peek()[0] not in (")", ""):
                members.append(self.rel())
            self.expect(")")
            return make_intersection(members)
        self.fail(f"expected 'inv' or 'cap', got {head[0] or 'end of input'!r}", head)

    def formula(self) -> Formula:
        tok = self.take()
        if tok[0] != "(":
            if not _IDENT.match(tok[0]):
                self.fail(f"expected a formula, got {tok[0] or 'end of input'!r}", tok)
            if tok[0] == FALSE_ATOM and not self.allow_reserved:
                self.fail(f"atom {FALSE_ATOM!r} is reserved", tok)
            return Atom(tok[0])
        head = self.take()
        op = head[0]
        if op == "not":
            f: Formula = Not(self.formula())
        elif op in ("and", "or"):
            left = self.formula()
            right = self.formula()
            f = And(left, right) if op == "and" else Or(left, right)
        elif op in ("ge", "le"):
            rel = self.rel()
            n = self.nat()
            body = self.formula()
            f = Geq(rel, n, body) if op == "ge" else Leq(rel, n, body)
        elif op in ("dia", "box"):
            rel = Name(self.ident("relation name"))
            n = self.nat()
            body = self.formula()
            f = Dia(rel, n, body) if op == "dia" else Box(rel, n, body)
        else:
            self.fail(f"unknown operator {op or 'end of input'!r}", head)
        self.expect(")")
        return f


def parse(text: str, *, allow_reserved: bool = False) -> Formula:
    """Parse one formula; ``#`` starts a comment running to end of line."""
    p = _Parser(text, allow_reserved)
    f = p.formula()
    tok = p.peek()
    if tok[0]:
        p.fail(f"trailing input {tok[0]!r}", tok)
    return f


def to_text(f: Formula) -> str:
    parts: list[str] = []
    _emit(f, parts)
    return "".join(parts)


def _emit(f: Formula, out: list[str]) -> None:
    if isinstance(f, Atom):
        out.append(f.name)
    elif isinstance(f, Not):
        out.append("(not ")
        _emit(f.arg, out)
        out.append(")")
    elif isinstance(f, (And, Or)):
        out.append("(and " if isinstance(f, And) else "(or ")
        _emit(f.left, out)
        out.append(" ")
        _emit(f.right, out)
        out.append(")")
    else:
        kw = {Geq: "ge", Leq: "le", Dia: "dia", Box: "box"}[type(f)]
        out.append(f"({kw} {f.rel} {f.n} ")
        _emit(f.arg, out)
        out.append(")")


# ---------------------------------------------------------------------------
# Transformations
# ---------------------------------------------------------------------------


def modernize(f: Formula) -> Formula:
    """Replace legacy operators: dia n -> ge n+1, box n g -> le n (not g)."""
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(modernize(f.arg))
    if isinstance(f, And):
        return And(modernize(f.left), modernize(f.right))
    if isinstance(f, Or):
        return Or(modernize(f.left), modernize(f.right))
    if isinstance(f, Dia):
        return Geq(f.rel, f.n + 1, modernize(f.arg))
    if isinstance(f, Box):
        return Leq(f.rel, f.n, Not(modernize(f.arg)))
    return type(f)(f.rel, f.n, modernize(f.arg))


_FALSE = And(Atom(FALSE_ATOM), Not(Atom(FALSE_ATOM)))


def to_nnf(f: Formula) -> Formula:
    """Push negations down to atoms.

    Legacy operators are handled too (their own dualities), so the legacy
    engine can share this; graded formulas must not mix them in practice.
    """
    if isinstance(f, Not):
        return neg_nnf(to_nnf(f.arg))
    if isinstance(f, Atom):
        return f
    if isinstance(f, And):
        return And(to_nnf(f.left), to_nnf(f.right))
    if isinstance(f, Or):
        return Or(to_nnf(f.left), to_nnf(f.right))
    return type(f)(f.rel, f.n, to_nnf(f.arg))


def neg_nnf(f: Formula) -> Formula:
    """The NNF of ``not f`` for ``f`` already in NNF."""
    if isinstance(f, Atom):
        return Not(f)
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, And):
        return Or(neg_nnf(f.left), neg_nnf(f.right))
    if isinstance(f, Or):
        return And(neg_nnf(f.left), neg_nnf(f.right))
    if isinstance(f, Geq):
        if f.n == 0:
            return _FALSE
        return Leq(f.rel, f.n - 1, f.arg)
    if isinstance(f, Leq):
        return Geq(f.rel, f.n + 1, f.arg)
    if isinstance(f, Dia):
        return Box(f.rel, f.n, neg_nnf(f.arg))
    if isinstance(f, Box):
        return Dia(f.rel, f.n, neg_nnf(f.arg))
    raise TypeError(f"not a formula: {f!r}")


def is_nnf(f: Formula) -> bool:
    for g in subformulas(f):
        if isinstance(g, Not) and not isinstance(g.arg, Atom):
            return False
    return True


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Atom):
        return ()
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, (And, Or)):
        return (f.left, f.right)
    return (f.arg,)


def subformulas(f: Formula) -> Iterator[Formula]:
    """Pre-order walk, duplicates included."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def closure(f: Formula) -> list[Formula]:
    """clos(f) in a deterministic order: pre-order subformulas first, then
    whatever the negation rule adds, worklist style.

    Negated atoms count as literals; their atom is reached via the ``~`` rule.
    """
    seen: dict[Formula, None] = {}
    work = list(_dedup(subformulas(f)))
    i = 0
    for g in work:
        seen.setdefault(g)
    while i < len(work):
        g = work[i]
        i += 1
        if isinstance(g, (And, Or)):
            new = [g.left, g.right, neg_nnf(g)]
        elif isinstance(g, Modal):
            new = [g.arg, neg_nnf(g)]
        else:
            new = [neg_nnf(g)]
        for h in new:
            if h not in seen:
                seen[h] = None
                work.append(h)
    return work


def _dedup(it: Iterable[Formula]) -> list[Formula]:
    return list(dict.fromkeys(it))


def clos(f: Formula) -> set[Formula]:
    return set(closure(f))


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FormulaMeasures:
    size: int
    modal_depth: int
    norm: int


def bit_length(n: int) -> int:
    return max(1, n.bit_length())


def rel_size(rel: RelationExpr) -> int:
    if isinstance(rel, Name):
        return 1
    if isinstance(rel, Inverse):
        return 2
    return 1 + sum(rel_size(m) for m in rel.members)


def size(f: Formula) -> int:
    """Formula nodes plus relation-expression nodes plus number bit lengths."""
    total = 0
    for g in subformulas(f):
        total += 1
        if isinstance(g, Modal):
            total += rel_size(g.rel) + bit_length(g.n)
    return total


def modal_depth(f: Formula) -> int:
    depth = {}
    # post-order over an explicit stack; formulas can be deep
    stack: list[tuple[Formula, bool]] = [(f, False)]
    while stack:
        g, done = stack.pop()
        if g in depth:
            continue
        kids = children(g)
        if not done:
            stack.append((g, True))
            stack.extend((k, False) for k in kids)
            continue
        d = max((depth[k] for k in kids), default=0)
        depth[g] = d + 1 if isinstance(g, Modal) else d
    return depth[f]


def norm(f: Formula) -> int:
    if isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.arg, Atom)):
        return 0
    if isinstance(f, (And, Or)):
        return 1 + norm(f.left) + norm(f.right)
    if isinstance(f, Modal):
        return 1 + norm(f.arg)
    raise ValueError("norm is defined on NNF formulas only")


def measures(f: Formula) -> FormulaMeasures:
    return FormulaMeasures(size(f), modal_depth(f), norm(f) if is_nnf(f) else -1)


# ---------------------------------------------------------------------------
# Vocabulary helpers
# ---------------------------------------------------------------------------


def atoms(f: Formula) -> list[str]:
    return sorted({g.name for g in subformulas(f) if isinstance(g, Atom)})


def relation_names(f: Formula) -> list[str]:
    names = set()
    for g in subformulas(f):
        if isinstance(g, Modal):
            names.update(d.r for d in rel_members(g.rel))
    return sorted(names)


def numbers(f: Formula) -> list[int]:
    return [g.n for g in subformulas(f) if isinstance(g, Modal)]


def has_legacy(f: Formula) -> bool:
    return any(isinstance(g, Legacy) for g in subformulas(f))


def has_graded(f: Formula) -> bool:
    return any(isinstance(g, Graded) for g in subformulas(f))


def uses_inverse(f: Formula) -> bool:
    """True if some modality uses an inverse relation or an intersection."""
    return any(isinstance(g, Modal) and not isinstance(g.rel, Name) for g in subformulas(f))
