"""Constraint systems: sets of ``x |= f`` and ``R x y`` constraints.

:class:`ConstraintSystem` is the explicit, whole-tree representation used by
the legacy and standard engines (and by tests as a reference).  The trace
engines keep only one path alive and work on bitmask labels over an indexed
closure (:class:`ClosureIndex`) with per-node :class:`CounterBank` objects.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from .formula import (
    Atom,
    And,
    Box,
    Dia,
    Directed,
    Formula,
    Geq,
    Intersection,
    Inverse,
    Leq,
    Modal,
    Name,
    Not,
    Or,
    RelationExpr,
    closure,
    inverse,
    neg_nnf,
    rel_members,
    to_text,
)

Rel = Union[Name, Inverse]


@dataclass(frozen=True)
class ClashReason:
    kind: str  # "atomic", "counting" or "legacy"
    var: int
    formulas: tuple[Formula, ...]
    count: Optional[int] = None

    def __str__(self) -> str:
        what = ", ".join(to_text(f) for f in self.formulas)
        extra = f" (count {self.count})" if self.count is not None else ""
        return f"{self.kind} clash at x{self.var}: {what}{extra}"


class ConstraintSystem:
    """Mutable constraint system with deterministic iteration order.

    Variables are increasing integers.  ``parent`` records which variable a
    successor was generated for.  With ``inverse_mode`` every edge ``R x y`` is
    stored together with its mirror ``R^-1 y x``.
    """

    def __init__(self, inverse_mode: bool = False):
        self.inverse_mode = inverse_mode
        self.labels: dict[int, dict[Formula, None]] = {}
        self.succ: dict[int, dict[int, set[Rel]]] = {}
        self.parent: dict[int, int] = {}
        self.next_var = 0
        self.n_constraints = 0

    # -- construction -----------------------------------------------------

    def new_var(self, parent: Optional[int] = None) -> int:
        v = self.next_var
        self.next_var += 1
        self.labels[v] = {}
        self.succ[v] = {}
        if parent is not None:
            self.parent[v] = parent
        return v

    def add(self, x: int, f: Formula) -> bool:
        lab = self.labels[x]
        if f in lab:
            return False
        lab[f] = None
        self.n_constraints += 1
        return True

    def add_edge(self, rel: Rel, x: int, y: int) -> bool:
        added = self._add_edge(rel, x, y)
        if self.inverse_mode:
            self._add_edge(inverse(rel), y, x)
        return added

    def _add_edge(self, rel: Rel, x: int, y: int) -> bool:
        rels = self.succ[x].setdefault(y, set())
        if rel in rels:
            return False
        rels.add(rel)
        self.n_constraints += 1
        return True

    def copy(self) -> "ConstraintSystem":
        s = ConstraintSystem.__new__(ConstraintSystem)
        s.inverse_mode = self.inverse_mode
        s.labels = {v: dict(lab) for v, lab in self.labels.items()}
        s.succ = {v: {y: set(r) for y, r in out.items()} for v, out in self.succ.items()}
        s.parent = dict(self.parent)
        s.next_var = self.next_var
        s.n_constraints = self.n_constraints
        return s

    @classmethod
    def from_constraints(
        cls,
        formulas: Iterable[tuple[int, Formula]] = (),
        edges: Iterable[tuple[Rel, int, int]] = (),
        inverse_mode: bool = False,
    ) -> "ConstraintSystem":
        """Build a system from explicit constraints; parents follow edges."""
        s = cls(inverse_mode)
        formulas, edges = list(formulas), list(edges)
        mentioned = {x for x, _ in formulas} | {v for _, x, y in edges for v in (x, y)}
        for v in range(max(mentioned, default=-1) + 1):
            s.new_var()
        for rel, x, y in edges:
            s.add_edge(rel, x, y)
            if isinstance(rel, Name) or not inverse_mode:
                s.parent.setdefault(y, x)
        for x, f in formulas:
            s.add(x, f)
        return s

    # -- views ------------------------------------------------------------

    @property
    def vars(self) -> list[int]:
        return list(self.labels)

    def label(self, x: int) -> list[Formula]:
        return list(self.labels[x])

    def edge_label(self, x: int, y: int) -> set[Rel]:
        return self.succ[x].get(y, set())

    def formula_constraints(self) -> Iterator[tuple[int, Formula]]:
        for v, lab in self.labels.items():
            for f in lab:
                yield v, f

    def edge_constraints(self) -> Iterator[tuple[Rel, int, int]]:
        for x, out in self.succ.items():
            for y, rels in out.items():
                for r in rels:
                    yield r, x, y

    def children(self, x: int) -> list[int]:
        return [y for y, p in self.parent.items() if p == x]

    def descendants(self, y: int) -> set[int]:
        kids: dict[int, list[int]] = {}
        for c, p in self.parent.items():
            kids.setdefault(p, []).append(c)
        out: set[int] = set()
        stack = list(kids.get(y, ()))
        while stack:
            z = stack.pop()
            if z not in out:
                out.add(z)
                stack.extend(kids.get(z, ()))
        return out

    def __len__(self) -> int:
        return self.n_constraints

    def __repr__(self) -> str:
        return f"ConstraintSystem({len(self.labels)} vars, {self.n_constraints} constraints)"


# ---------------------------------------------------------------------------
# Counting, clashes, replacement
# ---------------------------------------------------------------------------


def _members(rel: Union[RelationExpr, Iterable[Rel]]) -> frozenset[Rel]:
    if isinstance(rel, (Name, Inverse, Intersection)):
        return rel_members(rel)
    return frozenset(rel)


def count(S: ConstraintSystem, x: int, rel, psi: Formula) -> int:
    """Number of y with every relation of ``rel`` on x->y and ``y |= psi``."""
    need = _members(rel)
    labels = S.labels
    return sum(1 for y, rels in S.succ[x].items() if need <= rels and psi in labels[y])


def _literal_clash(S: ConstraintSystem, x: int) -> Optional[ClashReason]:
    lab = S.labels[x]
    for f in lab:
        if isinstance(f, Not) and f.arg in lab:
            return ClashReason("atomic", x, (f.arg, f))
    return None


def literal_clash(S: ConstraintSystem) -> Optional[ClashReason]:
    """First ``x |= p, x |= not p`` pair, oldest variable first."""
    for x in S.labels:
        c = _literal_clash(S, x)
        if c is not None:
            return c
    return None


def detect_clash(S: ConstraintSystem, mode: str = "graded") -> Optional[ClashReason]:
    """First clash in variable order then formula order, or None.

    ``mode`` is ``"legacy"`` (literal pairs and dia/box pairs),
    ``"graded"`` or ``"graded_inverse"`` (literal pairs and exceeded ``le``).
    """
    if mode not in ("legacy", "graded", "graded_inverse"):
        raise ValueError(f"unknown clash mode {mode!r}")
    for x, lab in S.labels.items():
        c = _literal_clash(S, x)
        if c is not None:
            return c
        for f in lab:
            if mode == "legacy":
                if isinstance(f, Dia):
                    for g in lab:
                        if (
                            isinstance(g, Box)
                            and g.rel == f.rel
                            and f.n <= g.n
                            and g.arg == neg_nnf(f.arg)
                        ):
                            return ClashReason("legacy", x, (f, g))
            elif isinstance(f, Leq):
                k = count(S, x, f.rel, f.arg)
                if k > f.n:
                    return ClashReason("counting", x, (f,), k)
    return None


def replace(S: ConstraintSystem, y: int, z: int) -> ConstraintSystem:
    """[z/y]S: every occurrence of y becomes z; y's children move to z."""
    if y == z:
        raise ValueError("replace needs two distinct variables")
    T = S.copy()
    if z not in T.labels:
        # plain renaming to a fresh variable
        T.labels[z] = {}
        T.succ[z] = {}
        T.next_var = max(T.next_var, z + 1)
    for f in T.labels.pop(y):
        if f not in T.labels[z]:
            T.labels[z][f] = None
        else:
            T.n_constraints -= 1
    out_y = T.succ.pop(y)
    for b, rels in out_y.items():
        b = z if b == y else b
        target = T.succ[z].setdefault(b, set())
        T.n_constraints -= len(rels & target)
        target |= rels
    for a, out in T.succ.items():
        if y in out:
            rels = out.pop(y)
            target = out.setdefault(z, set())
            T.n_constraints -= len(rels & target)
            target |= rels
    py = T.parent.pop(y, None)
    if py is not None and z not in T.parent and py != z:
        T.parent[z] = py
    for c, p in list(T.parent.items()):
        if p == y:
            T.parent[c] = z
    return T


def is_safe(S: ConstraintSystem, y: int, z: int, mode: str = "graded") -> bool:
    """Whether [z/y]S keeps every lower bound that sees both y and z.

    legacy: for ``x |= dia_R^n f`` with ``R x y, R x z``: count after > n.
    graded: for ``x |= ge_R n f`` with ``R x y, R x z``: count after >= n.
    """
    for x, lab in S.labels.items():
        out = S.succ[x]
        if y not in out or z not in out:
            continue
        ry, rz = out[y], out[z]
        for f in lab:
            if mode == "legacy":
                if not isinstance(f, Dia):
                    continue
            elif not isinstance(f, Geq):
                continue
            need = rel_members(f.rel)
            if not (need <= ry and need <= rz):
                continue
            before = count(S, x, f.rel, f.arg)
            has_y = f.arg in S.labels[y]
            has_z = f.arg in S.labels[z]
            after = before - has_y - has_z + (has_y or has_z)
            if mode == "legacy":
                if not after > f.n:
                    return False
            elif not after >= f.n:
                return False
    return True


def delete_subtrees(S: ConstraintSystem, y: int) -> ConstraintSystem:
    """S minus every constraint naming a strict descendant of y."""
    gone = S.descendants(y)
    T = ConstraintSystem(S.inverse_mode)
    T.next_var = S.next_var
    for v, lab in S.labels.items():
        if v in gone:
            continue
        T.labels[v] = dict(lab)
        T.n_constraints += len(lab)
        T.succ[v] = {}
        for w, rels in S.succ[v].items():
            if w not in gone:
                T.succ[v][w] = set(rels)
                T.n_constraints += len(rels)
    T.parent = {c: p for c, p in S.parent.items() if c not in gone}
    return T


def dump(S: ConstraintSystem) -> str:
    """One constraint per line, ``c <var> <formula>`` / ``e <rel> <var> <var>``, sorted."""
    lines = [f"c x{x} {to_text(f)}" for x, f in S.formula_constraints()]
    lines += [f"e {r} x{x} x{y}" for r, x, y in S.edge_constraints()]
    return "\n".join(sorted(lines))


# ---------------------------------------------------------------------------
# Indexed closure and counters for the trace engines
# ---------------------------------------------------------------------------

ATOM, NEG, AND, OR, GEQ, LEQ = range(6)


class ClosureIndex:
    """clos(phi) with integer ids, so node labels can be int bitmasks.

    For modal entries ``rel[i]`` is the frozenset of directed relations of the
    operator, ``num[i]`` its number and ``body[i]`` the id of its argument.
    """

    def __init__(self, phi: Formula):
        self.root = phi
        self.formulas: list[Formula] = closure(phi)
        self.index = {f: i for i, f in enumerate(self.formulas)}
        size = len(self.formulas)
        self.neg = [self.index[neg_nnf(f)] for f in self.formulas]
        self.kind = [0] * size
        self.left = [-1] * size
        self.right = [-1] * size
        self.body = [-1] * size
        self.num = [0] * size
        self.rel: list[Optional[frozenset[Rel]]] = [None] * size
        self.and_mask = self.or_mask = self.geq_mask = self.leq_mask = 0
        self.literal_pairs: list[tuple[int, int]] = []
        for i, f in enumerate(self.formulas):
            if isinstance(f, Atom):
                self.kind[i] = ATOM
            elif isinstance(f, Not):
                self.kind[i] = NEG
                self.literal_pairs.append((i, self.index[f.arg]))
            elif isinstance(f, (And, Or)):
                self.kind[i] = AND if isinstance(f, And) else OR
                self.left[i] = self.index[f.left]
                self.right[i] = self.index[f.right]
                if isinstance(f, And):
                    self.and_mask |= 1 << i
                else:
                    self.or_mask |= 1 << i
            elif isinstance(f, (Geq, Leq)):
                self.kind[i] = GEQ if isinstance(f, Geq) else LEQ
                self.body[i] = self.index[f.arg]
                self.num[i] = f.n
                self.rel[i] = rel_members(f.rel)
                if isinstance(f, Geq):
                    self.geq_mask |= 1 << i
                else:
                    self.leq_mask |= 1 << i
            else:
                raise ValueError("legacy operators are not allowed here")
        self.modal_mask = self.geq_mask | self.leq_mask
        self.literal_masks = [(1 << a) | (1 << b) for a, b in self.literal_pairs]
        # Omega_phi: intersections that occur; Rbar_phi: names and their inverses
        self.intersections = sorted(
            {self.rel[i] for i in range(size) if self.rel[i] is not None},
            key=lambda s: sorted((d.r, isinstance(d, Inverse)) for d in s),
        )
        names = sorted({d.r for s in self.intersections for d in s})
        self.relations: list[Rel] = [d for r in names for d in (Name(r), Inverse(r))]

    def __len__(self) -> int:
        return len(self.formulas)

    def bits(self, mask: int) -> Iterator[int]:
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def decode(self, mask: int) -> list[Formula]:
        return [self.formulas[i] for i in self.bits(mask)]

    def has_literal_clash(self, mask: int) -> bool:
        for m in self.literal_masks:
            if mask & m == m:
                return True
        return False


class CounterBank(dict):
    """Per-node counters keyed by (relation set, formula id).

    Only keys that some constraint at the node reads are materialised; every
    other counter of the full table is never consulted.
    """

    def verify(self, S: ConstraintSystem, x: int, cl: ClosureIndex) -> None:
        """Compare every counter against a scan of S (debug check)."""
        for (rels, psi), value in self.items():
            expect = count(S, x, rels, cl.formulas[psi])
            if value != expect:
                raise AssertionError(
                    f"counter {sorted(map(str, rels))}/{to_text(cl.formulas[psi])} "
                    f"is {value}, scan gives {expect}"
                )
