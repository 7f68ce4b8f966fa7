"""Kripke structures, graded model checking and a bounded model search.

A structure stores only the named relations; inverses are read off by
swapping pairs, so they can never disagree with the forward relation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from .formula import (
    And,
    Atom,
    Box,
    Dia,
    Formula,
    Geq,
    Intersection,
    Inverse,
    Leq,
    Name,
    Not,
    Or,
    RelationExpr,
    atoms as formula_atoms,
    children,
    rel_members,
    relation_names,
)


@dataclass(frozen=True, eq=True)
class KripkeStructure:
    worlds: tuple[str, ...]
    relations: Mapping[str, frozenset[tuple[str, str]]] = field(default_factory=dict)
    valuation: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.worlds:
            raise ValueError("a structure needs at least one world")
        known = set(self.worlds)
        if len(known) != len(self.worlds):
            raise ValueError("duplicate world id")
        for r, pairs in self.relations.items():
            for a, b in pairs:
                if a not in known or b not in known:
                    raise ValueError(f"relation {r} mentions an undeclared world")
        for p, ws in self.valuation.items():
            if not ws <= known:
                raise ValueError(f"valuation of {p} mentions an undeclared world")
        object.__setattr__(
            self, "relations", {r: frozenset(v) for r, v in self.relations.items()}
        )
        object.__setattr__(
            self, "valuation", {p: frozenset(v) for p, v in self.valuation.items()}
        )
        object.__setattr__(self, "_succ", {})

    def __hash__(self):
        return hash(
            (
                self.worlds,
                frozenset(self.relations.items()),
                frozenset(self.valuation.items()),
            )
        )

    def successors(self, d) -> dict[str, frozenset[str]]:
        """world -> set of d-successors, for a Name or Inverse."""
        cache = self._succ
        if d not in cache:
            out: dict[str, set[str]] = {w: set() for w in self.worlds}
            for a, b in self.relations.get(d.r, ()):
                if isinstance(d, Inverse):
                    out[b].add(a)
                else:
                    out[a].add(b)
            cache[d] = {w: frozenset(s) for w, s in out.items()}
        return cache[d]

    def rel_successors(self, x: str, rel: RelationExpr) -> frozenset[str]:
        members = iter(rel_members(rel))
        result = self.successors(next(members))[x]
        for d in members:
            result = result & self.successors(d)[x]
        return result


def succ_count(M: KripkeStructure, x: str, rel: RelationExpr, f: Formula) -> int:
    """Number of rel-successors of x satisfying f.  Unknown names raise."""
    if x not in M.worlds:
        raise KeyError(f"unknown world {x!r}")
    for d in rel_members(rel):
        if d.r not in M.relations:
            raise KeyError(f"unknown relation {d.r!r}")
    sat = truth_set(M, f)
    return len(M.rel_successors(x, rel) & sat)


def truth_set(M: KripkeStructure, f: Formula) -> frozenset[str]:
    """Worlds of M where f holds.  Unknown atoms are false, unknown relations empty."""
    memo: dict[Formula, frozenset[str]] = {}
    everything = frozenset(M.worlds)
    stack: list[tuple[Formula, bool]] = [(f, False)]
    while stack:
        g, ready = stack.pop()
        if g in memo:
            continue
        if not ready:
            stack.append((g, True))
            stack.extend((k, False) for k in children(g) if k not in memo)
            continue
        if isinstance(g, Atom):
            val = M.valuation.get(g.name, frozenset())
        elif isinstance(g, Not):
            val = everything - memo[g.arg]
        elif isinstance(g, And):
            val = memo[g.left] & memo[g.right]
        elif isinstance(g, Or):
            val = memo[g.left] | memo[g.right]
        else:
            body = memo[g.arg]
            if isinstance(g, Box):
                body = everything - body
            counts = {w: len(M.rel_successors(w, g.rel) & body) for w in M.worlds}
            if isinstance(g, Geq):
                val = frozenset(w for w, c in counts.items() if c >= g.n)
            elif isinstance(g, Leq):
                val = frozenset(w for w, c in counts.items() if c <= g.n)
            elif isinstance(g, Dia):
                val = frozenset(w for w, c in counts.items() if c > g.n)
            else:
                val = frozenset(w for w, c in counts.items() if c <= g.n)
        memo[g] = val
    return memo[f]


def check(M: KripkeStructure, x: str, f: Formula) -> bool:
    """M, x |= f.  Legacy operators are evaluated with their own semantics."""
    if x not in M.worlds:
        raise KeyError(f"unknown world {x!r}")
    return x in truth_set(M, f)


def canonical_structure(S) -> KripkeStructure:
    """The structure read off a constraint system; variable i becomes w<rank>."""
    order = sorted(S.labels)
    name = {v: f"w{i}" for i, v in enumerate(order)}
    rels: dict[str, set[tuple[str, str]]] = {}
    val: dict[str, set[str]] = {}
    for rel, x, y in S.edge_constraints():
        pair = (name[x], name[y]) if isinstance(rel, Name) else (name[y], name[x])
        rels.setdefault(rel.r, set()).add(pair)
    for x, f in S.formula_constraints():
        if isinstance(f, Atom):
            val.setdefault(f.name, set()).add(name[x])
    return KripkeStructure(
        tuple(name[v] for v in order),
        {r: frozenset(p) for r, p in rels.items()},
        {p: frozenset(w) for p, w in val.items()},
    )


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def dump_model(M: KripkeStructure, root: Optional[str] = None) -> str:
    worlds = sorted(f"world {w}" for w in M.worlds)
    rels = sorted(f"rel {r} {a} {b}" for r, pairs in M.relations.items() for a, b in pairs)
    vals = sorted(f"val {w} {p}" for p, ws in M.valuation.items() for w in ws)
    lines = worlds + rels + vals
    if root is not None:
        lines.append(f"root {root}")
    return "\n".join(lines)


def parse_model(text: str) -> tuple[KripkeStructure, Optional[str]]:
    worlds: list[str] = []
    rels: dict[str, set[tuple[str, str]]] = {}
    val: dict[str, set[str]] = {}
    root = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts:
            continue
        tag, args = parts[0], parts[1:]
        if tag == "world" and len(args) == 1:
            worlds.append(args[0])
        elif tag == "rel" and len(args) == 3:
            rels.setdefault(args[0], set()).add((args[1], args[2]))
        elif tag == "val" and len(args) == 2:
            val.setdefault(args[1], set()).add(args[0])
        elif tag == "root" and len(args) == 1:
            root = args[0]
        else:
            raise ValueError(f"line {lineno}: cannot read {raw!r}")
    # keep creation order w0, w1, ... even though the file sorts as text
    worlds.sort(key=lambda w: (len(w), w))
    M = KripkeStructure(
        tuple(worlds),
        {r: frozenset(p) for r, p in rels.items()},
        {p: frozenset(w) for p, w in val.items()},
    )
    if root is not None and root not in M.worlds:
        raise ValueError(f"root {root} is not a world")
    return M, root


# ---------------------------------------------------------------------------
# Bounded enumeration
# ---------------------------------------------------------------------------

FOUND, NONE, INCONCLUSIVE = "found", "none", "inconclusive"


@dataclass(frozen=True)
class SearchResult:
    status: str
    model: Optional[KripkeStructure] = None
    root: Optional[str] = None
    checked: int = 0


class StructureSpace:
    """All structures over ``k`` worlds for fixed atoms and relation names.

    A structure is an integer code.  Reading the bits from the most
    significant end: edge bits for each relation (sorted), source world,
    target world; then valuation bits for each atom (sorted), world.
    Comparing codes as integers is the lexicographic order on bitmaps.
    """

    def __init__(self, k: int, atoms: Sequence[str], relations: Sequence[str]):
        self.k = k
        self.atoms = sorted(atoms)
        self.relations = sorted(relations)
        self.edge_bits = len(self.relations) * k * k
        self.bits = self.edge_bits + len(self.atoms) * k
        if self.bits > 62:
            raise ValueError("structure space too large to index")
        self.count = 1 << self.bits

    def _bit(self, pos: int) -> int:
        """Shift amount for the pos-th bit counted from the most significant."""
        return self.bits - 1 - pos

    def decode(self, codes: np.ndarray):
        """Boolean arrays: rel name -> (M,k,k), atom -> (M,k)."""
        codes = np.asarray(codes, dtype=np.uint64)
        k = self.k
        shifts = np.array([self._bit(i) for i in range(self.bits)], dtype=np.uint64)
        bits = ((codes[:, None] >> shifts) & np.uint64(1)).astype(bool)
        rels = {}
        for i, r in enumerate(self.relations):
            block = bits[:, i * k * k : (i + 1) * k * k]
            rels[r] = block.reshape(-1, k, k)
        val = {}
        for i, p in enumerate(self.atoms):
            start = self.edge_bits + i * k
            val[p] = bits[:, start : start + k]
        return rels, val

    def structure(self, code: int) -> KripkeStructure:
        rels, val = self.decode(np.array([code], dtype=np.uint64))
        worlds = tuple(f"w{i}" for i in range(self.k))
        relations = {
            r: frozenset(
                (worlds[i], worlds[j])
                for i in range(self.k)
                for j in range(self.k)
                if m[0, i, j]
            )
            for r, m in rels.items()
        }
        valuation = {
            p: frozenset(worlds[i] for i in range(self.k) if v[0, i]) for p, v in val.items()
        }
        return KripkeStructure(worlds, relations, valuation)

    def chunks(self, size: int = 1 << 15) -> Iterator[np.ndarray]:
        for start in range(0, self.count, size):
            yield np.arange(start, min(start + size, self.count), dtype=np.uint64)


def evaluate(formulas: Sequence[Formula], rels, val, k: int) -> list[np.ndarray]:
    """Truth arrays of shape (M,k) for each formula on a decoded batch."""
    n = next(iter(val.values())).shape[0] if val else next(iter(rels.values())).shape[0]
    memo: dict[Formula, np.ndarray] = {}
    mats: dict = {}

    def matrix(rel) -> np.ndarray:
        if rel not in mats:
            out = None
            for d in rel_members(rel):
                m = rels.get(d.r)
                if m is None:
                    m = np.zeros((n, k, k), dtype=bool)
                if isinstance(d, Inverse):
                    m = m.transpose(0, 2, 1)
                out = m if out is None else (out & m)
            mats[rel] = out
        return mats[rel]

    def ev(root: Formula) -> np.ndarray:
        stack: list[tuple[Formula, bool]] = [(root, False)]
        while stack:
            g, ready = stack.pop()
            if g in memo:
                continue
            if not ready:
                stack.append((g, True))
                stack.extend((c, False) for c in children(g) if c not in memo)
                continue
            if isinstance(g, Atom):
                t = val.get(g.name)
                if t is None:
                    t = np.zeros((n, k), dtype=bool)
            elif isinstance(g, Not):
                t = ~memo[g.arg]
            elif isinstance(g, And):
                t = memo[g.left] & memo[g.right]
            elif isinstance(g, Or):
                t = memo[g.left] | memo[g.right]
            else:
                body = memo[g.arg]
                if isinstance(g, Box):
                    body = ~body
                c = (matrix(g.rel) & body[:, None, :]).sum(axis=2)
                if isinstance(g, Geq):
                    t = c >= g.n
                elif isinstance(g, Dia):
                    t = c > g.n
                else:
                    t = c <= g.n
            memo[g] = t
        return memo[root]

    return [ev(f) for f in formulas]


def enumerate_models(
    f: Formula, max_worlds: int, max_structures: int = 1 << 22
) -> SearchResult:
    """First structure (in the documented order) with a world satisfying f.

    Worlds are tried 1, 2, ..., max_worlds.  If the next world count would
    push the number of examined structures past ``max_structures`` the search
    stops with status ``inconclusive``; ``none`` means every structure up to
    ``max_worlds`` worlds was examined.
    """
    atoms = formula_atoms(f)
    relations = relation_names(f)
    checked = 0
    for k in range(1, max_worlds + 1):
        space = StructureSpace(k, atoms, relations)
        if checked + space.count > max_structures:
            return SearchResult(INCONCLUSIVE, checked=checked)
        for codes in space.chunks():
            rels, val = space.decode(codes)
            (truth,) = evaluate([f], rels, val, k)
            hits = np.flatnonzero(truth.any(axis=1))
            if hits.size:
                first = int(hits[0])
                checked += first + 1
                world = int(np.flatnonzero(truth[first])[0])
                model = space.structure(int(codes[first]))
                return SearchResult(FOUND, model, model.worlds[world], checked)
            checked += codes.size
    return SearchResult(NONE, checked=checked)
