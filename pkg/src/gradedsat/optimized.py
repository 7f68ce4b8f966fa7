"""Space-saving satisfiability check for graded modal formulas without inverses.

Each node is solved depth first.  Children are generated one at a time and
are described to their parent only through counters: once a child's subtree
has been shown satisfiable it is dropped, and the parent keeps, per relation
and formula, how many of its children carry that formula.  Every child is
given a sign (the formula or its negation) for each formula that occurs under
a modality of the parent with the same relation, so counting is exact and no
merging of successors is ever needed.

Choices (which disjunct, which sign vector) are explored by chronological
backtracking.  A generation step only leaves a backtrack frame behind when it
still has untried alternatives, so ``(ge R 1048576 p)`` runs in constant
space.
"""
from __future__ import annotations

from typing import Iterator, Optional

from .csys import ClosureIndex, ConstraintSystem, count
from .formula import (
    U64_MAX,
    Atom,
    Formula,
    Name,
    has_legacy,
    is_nnf,
    modal_depth,
    uses_inverse,
)
from .kripke import KripkeStructure, check
from .verdict import Budget, Limits, ResourceLimitExceeded, Stats, Verdict


class TraceBoundError(AssertionError):
    pass


def _require_grk(phi: Formula) -> None:
    if has_legacy(phi):
        raise ValueError("legacy operators: modernize the formula first")
    if not is_nnf(phi):
        raise ValueError("formula must be in negation normal form")
    if uses_inverse(phi):
        raise ValueError("inverse relations and intersections need the inverse engine")


class _Node:
    """Bookkeeping for one live variable: its modalities grouped by relation."""

    __slots__ = ("keys", "key_index", "psi_by_rel", "geq", "leq_min", "rel_of")

    def __init__(self, cl: ClosureIndex, label: int):
        self.psi_by_rel: dict[str, list[int]] = {}
        self.rel_of: dict[int, str] = {}
        for i in cl.bits(label & cl.modal_mask):
            (d,) = cl.rel[i]
            self.rel_of[i] = d.r
            psis = self.psi_by_rel.setdefault(d.r, [])
            if cl.body[i] not in psis:
                psis.append(cl.body[i])
        for psis in self.psi_by_rel.values():
            psis.sort()
        self.keys: list[tuple[str, int]] = [
            (r, psi) for r in sorted(self.psi_by_rel) for psi in self.psi_by_rel[r]
        ]
        self.key_index = {k: j for j, k in enumerate(self.keys)}
        self.geq = [
            (i, self.key_index[(self.rel_of[i], cl.body[i])], cl.num[i])
            for i in cl.bits(label & cl.geq_mask)
        ]
        self.leq_min: list[Optional[int]] = [None] * len(self.keys)
        for i in cl.bits(label & cl.leq_mask):
            k = self.key_index[(self.rel_of[i], cl.body[i])]
            m = cl.num[i]
            if self.leq_min[k] is None or m < self.leq_min[k]:
                self.leq_min[k] = m


class _Stream:
    """A lazily evaluated candidate sequence that can be revisited by index."""

    __slots__ = ("source", "items")

    def __init__(self, source: Iterator):
        self.source = source
        self.items: list = []

    def get(self, i: int):
        items = self.items
        while len(items) <= i:
            item = next(self.source, None)
            if item is None:
                self.source = iter(())
                return None
            items.append(item)
        return items[i]


class TraceSolver:
    """Local expansion shared by the trace-based engines."""

    def __init__(
        self,
        phi: Formula,
        limits: Optional[Limits] = None,
        record: bool = False,
        debug: bool = False,
    ):
        self.phi = phi
        self.limits = limits or Limits()
        self.cl = ClosureIndex(phi)
        self.depth_bound = modal_depth(phi) + 1
        self.record = record
        self.debug = debug
        self.stats = Stats()
        self.budget = Budget(self.stats, self.limits)
        self.live = 0

    # -- local expansion --------------------------------------------------

    def _and_closure(self, m: int) -> int:
        cl = self.cl
        while True:
            new = m
            for i in cl.bits(m & cl.and_mask):
                new |= (1 << cl.left[i]) | (1 << cl.right[i])
            if new == m:
                return m
            self.budget.tick()
            m = new

    def _open_or(self, m: int) -> int:
        cl = self.cl
        for i in cl.bits(m & cl.or_mask):
            if not m & ((1 << cl.left[i]) | (1 << cl.right[i])):
                return i
        return -1

    def saturations(self, mask: int) -> Iterator[int]:
        """Every clash-free way to close ``mask`` under and/or, left disjunct first."""
        cl = self.cl
        stack = [mask]
        while stack:
            m = self._and_closure(stack.pop())
            if cl.has_literal_clash(m):
                self.stats.backtracks += 1
                continue
            i = self._open_or(m)
            if i < 0:
                yield m
                continue
            self.budget.tick()
            stack.append(m | (1 << cl.right[i]))
            stack.append(m | (1 << cl.left[i]))

    def enter(self, depth: int) -> None:
        if depth > self.depth_bound:
            raise TraceBoundError(f"trace depth {depth} exceeds modal depth + 1")
        if depth > self.limits.max_depth:
            raise ResourceLimitExceeded(f"depth limit {self.limits.max_depth} exceeded", self.stats)
        self.live += 1
        self.stats.max_depth = max(self.stats.max_depth, depth)
        self.stats.peak_live_vars = max(self.stats.peak_live_vars, self.live)


class GrkSolver(TraceSolver):
    """One satisfiability run; create a fresh solver per formula."""

    engine = "optimized"

    def __init__(self, phi: Formula, limits: Optional[Limits] = None, record=False, debug=False):
        _require_grk(phi)
        super().__init__(phi, limits, record, debug)

    # -- successor generation ---------------------------------------------

    def _candidates(self, node: _Node, label: int, trigger: int) -> Iterator[tuple[int, list[int]]]:
        """Child labels for one generation step, positive signs first.

        The first listed formula is the most significant sign.  Vectors that
        negate the trigger body or put some formula next to its negation are
        skipped: the child would be unsatisfiable anyway.
        """
        cl = self.cl
        r = node.rel_of[trigger]
        body = cl.body[trigger]
        psis = node.psi_by_rel[r]
        k = len(psis)
        base = 1 << body
        for v in range(1 << k):
            child = base
            for j, psi in enumerate(psis):
                if v >> (k - 1 - j) & 1:
                    if psi == body:
                        break
                    child |= 1 << cl.neg[psi]
                else:
                    child |= 1 << psi
            else:
                if any(child >> cl.neg[b] & 1 for b in cl.bits(child)):
                    continue
                incs = [node.key_index[(r, psi)] for psi in psis if child >> psi & 1]
                yield child, incs

    def _trigger(self, node: _Node, counters: list[int]) -> int:
        for i, key, n in node.geq:
            if counters[key] < n:
                return i
        return -1

    def generate(self, label: int, depth: int):
        """Satisfy every ``ge`` at a saturated node; None if impossible."""
        cl = self.cl
        if not label & cl.geq_mask:
            # nothing to generate; all counters stay 0 so no ``le`` can fail
            return (label, []) if self.record else True
        node = _Node(cl, label)
        counters = [0] * len(node.keys)
        streams: dict[int, _Stream] = {}
        frames: list[tuple] = []
        children: list = []
        child_masks: list = []
        stream = None
        while True:
            if stream is None:
                trigger = self._trigger(node, counters)
                if trigger < 0:
                    return (label, children) if self.record else True
                # generation is suspended until nothing else applies here
                assert self._open_or(label) < 0 and self._and_closure(label) == label
                stream = streams.get(trigger)
                if stream is None:
                    stream = streams[trigger] = _Stream(self._candidates(node, label, trigger))
                rel = node.rel_of[trigger]
                pos = 0
            committed = False
            while True:
                cand = stream.get(pos)
                if cand is None:
                    break
                pos += 1
                child, incs = cand
                self.budget.tick()
                new = list(counters)
                clash = False
                for k in incs:
                    new[k] += 1
                    bound = node.leq_min[k]
                    if bound is not None and new[k] > bound:
                        clash = True
                    if new[k] > U64_MAX:
                        raise ResourceLimitExceeded("counter overflow", self.stats)
                if clash:
                    self.stats.backtracks += 1
                    continue
                self.stats.nodes_created += 1
                result = self.sat(child, depth + 1)
                if result is None:
                    self.stats.backtracks += 1
                    continue
                if stream.get(pos) is not None:
                    frames.append((counters, stream, pos, rel, len(children), len(child_masks)))
                counters = new
                if self.record:
                    children.append(((Name(rel),), result))
                if self.debug:
                    child_masks.append((rel, child))
                    self._verify_counters(node, counters, child_masks)
                committed = True
                break
            if committed:
                stream = None
                continue
            if not frames:
                return None
            counters, stream, pos, rel, nchildren, nmasks = frames.pop()
            del children[nchildren:]
            del child_masks[nmasks:]

    def _verify_counters(self, node: _Node, counters, child_masks) -> None:
        """Debug check: compare every counter with a scan of an explicit system."""
        cl = self.cl
        S = ConstraintSystem()
        x = S.new_var()
        for r, m in child_masks:
            y = S.new_var(x)
            S.add_edge(Name(r), x, y)
            for f in cl.decode(m):
                S.add(y, f)
        for (r, psi), value in zip(node.keys, counters):
            expect = count(S, x, Name(r), cl.formulas[psi])
            if value != expect:
                raise AssertionError(
                    f"counter {r}/{cl.formulas[psi]} is {value}, scan gives {expect}"
                )

    # -- nodes --------------------------------------------------------------

    def sat(self, mask: int, depth: int):
        self.enter(depth)
        try:
            first = True
            for label in self.saturations(mask):
                if not first:
                    self.stats.backtracks += 1
                first = False
                result = self.generate(label, depth)
                if result is not None:
                    return result
            return None
        finally:
            self.live -= 1

    def run(self):
        self.stats.nodes_created += 1
        return self.sat(1 << self.cl.index[self.phi], 1)


def tree_to_model(cl: ClosureIndex, tree) -> KripkeStructure:
    """Model of a recorded tree ``(label, [(edges, subtree), ...])``.

    Worlds are numbered in pre-order; ``edges`` lists the directed relations
    from the parent to the child.
    """
    worlds: list[str] = []
    rels: dict[str, set] = {}
    val: dict[str, set] = {}
    stack = [(tree, None, ())]
    while stack:
        (label, children), parent, edges = stack.pop()
        w = f"w{len(worlds)}"
        worlds.append(w)
        for d in edges:
            pair = (parent, w) if isinstance(d, Name) else (w, parent)
            rels.setdefault(d.r, set()).add(pair)
        for f in cl.decode(label):
            if isinstance(f, Atom):
                val.setdefault(f.name, set()).add(w)
        for child_edges, child in reversed(children):
            stack.append((child, w, child_edges))
    return KripkeStructure(
        tuple(worlds),
        {r: frozenset(p) for r, p in rels.items()},
        {p: frozenset(w) for p, w in val.items()},
    )


def solve_grk(
    phi: Formula,
    limits: Optional[Limits] = None,
    *,
    model: bool = False,
    debug: bool = False,
) -> Verdict:
    solver = GrkSolver(phi, limits, record=False, debug=debug)
    result = solver.run()
    verdict = Verdict(result is not None, GrkSolver.engine, solver.stats)
    if verdict.sat and model:
        # second pass over the same deterministic search, keeping the tree
        again = GrkSolver(phi, limits, record=True, debug=debug)
        tree = again.run()
        M = tree_to_model(again.cl, tree)
        if not check(M, "w0", phi):
            raise AssertionError("witness model does not satisfy the formula")
        verdict.model, verdict.root = M, "w0"
    return verdict
