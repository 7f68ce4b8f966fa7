"""Trace-based satisfiability for graded formulas with inverses and intersections.

Compared to the base engine three things change:

* A child is linked to its parent by a guessed set of directed relations
  (a superset of the triggering intersection), and gets signs for the bodies
  of all modalities of the parent.
* A node's counters start from its predecessor: the parent counts as a
  neighbour along the inverse of every guessed edge.
* A child whose own modalities look back at the parent may find that the
  parent has not decided some formula.  It then answers ``restart`` with that
  formula; the parent adds the formula or its negation to its own label,
  forgets all of its children and starts over.
"""
from __future__ import annotations

from itertools import combinations
from typing import Iterator, Optional

from .csys import ClosureIndex, ConstraintSystem, count
from .formula import U64_MAX, Formula, Name, has_legacy, inverse, is_nnf
from .kripke import check
from .optimized import TraceSolver, _Stream, tree_to_model
from .verdict import Limits, ResourceLimitExceeded, Verdict

SAT = "sat"
RESTART = "restart"


class _InvNode:
    """Counter layout for one live variable: one key per (intersection, body)."""

    __slots__ = ("keys", "key_index", "psis", "geq", "leq_min")

    def __init__(self, cl: ClosureIndex, label: int):
        self.keys: list[tuple[frozenset, int]] = []
        self.key_index: dict[tuple[frozenset, int], int] = {}
        psis: set[int] = set()
        for i in cl.bits(label & cl.modal_mask):
            key = (cl.rel[i], cl.body[i])
            if key not in self.key_index:
                self.key_index[key] = len(self.keys)
                self.keys.append(key)
            psis.add(cl.body[i])
        self.psis = sorted(psis)
        self.geq = [
            (i, self.key_index[(cl.rel[i], cl.body[i])], cl.num[i])
            for i in cl.bits(label & cl.geq_mask)
        ]
        self.leq_min: list[Optional[int]] = [None] * len(self.keys)
        for i in cl.bits(label & cl.leq_mask):
            k = self.key_index[(cl.rel[i], cl.body[i])]
            if self.leq_min[k] is None or cl.num[i] < self.leq_min[k]:
                self.leq_min[k] = cl.num[i]


class InverseSolver(TraceSolver):
    engine = "inverse"

    def __init__(self, phi: Formula, limits: Optional[Limits] = None, record=False, debug=False):
        if has_legacy(phi):
            raise ValueError("legacy operators: modernize the formula first")
        if not is_nnf(phi):
            raise ValueError("formula must be in negation normal form")
        super().__init__(phi, limits, record, debug)
        self.rel_order = {d: j for j, d in enumerate(self.cl.relations)}

    # -- counters -----------------------------------------------------------

    def init_counters(self, node: _InvNode, pred) -> list[int]:
        """1 where the predecessor is a sigma-neighbour carrying psi, else 0."""
        if pred is None:
            return [0] * len(node.keys)
        pred_label, back = pred
        return [
            1 if sigma <= back and pred_label >> psi & 1 else 0 for sigma, psi in node.keys
        ]

    def _choose_toward(self, label: int, pred) -> int:
        """Body the predecessor must decide before this node can go on, or -1."""
        if pred is None:
            return -1
        cl = self.cl
        pred_label, back = pred
        for i in cl.bits(label & cl.modal_mask):
            if cl.rel[i] & back:
                psi = cl.body[i]
                if not pred_label >> psi & 1 and not pred_label >> cl.neg[psi] & 1:
                    return psi
        return -1

    # -- generation -----------------------------------------------------------

    def edge_sets(self, sigma: frozenset) -> Iterator[frozenset]:
        """Supersets of sigma among the relations of the formula, smallest first."""
        extras = [d for d in self.cl.relations if d not in sigma]
        for size in range(len(extras) + 1):
            for combo in combinations(extras, size):
                yield frozenset(sigma | set(combo))

    def _candidates(self, node: _InvNode, trigger: int):
        cl = self.cl
        body = cl.body[trigger]
        psis = node.psis
        k = len(psis)
        for edges in self.edge_sets(cl.rel[trigger]):
            counted = [j for j, (sigma, _) in enumerate(node.keys) if sigma <= edges]
            for v in range(1 << k):
                child = 1 << body
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
                    incs = [j for j in counted if child >> node.keys[j][1] & 1]
                    yield child, edges, incs

    def _round(self, label: int, pred, depth: int, level: int):
        """One pass over a saturated label: SAT tree, (RESTART, psi) or None."""
        cl = self.cl
        node = _InvNode(cl, label)
        counters = self.init_counters(node, pred)
        for k, bound in enumerate(node.leq_min):
            if bound is not None and counters[k] > bound:
                self.stats.backtracks += 1
                return None
        psi = self._choose_toward(label, pred)
        if psi >= 0:
            return (RESTART, psi)
        streams: dict[int, _Stream] = {}
        frames: list[tuple] = []
        children: list = []
        stream = None
        while True:
            if stream is None:
                trigger = -1
                for i, key, n in node.geq:
                    if counters[key] < n:
                        trigger = i
                        break
                if trigger < 0:
                    return (SAT, (label, children))
                assert self._open_or(label) < 0 and self._and_closure(label) == label
                stream = streams.get(trigger)
                if stream is None:
                    stream = streams[trigger] = _Stream(self._candidates(node, trigger))
                pos = 0
            committed = False
            while True:
                cand = stream.get(pos)
                if cand is None:
                    break
                pos += 1
                child, edges, incs = cand
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
                back = frozenset(inverse(d) for d in edges)
                out = self.sat(child, (label, back), depth + 1, 0)
                if out is None:
                    self.stats.backtracks += 1
                    continue
                if out[0] == RESTART:
                    return self._restart(label, out[1], pred, depth, level)
                if stream.get(pos) is not None:
                    frames.append((counters, stream, pos, len(children)))
                counters = new
                if self.record or self.debug:
                    ordered = tuple(sorted(edges, key=self.rel_order.__getitem__))
                    children.append((ordered, out[1]))
                if self.debug:
                    self._verify(node, counters, pred, children)
                committed = True
                break
            if committed:
                stream = None
                continue
            if not frames:
                return None
            counters, stream, pos, nchildren = frames.pop()
            del children[nchildren:]

    def _restart(self, label: int, psi: int, pred, depth: int, level: int):
        """Add psi, then its negation, to the label and solve the node again.

        The children generated so far are dropped with this stack frame.
        Either choice covers every model of the current label, so when both
        fail the current label has no model in this context.
        """
        self.stats.restarts += 1
        if level + 1 > len(self.cl):
            raise AssertionError("more restarts at one node than closure formulas")
        for chi in (psi, self.cl.neg[psi]):
            out = self._solve_label(label | (1 << chi), pred, depth, level + 1)
            if out is not None:
                return out
            self.stats.backtracks += 1
        return None

    def _verify(self, node: _InvNode, counters, pred, children) -> None:
        """Debug check: counters against a scan of the explicit system."""
        cl = self.cl
        S = ConstraintSystem(inverse_mode=True)
        x = S.new_var()
        if pred is not None:
            pred_label, back = pred
            p = S.new_var()
            for d in back:
                S.add_edge(d, x, p)
            for f in cl.decode(pred_label):
                S.add(p, f)
        for edges, (child_label, _) in children:
            y = S.new_var(x)
            for d in edges:
                S.add_edge(d, x, y)
            for f in cl.decode(child_label):
                S.add(y, f)
        for (sigma, psi), value in zip(node.keys, counters):
            expect = count(S, x, sigma, cl.formulas[psi])
            if value != expect:
                raise AssertionError(f"counter {sorted(map(str, sigma))}/{cl.formulas[psi]}: {value} != {expect}")

    # -- nodes ------------------------------------------------------------------

    def _solve_label(self, mask: int, pred, depth: int, level: int):
        first = True
        for label in self.saturations(mask):
            if not first:
                self.stats.backtracks += 1
            first = False
            out = self._round(label, pred, depth, level)
            if out is not None:
                return out
        return None

    def sat(self, mask: int, pred, depth: int, level: int = 0):
        self.enter(depth)
        try:
            return self._solve_label(mask, pred, depth, level)
        finally:
            self.live -= 1

    def run(self):
        self.stats.nodes_created += 1
        out = self.sat(1 << self.cl.index[self.phi], None, 1)
        if out is not None and out[0] == RESTART:
            raise AssertionError("the root has no predecessor to restart")
        return None if out is None else out[1]


def solve_grkri(
    phi: Formula,
    limits: Optional[Limits] = None,
    *,
    model: bool = False,
    debug: bool = False,
) -> Verdict:
    solver = InverseSolver(phi, limits, record=False, debug=debug)
    tree = solver.run()
    verdict = Verdict(tree is not None, InverseSolver.engine, solver.stats)
    if verdict.sat and model:
        # second pass over the same deterministic search, keeping the tree
        again = InverseSolver(phi, limits, record=True, debug=debug)
        tree = again.run()
        M = tree_to_model(again.cl, tree)
        if not check(M, "w0", phi):
            raise AssertionError("witness model does not satisfy the formula")
        verdict.model, verdict.root = M, "w0"
    return verdict
