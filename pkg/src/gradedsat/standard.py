"""The classic calculus with explicit successors and merging.

Every ``ge`` constraint gets its successors at once, each successor is told
whether it carries every formula that some modality of its parent mentions
(the choose rule), and ``le`` constraints are repaired by merging two
successors that both carry the counted formula.  All successors stay in
memory, so a single ``(ge R n p)`` costs space linear in ``n``, i.e.
exponential in the length of the binary number.
"""
from __future__ import annotations

from typing import Optional

from .csys import ConstraintSystem, count, detect_clash, is_safe, literal_clash, replace
from .formula import And, Formula, Geq, Leq, Or, has_legacy, is_nnf, neg_nnf, uses_inverse
from .kripke import canonical_structure, check
from .tableau import DONE, check_room, search, var_depth
from .verdict import Limits, Stats, Verdict

#: numbers above this make the explicit calculus impractical
ORACLE_MAX_N = 8


class _Standard:
    def __init__(self, stats: Stats, limits: Limits):
        self.stats = stats
        self.limits = limits

    def step(self, S: ConstraintSystem):
        for x in list(S.labels):
            out = self.rules_at(S, x)
            if out is not False:
                return out
        return DONE

    def rules_at(self, S: ConstraintSystem, x: int):
        """Apply the first rule for x; False if none applies."""
        lab = S.labels[x]
        for f in lab:
            if isinstance(f, And) and not (f.left in lab and f.right in lab):
                S.add(x, f.left)
                S.add(x, f.right)
                return None
        for f in lab:
            if isinstance(f, Or) and f.left not in lab and f.right not in lab:
                a, b = S.copy(), S
                a.add(x, f.left)
                b.add(x, f.right)
                return [a, b]
        for f in lab:
            if isinstance(f, Geq):
                missing = f.n - count(S, x, f.rel, f.arg)
                if missing > 0:
                    check_room(S, 2 * missing, self.stats, self.limits)
                    depth = var_depth(S, x) + 1
                    for _ in range(missing):
                        y = S.new_var(parent=x)
                        S.add_edge(f.rel, x, y)
                        S.add(y, f.arg)
                    self.stats.nodes_created += missing
                    self.stats.max_depth = max(self.stats.max_depth, depth)
                    return None
        for f in lab:
            if isinstance(f, (Geq, Leq)):
                for y, rels in S.succ[x].items():
                    if f.rel in rels:
                        neg = neg_nnf(f.arg)
                        if f.arg not in S.labels[y] and neg not in S.labels[y]:
                            a, b = S.copy(), S
                            a.add(y, f.arg)
                            b.add(y, neg)
                            return [a, b]
        for f in lab:
            if isinstance(f, Leq) and count(S, x, f.rel, f.arg) > f.n:
                holders = [
                    y for y, rels in S.succ[x].items() if f.rel in rels and f.arg in S.labels[y]
                ]
                pairs = [
                    (older, newer)
                    for i, older in enumerate(holders)
                    for newer in holders[i + 1 :]
                    if is_safe(S, newer, older, "graded")
                ]
                if pairs:
                    return [replace(S, newer, older) for older, newer in pairs]
        return False


def solve_standard(
    phi: Formula, limits: Optional[Limits] = None, *, model: bool = True
) -> Verdict:
    if has_legacy(phi):
        raise ValueError("legacy operators: modernize the formula first")
    if not is_nnf(phi):
        raise ValueError("formula must be in negation normal form")
    if uses_inverse(phi):
        raise ValueError("the standard calculus has no inverse relations or intersections")
    limits = limits or Limits()
    stats = Stats(max_depth=1, nodes_created=1)
    S = ConstraintSystem()
    S.add(S.new_var(), phi)
    calc = _Standard(stats, limits)
    final = search(
        S,
        calc.step,
        early_clash=literal_clash,
        final_clash=lambda T: detect_clash(T, "graded"),
        stats=stats,
        limits=limits,
    )
    verdict = Verdict(final is not None, "standard", stats, system=final)
    if final is not None and model:
        M = canonical_structure(final)
        if not check(M, "w0", phi):
            raise AssertionError("canonical structure does not satisfy the formula")
        verdict.model, verdict.root = M, "w0"
    return verdict
