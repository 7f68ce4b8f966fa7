"""The unsound legacy calculus for ``dia``/``box`` formulas, kept as an exhibit.

It differs from a correct calculus in one place: nothing ever forces a
successor to decide the formulas its parent counts.  A ``box`` bound on
``f`` only looks at successors that explicitly carry ``f``, so successors
carrying neither ``f`` nor its negation slip through.  On
``(and (dia R 2 p1) (and (box R 1 p2) (box R 1 (not p2))))`` it finds a
"model" for an unsatisfiable formula.  Never use it as an oracle.

Rules, highest priority first, oldest variable first:
``and``, ``or`` (choice), ``box`` with 0 (push the body to every successor),
``dia`` (add successors until more than n carry the body), ``box`` with
n > 0 (merge two successors when more than n carry the body; choice over
safe pairs).  A clash is a literal pair or ``dia m f`` next to ``box n ~f``
with m <= n.
"""
from __future__ import annotations

from typing import Optional

from .csys import ConstraintSystem, count, detect_clash, is_safe, replace
from .formula import And, Box, Dia, Formula, Or, has_graded, is_nnf
from .kripke import canonical_structure
from .tableau import DONE, check_room, search, var_depth
from .verdict import Limits, Stats, Verdict


def _legacy_clash(S: ConstraintSystem):
    return detect_clash(S, "legacy")


class _Legacy:
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
            if isinstance(f, Box) and f.n == 0:
                for y, rels in S.succ[x].items():
                    if f.rel in rels and f.arg not in S.labels[y]:
                        S.add(y, f.arg)
                        return None
        for f in lab:
            if isinstance(f, Dia):
                missing = f.n + 1 - count(S, x, f.rel, f.arg)
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
            if isinstance(f, Box) and f.n > 0 and count(S, x, f.rel, f.arg) > f.n:
                succ = [y for y, rels in S.succ[x].items() if f.rel in rels]
                pairs = [
                    (older, newer)
                    for i, older in enumerate(succ)
                    for newer in succ[i + 1 :]
                    if is_safe(S, newer, older, "legacy")
                ]
                if pairs:
                    return [replace(S, newer, older) for older, newer in pairs]
        return False


def solve_incorrect(phi: Formula, limits: Optional[Limits] = None) -> Verdict:
    """Run the legacy calculus; SAT does not imply satisfiable."""
    if has_graded(phi):
        raise ValueError("the legacy calculus only reads dia/box formulas")
    if not is_nnf(phi):
        raise ValueError("formula must be in negation normal form")
    limits = limits or Limits()
    stats = Stats(max_depth=1, nodes_created=1)
    S = ConstraintSystem()
    S.add(S.new_var(), phi)
    calc = _Legacy(stats, limits)
    final = search(S, calc.step, _legacy_clash, _legacy_clash, stats, limits)
    verdict = Verdict(final is not None, "incorrect", stats, system=final)
    if final is not None:
        # the canonical structure is reported as is; it need not be a model
        verdict.model, verdict.root = canonical_structure(final), "w0"
    return verdict
