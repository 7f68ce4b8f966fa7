"""Seeded random formulas for differential testing.

Randomness comes from numpy's PCG64 (PCG-XSL-RR 128/64) seeded with the
integer seed; each draw takes one raw 64-bit output modulo the range.  The
same seed and profile give the same formula on every platform.

A size budget is drawn first and then split recursively: every node becomes
a leaf with a fixed probability, so depth is geometrically distributed and
shallow subformulas dominate.  The root is never a leaf unless the budget
forces it.  ``ge`` is never drawn with 0 (its negation is not
a modal formula); ``le`` with 0 is.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formula import (
    And,
    Atom,
    Box,
    Dia,
    Formula,
    Geq,
    Inverse,
    Leq,
    Name,
    Not,
    Or,
    bit_length,
    make_intersection,
    rel_size,
)

LEAF_PROBABILITY = 0.05


@dataclass(frozen=True)
class Profile:
    max_size: int = 12
    max_n: int = 4
    atoms: tuple[str, ...] = ("p", "q")
    relations: tuple[str, ...] = ("R", "S")
    allow_inverse: bool = False
    allow_intersection: bool = False
    allow_legacy: bool = False
    allow_negation: bool = True

    def __post_init__(self):
        if self.max_size < 1 or self.max_n < 1:
            raise ValueError("profile bounds must be positive")
        if not self.atoms or not self.relations:
            raise ValueError("profile needs atoms and relations")


class _Draw:
    def __init__(self, seed: int):
        self.bits = np.random.PCG64(seed)

    def below(self, n: int) -> int:
        return int(self.bits.random_raw()) % n

    def chance(self, p: float) -> bool:
        return self.below(1 << 20) < p * (1 << 20)

    def pick(self, seq):
        return seq[self.below(len(seq))]


class _Generator:
    def __init__(self, seed: int, profile: Profile):
        self.d = _Draw(seed)
        self.p = profile

    def relation(self, budget: int):
        """A relation expression of size at most budget, or None."""
        p, d = self.p, self.d
        options = [Name(r) for r in p.relations]
        if p.allow_inverse:
            options += [Inverse(r) for r in p.relations]
        rel = d.pick(options)
        if p.allow_intersection and budget >= 3 and d.chance(0.3):
            rel = make_intersection([rel, d.pick(options)])
        return rel if rel_size(rel) <= budget else None

    def modal(self, budget: int):
        p, d = self.p, self.d
        kinds = ["ge", "le"] + (["dia", "box"] if p.allow_legacy else [])
        kind = d.pick(kinds)
        lo = 1 if kind == "ge" else 0
        hi = p.max_n - 1 if kind == "dia" else p.max_n
        n = lo + d.below(hi - lo + 1)
        # budget left for relation and body after the node and the number
        rest = budget - 1 - bit_length(n)
        rel = self.relation(rest - 1)
        if rel is None:
            return None
        body = self.formula(rest - rel_size(rel))
        cls = {"ge": Geq, "le": Leq, "dia": Dia, "box": Box}[kind]
        if kind in ("dia", "box"):
            rel = Name(rel.r) if not isinstance(rel, Name) else rel
        return cls(rel, n, body)

    def formula(self, budget: int, root: bool = False) -> Formula:
        p, d = self.p, self.d
        if budget <= 2 or (not root and d.chance(LEAF_PROBABILITY)):
            return self.literal(budget)
        ops = ["and", "or", "modal"]
        if p.allow_negation:
            ops.append("not")
        op = d.pick(ops)
        if op == "not":
            return Not(self.formula(budget - 1, root))
        if op in ("and", "or"):
            left = 1 + d.below(budget - 2)
            cls = And if op == "and" else Or
            return cls(self.formula(left), self.formula(budget - 1 - left))
        if budget >= 4:
            f = self.modal(budget)
            if f is not None:
                return f
        return self.literal(budget)

    def literal(self, budget: int) -> Formula:
        a = Atom(self.d.pick(self.p.atoms))
        if budget >= 2 and self.p.allow_negation and self.d.below(2):
            return Not(a)
        return a


def generate(seed: int, profile: Profile = Profile()) -> Formula:
    """A formula of size at most ``profile.max_size``; pure in (seed, profile)."""
    g = _Generator(seed, profile)
    low = max(1, (2 * profile.max_size) // 3)
    budget = low + g.d.below(profile.max_size - low + 1)
    return g.formula(budget, root=True)


def corpus(count: int, profile: Profile = Profile(), first_seed: int = 1) -> list[Formula]:
    return [generate(s, profile) for s in range(first_seed, first_seed + count)]
