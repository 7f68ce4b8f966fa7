"""Depth-first driver for completion calculi that keep the whole system.

A calculus supplies ``step(S)``, which either changes ``S`` in place and
returns ``None``, returns a list of alternative successor systems (a
don't-know choice, tried in order), or returns ``DONE`` when no rule applies.
"""
from __future__ import annotations

from typing import Callable, Optional, Union

from .csys import ClashReason, ConstraintSystem
from .verdict import Budget, Limits, ResourceLimitExceeded, Stats

DONE = "done"

Step = Callable[[ConstraintSystem], Union[None, str, list]]


def search(
    start: ConstraintSystem,
    step: Step,
    early_clash: Callable[[ConstraintSystem], Optional[ClashReason]],
    final_clash: Callable[[ConstraintSystem], Optional[ClashReason]],
    stats: Stats,
    limits: Limits,
) -> Optional[ConstraintSystem]:
    """First complete clash-free system in chronological order, or None."""
    budget = Budget(stats, limits)
    stack = [start]
    while stack:
        S = stack.pop()
        while True:
            budget.tick()
            if S.n_constraints > limits.max_constraints:
                raise ResourceLimitExceeded(
                    f"constraint limit {limits.max_constraints} exceeded", stats
                )
            stats.peak_live_vars = max(stats.peak_live_vars, len(S.labels))
            if early_clash(S) is not None:
                stats.backtracks += 1
                break
            out = step(S)
            if out is None:
                continue
            if out == DONE:
                if final_clash(S) is None:
                    return S
                stats.backtracks += 1
                break
            # don't-know choice: first alternative is explored first
            stack.extend(reversed(out))
            break
    return None


def var_depth(S: ConstraintSystem, x: int) -> int:
    d = 1
    while x in S.parent:
        x = S.parent[x]
        d += 1
    return d


def check_room(S: ConstraintSystem, extra: int, stats: Stats, limits: Limits) -> None:
    """Refuse a bulk addition that would pass the constraint limit."""
    if S.n_constraints + extra > limits.max_constraints:
        raise ResourceLimitExceeded(
            f"constraint limit {limits.max_constraints} exceeded", stats
        )
