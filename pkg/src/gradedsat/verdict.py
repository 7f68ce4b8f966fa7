"""Results, statistics and resource limits shared by all engines."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .kripke import KripkeStructure


@dataclass
class Limits:
    max_steps: int = 10**8
    max_depth: int = 10**4
    max_constraints: int = 10**6


@dataclass
class Stats:
    max_depth: int = 0
    peak_live_vars: int = 0
    nodes_created: int = 0
    backtracks: int = 0
    restarts: int = 0
    steps: int = 0

    def lines(self, verdict: str, with_restarts: bool = False) -> list[str]:
        keys = ["max_depth", "peak_live_vars", "nodes_created", "backtracks"]
        if with_restarts:
            keys.append("restarts")
        return [f"verdict={verdict}"] + [f"{k}={getattr(self, k)}" for k in keys]


class ResourceLimitExceeded(RuntimeError):
    def __init__(self, reason: str, stats: Optional[Stats] = None):
        super().__init__(reason)
        self.reason = reason
        self.stats = stats


@dataclass
class Verdict:
    sat: bool
    engine: str
    stats: Stats = field(default_factory=Stats)
    model: Optional[KripkeStructure] = None
    root: Optional[str] = None
    # final constraint system, kept by the engines that build one explicitly
    system: object = None

    @property
    def status(self) -> str:
        return "SAT" if self.sat else "UNSAT"

    def __str__(self) -> str:
        return self.status


class Budget:
    """Step counter that raises once the step limit is used up."""

    __slots__ = ("stats", "limit")

    def __init__(self, stats: Stats, limits: Limits):
        self.stats = stats
        self.limit = limits.max_steps

    def tick(self, n: int = 1) -> None:
        self.stats.steps += n
        if self.stats.steps > self.limit:
            raise ResourceLimitExceeded(f"step limit {self.limit} exceeded", self.stats)
