"""Monotone payoff ladders and the transport costs they induce."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyBatch, MonotonicityViolation
from .market import ScenarioBatch

KINDS = ("zero", "call", "put")


@dataclass(frozen=True)
class Level:
    """One rung ``g(x) = vanilla(x; strike) + offset``; ``kind='zero'`` drops the vanilla part."""

    kind: str = "zero"
    strike: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown payoff kind {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "call":
            return np.maximum(x - self.strike, 0.0) + self.offset
        if self.kind == "put":
            return np.maximum(self.strike - x, 0.0) + self.offset
        return np.zeros_like(x) + self.offset

    @property
    def slope_at_infinity(self) -> float:
        return 1.0 if self.kind == "call" else 0.0


def _dominated_everywhere(lo: Level, hi: Level) -> bool:
    # hi - lo is piecewise linear on [0, inf) with kinks at the strikes: check
    # the origin, every kink, and the slope beyond the last kink
    points = [0.0] + [lv.strike for lv in (lo, hi) if lv.kind != "zero" and lv.strike > 0]
    pts = np.array(points)
    if np.any(hi(pts) - lo(pts) < 0.0):
        return False
    return hi.slope_at_infinity >= lo.slope_at_infinity


@dataclass(frozen=True)
class PayoffLadder:
    """Claims ``G^1 <= ... <= G^N`` as functions of the terminal price.

    Build with :meth:`pnl` or :meth:`from_levels`; monotonicity is checked
    exactly at construction.
    """

    levels: tuple[Level, ...]
    form: str = "levels"
    base: Level | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.levels) == 0:
            raise ValueError("a ladder needs at least one level")
        for n, (lo, hi) in enumerate(zip(self.levels[:-1], self.levels[1:]), start=1):
            if not _dominated_everywhere(lo, hi):
                raise MonotonicityViolation(f"level {n + 1} is below level {n} for some price")

    @classmethod
    def pnl(cls, kind: str, strike: float, offsets: Sequence[float]) -> "PayoffLadder":
        """``G^n = xi + offsets[n]`` with ``xi`` a call or put and offsets strictly increasing."""
        offsets = [float(g) for g in offsets]
        if any(b <= a for a, b in zip(offsets[:-1], offsets[1:])):
            raise MonotonicityViolation(f"offsets must be strictly increasing, got {offsets}")
        base = Level(kind, strike, 0.0)
        return cls(tuple(Level(kind, strike, g) for g in offsets), form="pnl", base=base)

    @classmethod
    def from_levels(cls, levels: Sequence[Level]) -> "PayoffLadder":
        return cls(tuple(levels))

    @classmethod
    def quantile_hedge(cls, kind: str, strike: float) -> "PayoffLadder":
        """Classical quantile hedging: ``g^1 = 0`` and ``g^2`` the vanilla payoff."""
        return cls((Level("zero"), Level(kind, strike)))

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([lv.offset for lv in self.levels])

    def values(self, x) -> np.ndarray:
        """Payoff matrix of shape ``x.shape + (N,)``."""
        x = np.asarray(x, dtype=float)
        return np.stack([lv(x) for lv in self.levels], axis=-1)


def evaluate_ladder(ladder: PayoffLadder, x: float) -> np.ndarray:
    """Payoffs of every level at terminal price ``x``."""
    if x < 0:
        raise ValueError("terminal price must be >= 0")
    out = ladder.values(x)
    if np.any(np.diff(out) < 0):
        raise MonotonicityViolation(f"ladder decreasing at x={x}")
    return out


@dataclass(frozen=True)
class CostMatrix:
    """``values[i, n] = Gamma_i * G^n_i`` and ``reduced[i, n] = values[i, n+1] - values[i, 0]``."""

    values: np.ndarray = field(repr=False)
    reduced: np.ndarray = field(repr=False)

    @property
    def base(self) -> np.ndarray:
        return self.values[:, 0]

    def __len__(self):
        return self.values.shape[0]


def reduced_costs(ladder: PayoffLadder, x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """``Gamma * (g^{n+1}(x) - g^1(x))`` for n = 1..N-1, without forming the full matrix."""
    g = ladder.values(x)
    return kernel[:, None] * (g[:, 1:] - g[:, :1])


def build_costs(ladder: PayoffLadder, batch: ScenarioBatch) -> CostMatrix:
    if len(batch) == 0:
        raise EmptyBatch("cannot build costs on an empty batch")
    g = ladder.values(batch.x_terminal)
    if np.any(np.diff(g, axis=1) < 0):
        raise MonotonicityViolation("ladder decreasing on a sampled terminal price")
    gamma = np.asarray(batch.kernel)[:, None]
    values = gamma * g
    reduced = gamma * (g[:, 1:] - g[:, :1])
    return CostMatrix(values, reduced)
