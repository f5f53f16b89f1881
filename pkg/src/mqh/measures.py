"""Discrete target measures on {1..N}, stochastic dominance and the dual cone.

Levels are numbered 1..N in docstrings; arrays are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, NotNormalized, ZeroAtom

SUM_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability vector with strictly positive atoms on levels 1..N."""

    atoms: np.ndarray = field(repr=False)

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float).ravel()
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)

    @property
    def n_levels(self) -> int:
        return self.atoms.size

    @property
    def survival_curve(self) -> np.ndarray:
        """F(1), ..., F(N) with F(n) = mass of levels >= n."""
        tail = np.cumsum(self.atoms[::-1])[::-1]
        # pin F(1) to exactly one; atoms are validated to sum to 1 within SUM_TOL
        tail[0] = 1.0
        return tail

    def __repr__(self):
        return f"DiscreteMeasure({self.atoms.tolist()})"


def validate_measure(atoms: Sequence[float]) -> DiscreteMeasure:
    """Check ``atoms`` and wrap them in a :class:`DiscreteMeasure`.

    Raises
    ------
    ZeroAtom
        If any atom is <= 0.
    NotNormalized
        If the atoms do not sum to one within 1e-12.
    """
    arr = np.asarray(atoms, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("a measure needs at least one atom")
    if not np.all(np.isfinite(arr)):
        raise ValueError("atoms must be finite")
    if np.any(arr <= 0.0):
        raise ZeroAtom(f"atoms must be strictly positive, got {arr.tolist()}")
    total = float(np.sum(arr))
    if abs(total - 1.0) > SUM_TOL:
        raise NotNormalized(f"atoms sum to {total!r}, expected 1")
    return DiscreteMeasure(arr)


def survival(m: DiscreteMeasure, n: int) -> float:
    """Mass of the levels ``n, n+1, ..., N`` (1-based ``n``)."""
    if not 1 <= n <= m.n_levels:
        raise IndexOutOfRange(f"level {n} outside 1..{m.n_levels}")
    return float(m.survival_curve[n - 1])


def dominates(nu: DiscreteMeasure, mu: DiscreteMeasure, tol: float = SUM_TOL) -> bool:
    """First order stochastic dominance ``nu >= mu`` (survival functions compared pointwise)."""
    if nu.n_levels != mu.n_levels:
        raise DimensionMismatch(f"{nu.n_levels} vs {mu.n_levels} levels")
    return bool(np.all(nu.survival_curve >= mu.survival_curve - tol))


def _pool_adjacent_violators(y: np.ndarray) -> np.ndarray:
    # unweighted, nondecreasing fit; blocks kept as (sum, count) stacks
    sums: list[float] = []
    counts: list[int] = []
    for value in y:
        sums.append(float(value))
        counts.append(1)
        while len(sums) > 1 and sums[-2] * counts[-1] > sums[-1] * counts[-2]:
            s, c = sums.pop(), counts.pop()
            sums[-1] += s
            counts[-1] += c
    return np.repeat(np.array(sums) / np.array(counts), counts)


def project_to_cone(v: Sequence[float]) -> np.ndarray:
    """Euclidean projection onto ``{z : 0 <= z_1 <= ... <= z_k}``.

    Isotonic regression followed by clipping at zero. Clipping after the fit is
    exact here because the lower bound is constant, so it commutes with the
    ordering constraint.
    """
    arr = np.asarray(v, dtype=float).ravel()
    if arr.size == 0:
        return arr.copy()
    if np.all(np.diff(arr) >= 0.0) and arr[0] >= 0.0:
        return arr.copy()
    return np.maximum(_pool_adjacent_violators(arr), 0.0)


def in_cone(z: Sequence[float], tol: float = 1e-12) -> bool:
    arr = np.asarray(z, dtype=float).ravel()
    if arr.size == 0:
        return True
    return bool(arr[0] >= -tol and np.all(np.diff(arr) >= -tol))
