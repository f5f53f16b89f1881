"""Independent ground truth for the SGA pricer.

* closed form of the PnL distribution hedging price (comonotone coupling of
  the kernel with the offset levels) and its Monte-Carlo counterpart;
* exact one dimensional dual for classical quantile hedging;
* exact transport on finite probability spaces: a rational transportation
  simplex, brute force over Monge maps and the saturation check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .errors import DegenerateKernel, DimensionMismatch, EmptyBatch, InfeasibleInstance, MonotonicityViolation
from .market import BsParams, ScenarioBatch, bs_vanilla_price
from .measures import DiscreteMeasure
from .payoffs import Level, PayoffLadder


def _atoms(mu) -> np.ndarray:
    if isinstance(mu, DiscreteMeasure):
        return mu.atoms
    return np.asarray(mu, dtype=float).ravel()


def _check_offsets(gamma, p):
    gamma = np.asarray(gamma, dtype=float).ravel()
    if gamma.size != p.size:
        raise DimensionMismatch(f"{gamma.size} offsets for {p.size} levels")
    if np.any(np.diff(gamma) <= 0):
        raise MonotonicityViolation("offsets must be strictly increasing")
    return gamma


def replication_price(params: BsParams, kind: str, strike: float) -> float:
    """``E[Gamma_T xi]`` for a vanilla ``xi``.

    The kernel carries no discount factor, so this is the Black-Scholes price
    compounded to the horizon; the two agree when the rate is zero.
    """
    return math.exp(params.rate * params.horizon) * bs_vanilla_price(params, kind, strike)


def level_kernel_masses(params: BsParams, mu) -> np.ndarray:
    """``E[Gamma_T 1{chi* = n}]`` for the comonotone level assignment ``chi*``.

    Low kernel values (good states) get the high levels. With
    ``A_n = p^1 + ... + p^n`` and ``a = |risk premium| sqrt(T)`` the masses are
    ``Phi(Phi^{-1}(A_n) + a) - Phi(Phi^{-1}(A_{n-1}) + a)``; the sign of the
    premium only flips which Brownian tail is cheap, not the masses.
    """
    lam = params.risk_premium
    if lam == 0.0:
        raise DegenerateKernel("zero risk premium: the kernel is constant and the coupling is not unique")
    p = _atoms(mu)
    cum = np.concatenate([[0.0], np.cumsum(p)])
    cum[-1] = 1.0
    shifted = norm.cdf(norm.ppf(cum) + abs(lam) * math.sqrt(params.horizon))
    return np.diff(shifted)


def pnl_ot_semianalytic(params: BsParams, strike: float, gamma: Sequence[float], mu, kind: str = "call") -> float:
    """Closed-form price of ``xi + gamma(chi*)`` with ``xi`` a vanilla claim."""
    p = _atoms(mu)
    gamma = _check_offsets(gamma, p)
    return replication_price(params, kind, strike) + float(gamma @ level_kernel_masses(params, p))


def _comonotone_levels(kernel: np.ndarray, p: np.ndarray) -> np.ndarray:
    # rank samples by -kernel; the empirical quantile block (A_{n-1}, A_n] gets level n
    m = kernel.size
    order = np.argsort(-kernel, kind="stable")
    u = (np.arange(1, m + 1)) / m
    cum = np.cumsum(p)
    cum[-1] = 1.0
    ranked_levels = np.searchsorted(cum, u - 1e-12, side="left")
    levels = np.empty(m, dtype=int)
    levels[order] = np.minimum(ranked_levels, p.size - 1)
    return levels


def pnl_ot_mc(batch: ScenarioBatch, strike: float, gamma: Sequence[float], mu, kind: str = "call") -> tuple[float, float]:
    """Empirical comonotone coupling estimate of the PnL hedging price.

    A constant kernel makes every coupling optimal; ties are then broken by
    sample order, which is independent of the terminal prices.
    """
    if len(batch) == 0:
        raise EmptyBatch("empty batch")
    p = _atoms(mu)
    gamma = _check_offsets(gamma, p)
    kernel = np.asarray(batch.kernel, dtype=float)
    xi = Level(kind, strike)(batch.x_terminal)
    levels = _comonotone_levels(kernel, p)
    vals = kernel * (xi + gamma[levels])
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return float(np.mean(vals)), se


def qh_dual_1d(batch: ScenarioBatch, ladder: PayoffLadder, p: float) -> float:
    """Exact maximum of ``zeta p + mean(min(H - zeta, 0))`` over ``zeta >= 0``.

    ``H = Gamma g^2(X)`` on the batch, with ``g^1 = 0`` required. The objective
    is concave and piecewise linear with kinks at the sample values, so it is
    evaluated at every kink (and at zero) in one sorted sweep.
    """
    if ladder.n_levels != 2:
        raise DimensionMismatch("qh_dual_1d needs a two level ladder")
    if ladder.levels[0] != Level("zero"):
        raise ValueError("qh_dual_1d needs g^1 = 0")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if len(batch) == 0:
        raise EmptyBatch("empty batch")
    h = np.sort(np.asarray(batch.kernel) * ladder.levels[1](batch.x_terminal))
    m = h.size
    below = np.concatenate([[0.0], np.cumsum(h)[:-1]])
    j = np.arange(m)
    # at zeta = h_j exactly the j smaller samples contribute (h_i - h_j)
    vals = h * p + (below - j * h) / m
    return float(max(0.0, vals.max()))


def qh_quantile_level(batch: ScenarioBatch, ladder: PayoffLadder, p: float) -> float:
    """Empirical ``p``-quantile of ``Gamma g^2(X)``: the optimal dual point."""
    h = np.sort(np.asarray(batch.kernel) * ladder.levels[1](batch.x_terminal))
    if p <= 0:
        return 0.0
    return float(h[min(h.size - 1, math.ceil(p * h.size) - 1)])


# ---------------------------------------------------------------------------
# finite probability spaces


@dataclass(frozen=True)
class FiniteInstance:
    """Finite sample space with weights, a cost matrix ``cost[omega, n]`` and a target law."""

    omega_weights: np.ndarray = field(repr=False)
    cost: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.omega_weights, dtype=float).ravel()
        c = np.atleast_2d(np.asarray(self.cost, dtype=float))
        p = _atoms(self.mu).astype(float)
        if c.shape != (w.size, p.size):
            raise DimensionMismatch(f"cost shape {c.shape} does not match ({w.size}, {p.size})")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("omega weights must be positive and sum to 1")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("mu must be a probability vector")
        object.__setattr__(self, "omega_weights", w)
        object.__setattr__(self, "cost", c)
        object.__setattr__(self, "mu", p)

    @property
    def shape(self) -> tuple[int, int]:
        return self.cost.shape

    def rows_monotone(self) -> bool:
        return bool(np.all(np.diff(self.cost, axis=1) >= 0))

    def with_target(self, mu) -> "FiniteInstance":
        return FiniteInstance(self.omega_weights, self.cost, mu)

    def to_dict(self) -> dict:
        return {
            "omega_weights": self.omega_weights.tolist(),
            "cost": self.cost.tolist(),
            "mu": self.mu.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteInstance":
        extra = set(d) - {"omega_weights", "cost", "mu"}
        if extra:
            raise ValueError(f"unknown instance keys: {sorted(extra)}")
        return cls(np.array(d["omega_weights"]), np.array(d["cost"]), np.array(d["mu"]))


@dataclass(frozen=True)
class FiniteSolution:
    primal_value: float
    assignment: np.ndarray = field(repr=False)
    dual_value: float
    dual_potentials: np.ndarray

    def is_integral(self, tol: float = 1e-12) -> bool:
        """True when every state is sent to a single level."""
        return bool(np.all((self.assignment < tol) | (self.assignment > 1 - tol)))


def _normalized_fractions(x: np.ndarray) -> list[Fraction]:
    fr = [Fraction(float(v)) for v in x]
    total = sum(fr)
    return [f / total for f in fr]


def _transport_simplex(supply: list[Fraction], demand: list[Fraction], cost: list[list[Fraction]]):
    """Exact transportation simplex (u-v method) with Bland's rule.

    Returns the optimal flow as a dict ``{(i, j): amount}`` over basic cells
    together with row and column potentials.
    """
    m, n = len(supply), len(demand)
    # northwest corner start; keeps exactly m + n - 1 basic cells
    flow: dict[tuple[int, int], Fraction] = {}
    s, d = list(supply), list(demand)
    i = j = 0
    while True:
        q = min(s[i], d[j])
        flow[(i, j)] = q
        s[i] -= q
        d[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if (s[i] == 0 and i < m - 1) or j == n - 1:
            i += 1
        else:
            j += 1

    for _ in range(10_000):
        u, v = _potentials(flow, cost, m, n)
        entering = None
        for a in range(m):
            for b in range(n):
                if (a, b) not in flow and cost[a][b] - u[a] - v[b] < 0:
                    entering = (a, b)
                    break
            if entering is not None:
                break
        if entering is None:
            return flow, u, v
        cycle = _cycle(flow, entering)
        minus = cycle[1::2]
        theta = min(flow[c] for c in minus)
        leaving = min(c for c in minus if flow[c] == theta)
        for k, c in enumerate(cycle):
            if k == 0:
                flow[c] = theta
            elif k % 2:
                flow[c] -= theta
            else:
                flow[c] += theta
        del flow[leaving]
    raise RuntimeError("transportation simplex did not terminate")


def _potentials(flow, cost, m, n):
    u: list[Fraction | None] = [None] * m
    v: list[Fraction | None] = [None] * n
    u[0] = Fraction(0)
    by_row: dict[int, list[int]] = {}
    by_col: dict[int, list[int]] = {}
    for a, b in flow:
        by_row.setdefault(a, []).append(b)
        by_col.setdefault(b, []).append(a)
    stack = [("r", 0)]
    while stack:
        kind, idx = stack.pop()
        if kind == "r":
            for b in by_row.get(idx, []):
                if v[b] is None:
                    v[b] = cost[idx][b] - u[idx]
                    stack.append(("c", b))
        else:
            for a in by_col.get(idx, []):
                if u[a] is None:
                    u[a] = cost[a][idx] - v[idx]
                    stack.append(("r", a))
    if any(x is None for x in u) or any(x is None for x in v):
        raise RuntimeError("basis is not a spanning tree")
    return u, v


def _cycle(flow, entering):
    # the unique cycle through `entering` in basis + {entering}, alternating row/column moves
    cells = set(flow) | {entering}
    by_row: dict[int, list] = {}
    by_col: dict[int, list] = {}
    for c in cells:
        by_row.setdefault(c[0], []).append(c)
        by_col.setdefault(c[1], []).append(c)

    def search(path, along_row):
        cur = path[-1]
        nbrs = by_row[cur[0]] if along_row else by_col[cur[1]]
        for nxt in nbrs:
            if nxt == cur:
                continue
            if nxt == entering and not along_row and len(path) >= 4:
                return path
            if nxt in path:
                continue
            found = search(path + [nxt], not along_row)
            if found:
                return found
        return None

    cyc = search([entering], True)
    if cyc is None:
        raise RuntimeError("no pivot cycle found")
    return cyc


def kantorovich_dual_value(inst: FiniteInstance, potentials: Sequence[float]) -> float:
    """``E[min_n(H^n - Phi^n)] + sum_n Phi^n p^n`` for any potentials ``Phi``."""
    phi = np.asarray(potentials, dtype=float)
    return float(inst.omega_weights @ np.min(inst.cost - phi, axis=1) + phi @ inst.mu)


def finite_kp_exact(inst: FiniteInstance) -> FiniteSolution:
    """Exact optimal randomized assignment on a finite space, with optimal potentials.

    Solved in rational arithmetic; float inputs are converted exactly, and
    weights and target are renormalized to sum to one exactly.
    """
    m, n = inst.shape
    if m * n > 10_000:
        raise ValueError("instance too large for the exact solver")
    supply = _normalized_fractions(inst.omega_weights)
    demand = _normalized_fractions(inst.mu)
    cost = [[Fraction(float(c)) for c in row] for row in inst.cost]
    # zero-demand columns are fine: they stay at zero flow
    try:
        flow, u, v = _transport_simplex(supply, demand, cost)
    except RuntimeError as exc:
        raise InfeasibleInstance(str(exc)) from exc
    primal = sum(q * cost[a][b] for (a, b), q in flow.items())
    plan = np.zeros((m, n))
    for (a, b), q in flow.items():
        plan[a, b] = float(q / supply[a])
    # anchor potentials at the first level; any additive shift is equivalent
    phi = np.array([float(x - v[0]) for x in v])
    return FiniteSolution(
        primal_value=float(primal),
        assignment=plan,
        dual_value=kantorovich_dual_value(inst, phi),
        dual_potentials=phi,
    )


MONGE_INFEASIBLE = math.inf


def finite_mp_exact(inst: FiniteInstance, relax: bool = False, tol: float = 1e-12) -> float:
    """Cheapest deterministic level map by enumeration of all ``N**M`` maps.

    With ``relax`` the law of the map only has to dominate the target.
    Returns ``MONGE_INFEASIBLE`` (+inf) when no map qualifies.
    """
    m, n = inst.shape
    if n**m > 1_000_000:
        raise ValueError("too many maps to enumerate")
    maps = np.array(list(itertools.product(range(n), repeat=m)), dtype=np.int64).reshape(-1, m)
    costs = inst.cost[np.arange(m), maps] @ inst.omega_weights
    laws = np.zeros((maps.shape[0], n))
    for w_idx in range(m):
        laws[np.arange(maps.shape[0]), maps[:, w_idx]] += inst.omega_weights[w_idx]
    if relax:
        surv_law = np.cumsum(laws[:, ::-1], axis=1)[:, ::-1]
        surv_mu = np.cumsum(inst.mu[::-1])[::-1]
        ok = np.all(surv_law >= surv_mu - tol, axis=1)
    else:
        ok = np.all(np.abs(laws - inst.mu) <= tol, axis=1)
    if not ok.any():
        return MONGE_INFEASIBLE
    return float(costs[ok].min())


def dominating_grid(mu: np.ndarray, grid_step: float) -> list[np.ndarray]:
    """All laws on the grid ``grid_step * Z`` of the simplex that dominate ``mu``."""
    denom = round(1.0 / grid_step)
    if abs(denom * grid_step - 1.0) > 1e-12:
        raise ValueError("grid_step must be 1/k for an integer k")
    n = mu.size
    surv_mu = np.cumsum(mu[::-1])[::-1]
    out = []
    for combo in itertools.combinations(range(denom + n - 1), n - 1):
        # stars and bars: counts of grid units per level
        bars = (-1,) + combo + (denom + n - 1,)
        counts = np.diff(bars) - 1
        nu = counts / denom
        if np.all(np.cumsum(nu[::-1])[::-1] >= surv_mu - 1e-12):
            out.append(nu)
    return out


def finite_saturation_check(inst: FiniteInstance, grid_step: float = 0.1, tol: float = 1e-9) -> bool:
    """Check that no dominating grid law is strictly cheaper to reach than the target."""
    if not inst.rows_monotone():
        raise MonotonicityViolation("saturation needs cost rows nondecreasing in the level")
    if inst.shape[1] > 4 or grid_step < 1 / 20 - 1e-15:
        raise ValueError("saturation check limited to N <= 4 and grid_step >= 1/20")
    base = finite_kp_exact(inst).primal_value
    for nu in dominating_grid(inst.mu, grid_step):
        if finite_kp_exact(inst.with_target(nu)).primal_value < base - tol:
            return False
    return True

