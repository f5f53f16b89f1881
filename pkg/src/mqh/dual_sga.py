"""Reduced semi-discrete dual, its supergradient, and projected ADAM ascent.

For a ladder ``g^1 <= ... <= g^N`` and target probabilities ``p^1..p^N`` the
price is ``E[Gamma g^1(X)] + sup_zeta w(zeta)`` where ``zeta`` ranges over the
ordered nonnegative cone and::

    W(zeta, row) = sum_n zeta_n p^{n+1} + min(0, min_n(Ht_n - zeta_n))
    Ht_n         = Gamma * (g^{n+1}(X) - g^1(X)),   n = 1..N-1

``w = E[W]`` is concave and piecewise linear in ``zeta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionMismatch, EmptyBatch
from .market import BsParams, SeededStream, simulate_bs, terminal_from_brownian
from .measures import DiscreteMeasure, project_to_cone
from .payoffs import PayoffLadder, build_costs, reduced_costs

TRAIN_STREAM = 1
PILOT_STREAM = 2
EVAL_STREAM = 3


def _atoms(mu) -> np.ndarray:
    # dual formulas make sense for zero atoms too (the figure grid hits p=0 and p=1)
    if isinstance(mu, DiscreteMeasure):
        return mu.atoms
    return np.asarray(mu, dtype=float).ravel()


def _check_dims(zeta: np.ndarray, rows: np.ndarray, p: np.ndarray):
    k = p.size - 1
    if zeta.shape[-1] != k or rows.shape[-1] != k:
        raise DimensionMismatch(
            f"expected {k} dual coordinates, got zeta {zeta.shape[-1]} and rows {rows.shape[-1]}"
        )


def dual_sample_value(zeta, reduced_row, mu) -> np.ndarray | float:
    """Dual integrand ``W(zeta, row)``; ``reduced_row`` may be a single row or a matrix of rows."""
    p = _atoms(mu)
    zeta = np.asarray(zeta, dtype=float)
    rows = np.asarray(reduced_row, dtype=float)
    _check_dims(zeta, rows, p)
    linear = float(zeta @ p[1:])
    if p.size == 1:
        out = np.zeros(rows.shape[:-1])
    else:
        out = linear + np.minimum(np.min(rows - zeta, axis=-1), 0.0)
    return float(out) if out.ndim == 0 else out


def supergradient_sample(zeta, reduced_row, mu) -> np.ndarray:
    """``p^{n+1} - 1[n is the first index attaining a negative minimum of Ht - zeta]``.

    Works row-wise on a matrix of rows and returns one supergradient per row.
    """
    p = _atoms(mu)
    zeta = np.asarray(zeta, dtype=float)
    rows = np.asarray(reduced_row, dtype=float)
    _check_dims(zeta, rows, p)
    single = rows.ndim == 1
    rows = np.atleast_2d(rows)
    grad = np.broadcast_to(p[1:], rows.shape).copy()
    if p.size > 1:
        diff = rows - zeta
        first = np.argmin(diff, axis=1)  # argmin returns the smallest minimizing index
        active = diff[np.arange(len(diff)), first] < 0.0
        grad[np.flatnonzero(active), first[active]] -= 1.0
    return grad[0] if single else grad


def dual_estimate(zeta, costs, mu) -> tuple[float, float]:
    """Sample mean and standard error of ``W(zeta, .)`` over the rows of ``costs``.

    ``costs`` is a :class:`~mqh.payoffs.CostMatrix` or a reduced-cost array.
    """
    rows = getattr(costs, "reduced", costs)
    rows = np.asarray(rows, dtype=float)
    if rows.shape[0] == 0:
        raise EmptyBatch("no samples")
    vals = dual_sample_value(zeta, rows, mu)
    return _mean_se(np.atleast_1d(vals))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    mean = float(np.mean(x))
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(x, ddof=1) / math.sqrt(n))


def empirical_dual_max(reduced: np.ndarray, mu) -> np.ndarray:
    """Exact maximizer over the cone of the sample-average dual on ``reduced``.

    Solved as a linear program in ``(zeta, t)`` with ``t_i <= 0`` and
    ``t_i <= Ht_{i,n} - zeta_n``.
    """
    p = _atoms(mu)
    k = p.size - 1
    m = reduced.shape[0]
    if k == 0:
        return np.zeros(0)
    # minimize -(p' zeta + mean t)
    c = np.concatenate([-p[1:], -np.full(m, 1.0 / m)])
    # t_i + zeta_n <= Ht_{i,n}
    rows_i = np.repeat(np.arange(m), k)
    cols_n = np.tile(np.arange(k), m)
    a = np.zeros((m * k, k + m))
    a[np.arange(m * k), cols_n] = 1.0
    a[np.arange(m * k), k + rows_i] = 1.0
    b = reduced.reshape(-1)
    # ordering: zeta_{n} - zeta_{n+1} <= 0
    order = np.zeros((k - 1, k + m))
    for n in range(k - 1):
        order[n, n], order[n, n + 1] = 1.0, -1.0
    a_ub = np.vstack([a, order])
    b_ub = np.concatenate([b, np.zeros(k - 1)])
    bounds = [(0, None)] * k + [(None, 0)] * m
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"pilot linear program failed: {res.message}")
    return project_to_cone(res.x[:k])


@dataclass(frozen=True)
class SgaConfig:
    max_iter: int = 100_000
    batch: int = 256
    eta0: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    stop_tol: float = 1e-6
    seed: int = 0
    init: str = "pilot_lp"
    pilot_size: int = 4096
    record_trace: bool = False

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.epsilon <= 0 or self.stop_tol <= 0 or self.eta0 <= 0:
            raise ValueError("epsilon, stop_tol and eta0 must be positive")
        if self.max_iter < 1 or self.batch < 1:
            raise ValueError("max_iter and batch must be >= 1")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {sorted(INITS)}, got {self.init!r}")


@dataclass(frozen=True)
class SgaResult:
    zeta_star: np.ndarray
    iterations_used: int
    stopped_early: bool
    zeta0: np.ndarray = field(repr=False, default=None)
    trace: list | None = field(repr=False, default=None)


@dataclass(frozen=True)
class PriceEstimate:
    value: float
    std_error: float
    base_term: float
    dual_term: float
    sample_count: int


def _pilot_reduced(config: SgaConfig, params: BsParams, ladder: PayoffLadder) -> np.ndarray:
    size = config.pilot_size
    batch = simulate_bs(params, size, SeededStream(config.seed, PILOT_STREAM))
    return reduced_costs(ladder, batch.x_terminal, batch.kernel)


def _init_pilot_mean(config, params, ladder, p):
    return project_to_cone(_pilot_reduced(config, params, ladder).mean(axis=0))


def _init_random(config, params, ladder, p):
    ht = _pilot_reduced(config, params, ladder)
    rng = SeededStream(config.seed, PILOT_STREAM).generator()
    return project_to_cone(rng.uniform(0.0, ht.max(), size=ht.shape[1]))


def _init_pilot_lp(config, params, ladder, p):
    return empirical_dual_max(_pilot_reduced(config, params, ladder), p)


INITS = {
    "pilot_lp": _init_pilot_lp,
    "pilot_mean": _init_pilot_mean,
    "random": _init_random,
}

_CHUNK = 256  # iterations of normals drawn per generator call


def adam_run(
    config: SgaConfig,
    params: BsParams,
    ladder: PayoffLadder,
    mu,
    zeta0: Sequence[float] | None = None,
) -> SgaResult:
    """Projected ADAM ascent on ``w`` with step ``eta0 / m``.

    Every iteration draws a fresh batch of ``config.batch`` scenarios from the
    training stream, averages the per-sample supergradients, takes the bias
    corrected ADAM step uphill and projects back onto the cone. Stops when
    the sup-norm of the move falls below ``stop_tol``.
    """
    p = _atoms(mu)
    if p.size != ladder.n_levels:
        raise DimensionMismatch(f"measure has {p.size} levels, ladder {ladder.n_levels}")
    k = p.size - 1
    if k == 0:
        empty = np.zeros(0)
        return SgaResult(empty, 0, False, empty, [] if config.record_trace else None)

    if zeta0 is None:
        zeta = INITS[config.init](config, params, ladder, p)
    else:
        zeta = project_to_cone(zeta0)
    start = zeta.copy()

    b1, b2, eps = config.beta1, config.beta2, config.epsilon
    m1 = np.zeros(k)
    m2 = np.zeros(k)
    p_up = p[1:]
    sqrt_t = math.sqrt(params.horizon)
    rng = SeededStream(config.seed, TRAIN_STREAM).generator()
    trace = [] if config.record_trace else None
    stopped = False
    it = 0
    block = None
    pos = _CHUNK
    ar = np.arange(config.batch)

    for it in range(1, config.max_iter + 1):
        if pos == _CHUNK:
            w = sqrt_t * rng.standard_normal((_CHUNK, config.batch))
            x, gamma = terminal_from_brownian(params, w.reshape(-1))
            block = reduced_costs(ladder, x, gamma).reshape(_CHUNK, config.batch, k)
            pos = 0
        rows = block[pos]
        pos += 1

        diff = rows - zeta
        first = np.argmin(diff, axis=1)
        active = diff[ar, first] < 0.0
        g = p_up - np.bincount(first[active], minlength=k) / config.batch

        m1 = b1 * m1 + (1.0 - b1) * g
        m2 = b2 * m2 + (1.0 - b2) * g * g
        m_hat = m1 / (1.0 - b1**it)
        v_hat = m2 / (1.0 - b2**it)
        eta = config.eta0 / it
        new = project_to_cone(zeta + eta * m_hat / (np.sqrt(v_hat) + eps))
        move = float(np.max(np.abs(new - zeta)))
        zeta = new
        if trace is not None:
            trace.append((zeta.copy(), move))
        if move < config.stop_tol:
            stopped = True
            break

    return SgaResult(zeta, it, stopped, start, trace)


def price_with_ci(
    zeta_star,
    params: BsParams,
    ladder: PayoffLadder,
    mu,
    eval_count: int = 1_000_000,
    stream: SeededStream | None = None,
) -> PriceEstimate:
    """Monte-Carlo price ``E[Gamma g^1] + w(zeta_star)`` on a fresh batch.

    The standard error comes from the combined per-sample integrand, so it
    accounts for the correlation between the two terms.
    """
    if eval_count < 1:
        raise EmptyBatch("eval_count must be >= 1")
    stream = stream or SeededStream(0, EVAL_STREAM)
    batch = simulate_bs(params, eval_count, stream)
    costs = build_costs(ladder, batch)
    return price_on_costs(zeta_star, costs, mu)


def price_on_costs(zeta_star, costs, mu) -> PriceEstimate:
    p = _atoms(mu)
    base = costs.base
    if p.size == 1:
        dual = np.zeros_like(base)
    else:
        dual = dual_sample_value(zeta_star, costs.reduced, p)
    _, se = _mean_se(base + dual)
    base_term, dual_term = float(np.mean(base)), float(np.mean(dual))
    return PriceEstimate(
        value=base_term + dual_term,
        std_error=se,
        base_term=base_term,
        dual_term=dual_term,
        sample_count=len(base),
    )
