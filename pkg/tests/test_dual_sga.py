import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from mqh.dual_sga import (
    SgaConfig, adam_run, dual_estimate, dual_sample_value, empirical_dual_max, price_on_costs,
    price_with_ci, supergradient_sample,
)
from mqh.errors import DimensionMismatch, EmptyBatch
from mqh.market import SeededStream, bs_vanilla_price, simulate_bs
from mqh.measures import dominates, in_cone, project_to_cone, validate_measure
from mqh.oracles import qh_dual_1d, qh_quantile_level
from mqh.payoffs import PayoffLadder, build_costs

P3 = np.array([0.2, 0.3, 0.5])


def test_dual_value_examples():
    assert dual_sample_value([0.0, 0.0], [3.0, 5.0], P3) == 0.0
    # 1*0.3 + 3*0.5 + min((2-1)_-, (2-3)_-) = 1.8 - 1
    assert dual_sample_value([1.0, 3.0], [2.0, 2.0], P3) == pytest.approx(0.8, abs=1e-15)
    for z, h in [(0.5, 2.0), (3.0, 1.0)]:
        assert dual_sample_value([z], [h], [0.4, 0.6]) == pytest.approx(z * 0.6 + min(h - z, 0.0))
    with pytest.raises(DimensionMismatch):
        dual_sample_value([1.0], [1.0, 2.0], P3)


def test_supergradient_examples():
    np.testing.assert_array_equal(supergradient_sample([1.0, 2.0], [3.0, 5.0], P3), [0.3, 0.5])
    np.testing.assert_allclose(supergradient_sample([1.0, 3.0], [2.0, 2.0], P3), [0.3, -0.5])
    # tie H - zeta = (-1, -1): the first index wins
    np.testing.assert_allclose(supergradient_sample([3.0, 3.0], [2.0, 2.0], P3), [-0.7, 0.5])
    with pytest.raises(DimensionMismatch):
        supergradient_sample([1.0], [1.0, 2.0], P3)


def test_supergradient_matches_finite_differences(rng):
    # away from kinks the supergradient is the gradient
    h = 1e-6
    for _ in range(500):
        n = rng.integers(2, 6)
        p = rng.dirichlet(np.ones(n))
        z = np.sort(rng.uniform(0, 10, n - 1))
        row = rng.uniform(0, 12, n - 1)
        diffs = row - z
        srt = np.sort(diffs)
        if abs(srt[0]) < 1e-3 or (srt.size > 1 and srt[1] - srt[0] < 1e-3):
            continue
        fd = np.array([(dual_sample_value(z + h * e, row, p) - dual_sample_value(z - h * e, row, p)) / (2 * h)
                       for e in np.eye(n - 1)])
        np.testing.assert_allclose(supergradient_sample(z, row, p), fd, atol=1e-6)


def test_dual_properties(rng):
    for _ in range(2000):
        n = rng.integers(2, 6)
        p = rng.dirichlet(np.ones(n))
        row = np.sort(rng.exponential(10, n - 1))
        z1, z2 = (project_to_cone(rng.uniform(-2, 15, n - 1)) for _ in range(2))
        lam = rng.random()
        w1, w2 = dual_sample_value(z1, row, p), dual_sample_value(z2, row, p)
        assert dual_sample_value(lam * z1 + (1 - lam) * z2, row, p) >= lam * w1 + (1 - lam) * w2 - 1e-10
        assert w2 <= w1 + supergradient_sample(z1, row, p) @ (z2 - z1) + 1e-10
        assert w1 <= z1 @ p[1:] + 1e-10


def test_dual_estimate_examples():
    rows = np.array([[2.0, 2.0], [5.0, 5.0]])
    assert dual_estimate([0.0, 0.0], rows, P3) == (0.0, 0.0)
    # per-sample values 0.8 and 1.8
    assert dual_estimate([1.0, 3.0], rows, P3)[0] == pytest.approx(1.3)
    with pytest.raises(EmptyBatch):
        dual_estimate([1.0, 3.0], np.zeros((0, 2)), P3)


def _quad_dual(params, zeta, p):
    # zeta p + E[min(Gamma (X-K)_+ - zeta, 0)] by quadrature over the Brownian value
    lam, T = params.risk_premium, params.horizon

    def integrand(w):
        x = params.x0 * math.exp((params.drift - params.sigma**2 / 2) * T + params.sigma * w)
        g = math.exp(-lam * w - lam**2 * T / 2)
        return min(g * max(x - 100, 0.0) - zeta, 0.0) * norm.pdf(w, scale=math.sqrt(T))

    val, _ = integrate.quad(integrand, -10, 10, limit=400, points=[0.0])
    return zeta * p + val


def test_dual_estimate_against_quadrature_and_oracle(fig_params):
    ladder = PayoffLadder.quantile_hedge("call", 100)
    batch = simulate_bs(fig_params, 10**6, SeededStream(21))
    costs = build_costs(ladder, batch)
    for zeta, p in [(3.0, 0.6), (10.0, 0.9)]:
        mean, se = dual_estimate([zeta], costs, [1 - p, p])
        assert abs(mean - _quad_dual(fig_params, zeta, p)) <= 3 * se
    # at the empirical quantile the estimate is the exact 1-d maximum on the same batch
    for p in (0.5, 0.8):
        z = qh_quantile_level(batch, ladder, p)
        assert dual_estimate([z], costs, [1 - p, p])[0] == pytest.approx(qh_dual_1d(batch, ladder, p), abs=1e-9)


def test_empirical_dual_max_beats_grid(rng):
    rows = np.sort(rng.exponential(5, size=(200, 2)), axis=1)
    p = np.array([0.3, 0.3, 0.4])
    z = empirical_dual_max(rows, p)
    best = dual_estimate(z, rows, p)[0]
    grid = np.linspace(0, 20, 81)
    for a in grid:
        for b in grid[grid >= a]:
            assert dual_estimate([a, b], rows, p)[0] <= best + 1e-9


def test_adam_trivial_cases(fig_params):
    res = adam_run(SgaConfig(max_iter=100), fig_params, PayoffLadder.pnl("call", 100, [0]), [1.0])
    assert res.zeta_star.size == 0 and res.iterations_used == 0
    ladder = PayoffLadder.quantile_hedge("call", 100)
    res = adam_run(SgaConfig(max_iter=3000, batch=64), fig_params, ladder, np.array([1.0, 0.0]))
    np.testing.assert_allclose(res.zeta_star, 0.0, atol=1e-12)
    # other starts only drift down: the supergradient has no positive part when p = 0
    for init in ("pilot_mean", "random"):
        res = adam_run(SgaConfig(max_iter=3000, batch=64, init=init, record_trace=True),
                       fig_params, ladder, np.array([1.0, 0.0]))
        path = np.array([res.zeta0[0]] + [z[0] for z, _ in res.trace])
        assert np.all(np.diff(path) <= 0) and path[-1] < path[0]


def test_adam_result_invariants_and_determinism(fig_params):
    ladder = PayoffLadder.pnl("call", 100, [0, 10, 20])
    mu = validate_measure([0.2, 0.3, 0.5])
    cfg = SgaConfig(max_iter=500, batch=32, seed=3, record_trace=True, stop_tol=1e-12)
    a = adam_run(cfg, fig_params, ladder, mu)
    b = adam_run(cfg, fig_params, ladder, mu)
    assert a.zeta_star.tobytes() == b.zeta_star.tobytes()
    assert a.iterations_used == 500 and not a.stopped_early
    assert in_cone(a.zeta_star)
    assert all(in_cone(z) for z, _ in a.trace)
    moves = np.array([m for _, m in a.trace])
    np.testing.assert_array_less(moves[10:], 0.011)  # step never exceeds about eta0 / m * O(1)


def test_adam_moves_uphill_from_bad_start(fig_params):
    ladder = PayoffLadder.quantile_hedge("call", 100)
    mu = [0.3, 0.7]
    costs = build_costs(ladder, simulate_bs(fig_params, 10**5, SeededStream(2, 9)))
    start = [0.5]
    res = adam_run(SgaConfig(max_iter=2000, batch=256, eta0=1.0, seed=1), fig_params, ladder, mu, zeta0=start)
    assert dual_estimate(res.zeta_star, costs, mu)[0] > dual_estimate(start, costs, mu)[0] + 0.1


def test_price_with_ci_limits(fig_params):
    ladder = PayoffLadder.quantile_hedge("call", 100)
    bs = bs_vanilla_price(fig_params, "call", 100)
    est = price_with_ci([1e6], fig_params, ladder, [0.0, 1.0], 10**6, SeededStream(1, 3))
    assert abs(est.value - bs) <= 3 * est.std_error
    assert est.value == est.base_term + est.dual_term
    zero = price_with_ci([0.0], fig_params, ladder, [1.0, 0.0], 10**5, SeededStream(1, 3))
    assert zero.value == 0.0
    with pytest.raises(EmptyBatch):
        price_with_ci([0.0], fig_params, ladder, [1.0, 0.0], 0)


def test_weak_duality_on_shared_batch(fig_params, rng):
    ladder = PayoffLadder.pnl("call", 100, [0, 10, 20])
    p = np.array([0.2, 0.3, 0.5])
    costs = build_costs(ladder, simulate_bs(fig_params, 10_000, SeededStream(6)))
    m = len(costs)
    for _ in range(20):
        # random deterministic assignment whose empirical law is exactly p, or dominates it
        q = p if rng.random() < 0.5 else np.array([0.1, 0.3, 0.6])
        levels = np.repeat(np.arange(3), (q * m).round().astype(int))
        rng.shuffle(levels)
        primal = np.mean(costs.values[np.arange(m), levels])
        zeta = project_to_cone(rng.uniform(0, 60, 2))
        est = price_on_costs(zeta, costs, p)
        assert primal >= est.value - 1e-9


def test_price_monotone_in_target(fig_params):
    ladder = PayoffLadder.pnl("call", 100, [0, 10, 20])
    chain = [[0.5, 0.3, 0.2], [0.4, 0.3, 0.3], [0.2, 0.3, 0.5], [0.1, 0.2, 0.7]]
    prices = []
    for i, atoms in enumerate(chain):
        mu = validate_measure(atoms)
        if i:
            assert dominates(mu, validate_measure(chain[i - 1]))
        res = adam_run(SgaConfig(max_iter=2000, seed=4), fig_params, ladder, mu)
        prices.append(price_with_ci(res.zeta_star, fig_params, ladder, mu, 2 * 10**5, SeededStream(4, 3)))
    for lo, hi in zip(prices[:-1], prices[1:]):
        assert hi.value >= lo.value - 3 * math.hypot(lo.std_error, hi.std_error)
