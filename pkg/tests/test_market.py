import numpy as np
import pytest

from mqh.market import BsParams, SeededStream, bs_vanilla_price, simulate_bs


def test_params_validation():
    with pytest.raises(ValueError):
        BsParams(sigma=0.0)
    with pytest.raises(ValueError):
        BsParams(horizon=-1.0)
    with pytest.raises(ValueError):
        BsParams(x0=0.0)
    assert BsParams().risk_premium == pytest.approx(0.5)


def test_kernel_unit_mean_and_martingale(fig_params):
    batch = simulate_bs(fig_params, 10**6, SeededStream(1))
    g = batch.kernel
    assert abs(g.mean() - 1.0) <= 3 * g.std(ddof=1) / 1e3
    gx = g * batch.x_terminal
    assert abs(gx.mean() - 100.0) <= 3 * gx.std(ddof=1) / 1e3


def test_zero_premium_gives_unit_kernel():
    batch = simulate_bs(BsParams(drift=0.03, rate=0.03), 1000, SeededStream(2))
    np.testing.assert_array_equal(batch.kernel, 1.0)


def test_sample_reconstruction(fig_params):
    p = BsParams(x0=80.0, drift=0.05, sigma=0.3, rate=0.01, horizon=2.0)
    for params in (fig_params, p):
        b = simulate_bs(params, 5000, SeededStream(3, 4))
        lam = params.risk_premium
        x = params.x0 * np.exp((params.drift - params.sigma**2 / 2) * params.horizon + params.sigma * b.brownian)
        g = np.exp(-lam * b.brownian - lam**2 * params.horizon / 2)
        np.testing.assert_allclose(b.x_terminal, x, rtol=1e-12)
        np.testing.assert_allclose(b.kernel, g, rtol=1e-12)
        assert np.all(b.kernel > 0)
        assert len(b.x_terminal) == len(b.kernel) == len(b.brownian)


def test_determinism_and_stream_independence(fig_params):
    a = simulate_bs(fig_params, 1000, SeededStream(9, 0))
    b = simulate_bs(fig_params, 1000, SeededStream(9, 0))
    c = simulate_bs(fig_params, 1000, SeededStream(9, 1))
    assert a.brownian.tobytes() == b.brownian.tobytes()
    assert not np.array_equal(a.brownian, c.brownian)


def test_bs_prices(fig_params):
    # closed form at the money, zero rate: x0 (2 N(sigma/2) - 1)
    from scipy.stats import norm

    expected = 100 * (2 * norm.cdf(0.1) - 1)
    assert bs_vanilla_price(fig_params, "call", 100) == pytest.approx(expected, rel=1e-12)
    assert bs_vanilla_price(fig_params, "call", 100) == pytest.approx(7.9656, abs=5e-5)
    assert bs_vanilla_price(fig_params, "put", 100) == pytest.approx(7.9656, abs=5e-5)
    assert bs_vanilla_price(fig_params, "call", 0) == 100.0
    with pytest.raises(ValueError):
        bs_vanilla_price(fig_params, "digital", 100)


def test_bs_call_matches_monte_carlo(fig_params):
    b = simulate_bs(fig_params, 10**6, SeededStream(5))
    for kind, payoff in (("call", np.maximum(b.x_terminal - 100, 0)), ("put", np.maximum(100 - b.x_terminal, 0))):
        v = b.kernel * payoff
        assert abs(v.mean() - bs_vanilla_price(fig_params, kind, 100)) <= 3 * v.std(ddof=1) / 1e3


def test_put_call_parity():
    p = BsParams(x0=95.0, drift=0.07, sigma=0.25, rate=0.02, horizon=0.5)
    c = bs_vanilla_price(p, "call", 100)
    q = bs_vanilla_price(p, "put", 100)
    assert c - q == pytest.approx(95.0 - 100 * np.exp(-0.01), abs=1e-10)
