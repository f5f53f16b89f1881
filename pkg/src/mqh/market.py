"""Black-Scholes terminal scenarios with the Girsanov pricing kernel."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class BsParams:
    """Market parameters; ``drift`` is the historical drift of the underlying."""

    x0: float = 100.0
    drift: float = 0.1
    sigma: float = 0.2
    rate: float = 0.0
    horizon: float = 1.0

    def __post_init__(self):
        if not self.x0 > 0:
            raise ValueError(f"x0 must be > 0, got {self.x0}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")

    @property
    def risk_premium(self) -> float:
        return (self.drift - self.rate) / self.sigma


# parameters of the quantile hedging figure, also assumed for the PnL table
FIGURE_PARAMS = BsParams(x0=100.0, drift=0.1, sigma=0.2, rate=0.0, horizon=1.0)


@dataclass(frozen=True)
class SeededStream:
    """A reproducible random stream identified by ``(seed, index)``.

    Backed by the counter-based Philox bit generator. Distinct indices give
    statistically independent streams, so batches can be produced in any order
    or in parallel and still agree bit for bit.
    """

    seed: int
    index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence([int(self.seed) & 0xFFFFFFFFFFFFFFFF, int(self.index)])
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "SeededStream":
        return SeededStream(self.seed, index)


@dataclass(frozen=True)
class ScenarioBatch:
    x_terminal: np.ndarray = field(repr=False)
    kernel: np.ndarray = field(repr=False)
    brownian: np.ndarray = field(repr=False)
    stream: SeededStream | None = None

    def __post_init__(self):
        n = len(self.x_terminal)
        if len(self.kernel) != n or len(self.brownian) != n:
            raise ValueError("x_terminal, kernel and brownian must have equal length")

    def __len__(self):
        return len(self.x_terminal)


def terminal_from_brownian(params: BsParams, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``(X_T, Gamma_T)`` as functions of the terminal Brownian value."""
    lam = params.risk_premium
    T = params.horizon
    x = params.x0 * np.exp((params.drift - 0.5 * params.sigma**2) * T + params.sigma * w)
    gamma = np.exp(-lam * w - 0.5 * lam**2 * T)
    return x, gamma


def simulate_bs(params: BsParams, count: int, stream: SeededStream) -> ScenarioBatch:
    """Draw ``count`` exact terminal scenarios (no time stepping)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    w = np.sqrt(params.horizon) * stream.generator().standard_normal(count)
    x, gamma = terminal_from_brownian(params, w)
    return ScenarioBatch(x, gamma, w, stream)


def bs_vanilla_price(params: BsParams, kind: str, strike: float) -> float:
    """Black-Scholes price of a European call or put."""
    if strike < 0:
        raise ValueError("strike must be >= 0")
    s, T, r, vol = params.x0, params.horizon, params.rate, params.sigma
    disc = np.exp(-r * T)
    if kind not in ("call", "put"):
        raise ValueError(f"kind must be 'call' or 'put', got {kind!r}")
    if strike == 0:
        return float(s) if kind == "call" else 0.0
    d1 = (np.log(s / strike) + (r + 0.5 * vol**2) * T) / (vol * np.sqrt(T))
    d2 = d1 - vol * np.sqrt(T)
    if kind == "call":
        return float(s * norm.cdf(d1) - strike * disc * norm.cdf(d2))
    return float(strike * disc * norm.cdf(-d2) - s * norm.cdf(-d1))
