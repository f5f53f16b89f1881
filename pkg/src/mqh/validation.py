"""Randomized property suites behind ``mqh validate``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dual_sga import dual_sample_value, supergradient_sample
from .errors import MonotonicityViolation
from .measures import dominates, project_to_cone, survival, validate_measure
from .oracles import FiniteInstance, finite_kp_exact, finite_mp_exact, finite_saturation_check


@dataclass
class PropertyResult:
    name: str
    passed: int = 0
    total: int = 0
    failures: list = field(default_factory=list)

    def record(self, ok: bool, example=None):
        self.total += 1
        if ok:
            self.passed += 1
        elif len(self.failures) < 5:
            self.failures.append(example)

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def random_measure(rng: np.random.Generator, n: int) -> np.ndarray:
    p = rng.random(n) + 0.02
    p /= p.sum()
    # push the rounding residue into the largest atom so the sum is 1 to 1e-12
    p[np.argmax(p)] += 1.0 - p.sum()
    return p


def random_finite_instance(rng: np.random.Generator, max_states: int = 8, max_levels: int = 4,
                           n_levels: int | None = None) -> FiniteInstance:
    """Random instance with nondecreasing cost rows.

    A third of the draws use uniform weights and a target on the ``1/M`` grid so
    that exact Monge maps exist and the LP optimum can be integral.
    """
    m = int(rng.integers(1, max_states + 1))
    n = n_levels or int(rng.integers(1, max_levels + 1))
    gamma = rng.lognormal(0.0, 0.5, size=m)
    payoff = np.cumsum(rng.exponential(1.0, size=(m, n)) * (rng.random((m, n)) < 0.8), axis=1)
    cost = gamma[:, None] * payoff
    if rng.random() < 1 / 3 and m >= n:
        w = np.full(m, 1.0 / m)
        counts = 1 + rng.multinomial(m - n, np.full(n, 1.0 / n))
        mu = counts / m
    else:
        w = random_measure(rng, m)
        mu = random_measure(rng, n)
    return FiniteInstance(w, cost, mu)


def measures_suite(seed: int, count: int = 1000) -> list[PropertyResult]:
    rng = np.random.default_rng([seed, 1])
    surv = PropertyResult("survival curve invariants")
    refl = PropertyResult("dominance reflexive and transitive")
    proj = PropertyResult("projection idempotent and nonexpansive")
    for _ in range(count):
        n = int(rng.integers(1, 8))
        mu = validate_measure(random_measure(rng, n))
        f = np.array([survival(mu, k) for k in range(1, n + 1)])
        nxt = np.append(f[1:], 0.0)
        surv.record(f[0] == 1.0 and np.all(np.diff(f) <= 1e-15) and np.allclose(f - nxt, mu.atoms, atol=1e-12),
                    mu.atoms.tolist())
        # chain: shift mass upward twice
        a = mu
        b = validate_measure(_shift_up(a.atoms, rng))
        c = validate_measure(_shift_up(b.atoms, rng))
        refl.record(dominates(a, a) and dominates(b, a) and dominates(c, b) and dominates(c, a),
                    [a.atoms.tolist(), b.atoms.tolist(), c.atoms.tolist()])
        u, v = rng.normal(0, 3, size=(2, n))
        pu, pv = project_to_cone(u), project_to_cone(v)
        ok = np.allclose(project_to_cone(pu), pu, atol=1e-10, rtol=0)
        ok &= np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-10
        proj.record(bool(ok), [u.tolist(), v.tolist()])
    return [surv, refl, proj]


def _shift_up(p: np.ndarray, rng) -> np.ndarray:
    # move a fraction of each atom's mass to the level above
    q = p.copy()
    for k in range(len(q) - 1):
        t = rng.uniform(0, 0.5) * q[k]
        q[k] -= t
        q[k + 1] += t
    q = np.maximum(q, 1e-9)
    q /= q.sum()
    q[np.argmax(q)] += 1.0 - q.sum()
    return q


def duality_suite(seed: int, count: int = 10_000, slack: float = 1e-10) -> list[PropertyResult]:
    rng = np.random.default_rng([seed, 2])
    sup = PropertyResult("supergradient inequality")
    conc = PropertyResult("concavity along segments")
    upper = PropertyResult("upper bound by the linear term")
    for _ in range(count):
        n = int(rng.integers(2, 6))
        p = random_measure(rng, n)
        k = n - 1
        scale = rng.uniform(0.1, 50.0)
        row = np.sort(rng.exponential(scale, size=k))
        z1 = project_to_cone(rng.uniform(-0.2, 1.5, size=k) * scale)
        z2 = project_to_cone(rng.uniform(-0.2, 1.5, size=k) * scale)
        lam = rng.random()
        w1 = dual_sample_value(z1, row, p)
        w2 = dual_sample_value(z2, row, p)
        d1 = supergradient_sample(z1, row, p)
        ex = {"p": p.tolist(), "row": row.tolist(), "z1": z1.tolist(), "z2": z2.tolist()}
        sup.record(w2 <= w1 + d1 @ (z2 - z1) + slack, ex)
        mid = dual_sample_value(lam * z1 + (1 - lam) * z2, row, p)
        conc.record(mid >= lam * w1 + (1 - lam) * w2 - slack, ex)
        upper.record(w1 <= z1 @ p[1:] + slack, ex)
    return [sup, conc, upper]


def finite_suite(seed: int, count: int = 1000, instances=None, tol: float = 1e-9) -> list[PropertyResult]:
    rng = np.random.default_rng([seed, 3])
    gap = PropertyResult("zero duality gap")
    order = PropertyResult("relaxed Monge >= Kantorovich")
    integral = PropertyResult("Monge = Kantorovich when LP optimum is integral")
    exact_order = PropertyResult("relaxed Monge <= exact Monge")
    pool = [FiniteInstance.from_dict(d) for d in instances] if instances else (
        random_finite_instance(rng) for _ in range(count))
    for inst in pool:
        sol = finite_kp_exact(inst)
        ex = inst.to_dict()
        gap.record(abs(sol.primal_value - sol.dual_value) <= tol, ex)
        if not inst.rows_monotone():
            continue
        relaxed = finite_mp_exact(inst, relax=True)
        order.record(relaxed >= sol.primal_value - tol, ex)
        if sol.is_integral():
            integral.record(abs(relaxed - sol.primal_value) <= tol, ex)
        exact = finite_mp_exact(inst, relax=False)
        if np.isfinite(exact):
            exact_order.record(relaxed <= exact + tol, ex)
    return [gap, order, integral, exact_order]


def saturation_suite(seed: int, count: int = 200, grid_step: float = 0.1, instances=None) -> list[PropertyResult]:
    rng = np.random.default_rng([seed, 4])
    sat = PropertyResult("saturation on the dominating grid")
    pool = [FiniteInstance.from_dict(d) for d in instances] if instances else (
        random_finite_instance(rng, n_levels=3) for _ in range(count))
    for inst in pool:
        if not inst.rows_monotone():
            raise MonotonicityViolation(
                "saturation suite precondition: cost rows must be nondecreasing in the level")
        sat.record(finite_saturation_check(inst, grid_step), inst.to_dict())
    return [sat]


def run_suites(suite: str, seed: int, instances=None, failure_dir: Path = Path("."), out=print) -> bool:
    results: list[PropertyResult] = []
    try:
        if suite in ("measures", "all"):
            results += measures_suite(seed)
        if suite in ("duality", "all"):
            results += duality_suite(seed)
        if suite in ("finite", "all"):
            results += finite_suite(seed, instances=instances)
            results += saturation_suite(seed, instances=instances)
    except MonotonicityViolation as exc:
        out(f"rejected: {exc}")
        return False
    for r in results:
        out(f"{'PASS' if r.ok else 'FAIL'}  {r.name}: {r.passed}/{r.total}")
        if not r.ok:
            path = Path(failure_dir) / f"failing_{r.name.replace(' ', '_').replace('=', '').replace('>', 'ge')}.json"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps({"property": r.name, "seed": seed, "instances": r.failures}, indent=2))
            out(f"      failing instances written to {path}")
    return all(r.ok for r in results)
