"""``mqh`` command line: price a config, reproduce the table and figure, run property suites."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .dual_sga import EVAL_STREAM, SgaConfig, adam_run, price_on_costs, price_with_ci
from .errors import MQHError
from .market import FIGURE_PARAMS, BsParams, SeededStream, simulate_bs
from .measures import validate_measure
from .oracles import pnl_ot_semianalytic, qh_dual_1d
from .payoffs import Level, PayoffLadder, build_costs

SCHEMA_VERSION = 1

TABLE1_ROWS = [
    # (p2, p3), (gamma2, gamma3), paper OT-solver value
    ((0.3, 0.5), (10.0, 20.0), 17.48),
    ((0.05, 0.05), (10.0, 20.0), 8.41),
    ((0.05, 0.9), (10.0, 20.0), 24.44),
    ((0.3, 0.5), (10.0, 100.0), 42.19),
    ((0.05, 0.05), (10.0, 100.0), 9.62),
    ((0.05, 0.9), (10.0, 100.0), 87.57),
]
TABLE1_SGA = dict(max_iter=100_000, batch=256, eta0=0.01)
FIGURE_SGA = {
    "put": dict(max_iter=5000, batch=256, eta0=0.01),
    "call": dict(max_iter=2500, batch=64, eta0=0.01),
}
FIGURE_GRID = [i / 20 for i in range(21)]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` names the offending key path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _take(d: dict, allowed: set, required: set, where: str) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}" if where else sorted(unknown)[0], "unknown key")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"{where}.{sorted(missing)[0]}" if where else sorted(missing)[0], "missing key")
    return d


def _ladder_from(d: dict) -> PayoffLadder:
    form = d.get("form")
    if form == "pnl":
        _take(d, {"form", "base", "offsets"}, {"form", "base", "offsets"}, "ladder")
        base = _take(d["base"], {"kind", "strike"}, {"kind", "strike"}, "ladder.base")
        try:
            return PayoffLadder.pnl(base["kind"], float(base["strike"]), d["offsets"])
        except (ValueError, TypeError) as exc:
            raise ConfigError("ladder", str(exc)) from exc
    if form == "levels":
        _take(d, {"form", "levels"}, {"form", "levels"}, "ladder")
        levels = []
        for i, lv in enumerate(d["levels"]):
            _take(lv, {"kind", "strike", "offset"}, {"kind"}, f"ladder.levels[{i}]")
            try:
                levels.append(Level(lv["kind"], float(lv.get("strike", 0.0)), float(lv.get("offset", 0.0))))
            except ValueError as exc:
                raise ConfigError(f"ladder.levels[{i}]", str(exc)) from exc
        try:
            return PayoffLadder.from_levels(levels)
        except ValueError as exc:
            raise ConfigError("ladder", str(exc)) from exc
    raise ConfigError("ladder.form", f"expected 'pnl' or 'levels', got {form!r}")


def ladder_to_dict(ladder: PayoffLadder) -> dict:
    if ladder.form == "pnl":
        return {
            "form": "pnl",
            "base": {"kind": ladder.base.kind, "strike": ladder.base.strike},
            "offsets": ladder.offsets.tolist(),
        }
    return {"form": "levels", "levels": [asdict(lv) for lv in ladder.levels]}


def load_config(raw: dict) -> dict:
    """Validate a parsed JSON config and build the objects it describes."""
    top = {"schema_version", "market", "ladder", "mu", "sga", "eval_count", "seed", "output"}
    _take(raw, top, {"schema_version", "market", "ladder", "mu", "sga"}, "")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {raw['schema_version']!r}")
    m = _take(raw["market"], {"x0", "drift", "sigma", "rate", "horizon"},
              {"x0", "drift", "sigma", "rate", "horizon"}, "market")
    try:
        market = BsParams(**{k: float(v) for k, v in m.items()})
    except (ValueError, TypeError) as exc:
        raise ConfigError("market", str(exc)) from exc
    ladder = _ladder_from(raw["ladder"])
    try:
        mu = validate_measure(raw["mu"])
    except (ValueError, TypeError) as exc:
        raise ConfigError("mu", str(exc)) from exc
    if mu.n_levels != ladder.n_levels:
        raise ConfigError("mu", f"{mu.n_levels} atoms for a {ladder.n_levels}-level ladder")
    sga_keys = {"max_iter", "batch", "eta0", "stop_tol", "beta1", "beta2", "epsilon", "init", "pilot_size"}
    s = _take(raw["sga"], sga_keys, set(), "sga")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", "expected a nonnegative integer")
    try:
        sga = SgaConfig(seed=seed, **s)
    except (ValueError, TypeError) as exc:
        raise ConfigError("sga", str(exc)) from exc
    eval_count = raw.get("eval_count", 1_000_000)
    if not isinstance(eval_count, int) or eval_count < 1:
        raise ConfigError("eval_count", "expected a positive integer")
    return dict(market=market, ladder=ladder, mu=mu, sga=sga, eval_count=eval_count, seed=seed,
                output=raw.get("output"))


def config_to_dict(cfg: dict) -> dict:
    sga = cfg["sga"]
    out = {
        "schema_version": SCHEMA_VERSION,
        "market": asdict(cfg["market"]),
        "ladder": ladder_to_dict(cfg["ladder"]),
        "mu": cfg["mu"].atoms.tolist(),
        "sga": {k: getattr(sga, k) for k in
                ("max_iter", "batch", "eta0", "stop_tol", "beta1", "beta2", "epsilon", "init", "pilot_size")},
        "eval_count": cfg["eval_count"],
        "seed": cfg["seed"],
    }
    if cfg.get("output"):
        out["output"] = cfg["output"]
    return out


def run_price(cfg: dict) -> dict:
    """Train the dual point, price it on a fresh stream, and build the report dict."""
    t0 = time.perf_counter()
    market, ladder, mu, sga = cfg["market"], cfg["ladder"], cfg["mu"], cfg["sga"]
    result = adam_run(sga, market, ladder, mu)
    est = price_with_ci(result.zeta_star, market, ladder, mu, cfg["eval_count"],
                        SeededStream(cfg["seed"], EVAL_STREAM))
    if not all(math.isfinite(v) for v in (est.value, est.std_error)):
        raise FloatingPointError("non-finite price estimate")
    oracle = None
    if ladder.form == "pnl" and market.risk_premium != 0 and ladder.base.kind in ("call", "put"):
        oracle = pnl_ot_semianalytic(market, ladder.base.strike, ladder.offsets, mu, ladder.base.kind)
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config_to_dict(cfg),
        "price": {
            "value": est.value,
            "std_error": est.std_error,
            "base_term": est.base_term,
            "dual_term": est.dual_term,
            "sample_count": est.sample_count,
        },
        "zeta_star": result.zeta_star.tolist(),
        "oracle": {"pnl_ot_semianalytic": oracle},
        "iterations": result.iterations_used,
        "stopped_early": result.stopped_early,
        "wall_clock_s": time.perf_counter() - t0,
        "version": __version__,
    }


def canonical(report: dict) -> dict:
    """Report with the wall-clock field blanked, for determinism comparisons."""
    out = dict(report)
    out["wall_clock_s"] = None
    return out


def _dump(obj, path: Path | None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")


def cmd_price(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(raw)
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_price(cfg)
    except (FloatingPointError, MQHError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.canonical:
        report = canonical(report)
    out = args.out or cfg.get("output")
    _dump(report, Path(out) if out else None)
    return EXIT_OK


def table1_rows(seed: int = 0, eval_count: int = 1_000_000, max_iter: int | None = None) -> list[dict]:
    """All six PnL-hedging configurations, SGA against the closed form."""
    rows = []
    for idx, ((p2, p3), (g2, g3), paper_ot) in enumerate(TABLE1_ROWS):
        mu = validate_measure([1.0 - p2 - p3, p2, p3])
        ladder = PayoffLadder.pnl("call", 100.0, [0.0, g2, g3])
        sga_kw = dict(TABLE1_SGA)
        if max_iter is not None:
            sga_kw["max_iter"] = max_iter
        # one seed per row keeps rows independent of evaluation order
        row_seed = seed * 1000 + idx
        res = adam_run(SgaConfig(seed=row_seed, **sga_kw), FIGURE_PARAMS, ladder, mu)
        est = price_with_ci(res.zeta_star, FIGURE_PARAMS, ladder, mu, eval_count,
                            SeededStream(row_seed, EVAL_STREAM))
        ot = pnl_ot_semianalytic(FIGURE_PARAMS, 100.0, [0.0, g2, g3], mu)
        rows.append({
            "p2": p2, "p3": p3, "gamma2": g2, "gamma3": g3,
            "sga": est.value, "sga_std": est.std_error, "ot_solver": ot,
            "paper_ot_solver": paper_ot, "abs_gap": abs(est.value - ot),
            "rel_gap": abs(est.value - ot) / ot, "iterations": res.iterations_used,
        })
    return rows


def _write_csv(rows: list[dict], path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def cmd_table1(args) -> int:
    rows = table1_rows(seed=args.seed, eval_count=args.eval_count)
    out = Path(args.out_dir)
    _write_csv(rows, out / "table1.csv")
    _dump({"schema_version": SCHEMA_VERSION, "rows": rows}, out / "table1.json")
    bad = [r for r in rows if r["rel_gap"] > args.tol]
    for r in rows:
        flag = "ok" if r["rel_gap"] <= args.tol else "FAIL"
        print(f"({r['p2']},{r['p3']}) ({r['gamma2']:g},{r['gamma3']:g})  "
              f"SGA {r['sga']:.3f} ({r['sga_std']:.3f})  OT {r['ot_solver']:.3f}  {flag}")
    return EXIT_FAIL if bad else EXIT_OK


def figure_rows(kind: str, seed: int = 0, eval_count: int = 1_000_000) -> list[dict]:
    """Classical quantile hedging curve over the 21-point probability grid.

    SGA prices and the exact 1-d dual share one evaluation batch.
    """
    ladder = PayoffLadder.quantile_hedge(kind, 100.0)
    batch = simulate_bs(FIGURE_PARAMS, eval_count, SeededStream(seed, EVAL_STREAM))
    costs = build_costs(ladder, batch)
    rows = []
    for i, p in enumerate(FIGURE_GRID):
        mu = np.array([1.0 - p, p])
        res = adam_run(SgaConfig(seed=seed * 1000 + i, **FIGURE_SGA[kind]), FIGURE_PARAMS, ladder, mu)
        est = price_on_costs(res.zeta_star, costs, mu)
        oracle = qh_dual_1d(batch, ladder, p)
        rows.append({"p": p, "sga_price": est.value, "oracle_price": oracle,
                     "abs_gap": abs(est.value - oracle), "sga_std": est.std_error})
    return rows


def cmd_figure_qh(args) -> int:
    rows = figure_rows(args.kind, seed=args.seed, eval_count=args.eval_count)
    out = Path(args.out or f"figure_qh_{args.kind}.csv")
    _write_csv(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_suites

    instances = None
    if args.instances:
        data = json.loads(Path(args.instances).read_text())
        instances = data if isinstance(data, list) else data.get("instances", [data])
    ok = run_suites(args.suite, args.seed, instances, failure_dir=Path(args.failure_dir))
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mqh", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price one JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--canonical", action="store_true", help="blank the wall-clock field")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("table1", help="PnL hedging table: SGA vs closed form")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--tol", type=float, default=0.01, help="relative tolerance per row")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-count", type=int, default=1_000_000)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("figure-qh", help="quantile hedging curve for a call or put")
    p.add_argument("--kind", choices=("call", "put"), required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-count", type=int, default=1_000_000)
    p.set_defaults(func=cmd_figure_qh)

    p = sub.add_parser("validate", help="run property suites")
    p.add_argument("--suite", choices=("measures", "duality", "finite", "all"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", help="JSON file with finite instances to replay")
    p.add_argument("--failure-dir", default=".", help="where failing instances are written")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
