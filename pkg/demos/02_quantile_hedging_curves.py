"""Classical quantile hedging of a call and a put over a grid of success probabilities.

Run with ``python demos/02_quantile_hedging_curves.py``; writes CSVs (and a
PNG when matplotlib is installed) next to the current directory.
"""

# %%
from pathlib import Path

from mqh.cli import figure_rows

out = Path("out")
out.mkdir(exist_ok=True)
curves = {kind: figure_rows(kind, seed=0, eval_count=10**6) for kind in ("call", "put")}

# %% [markdown]
# ``sga_price`` uses the dual point found by ADAM; ``oracle_price`` is the exact
# maximum of the one-dimensional dual on the same evaluation batch (the
# optimal dual point is the empirical ``p``-quantile of ``Gamma * payoff``).

# %%
for kind, rows in curves.items():
    print(kind)
    for r in rows:
        print(f"  p={r['p']:.2f}  sga={r['sga_price']:8.4f}  exact={r['oracle_price']:8.4f}  gap={r['abs_gap']:.4f}")

# %%
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for ax, (kind, rows) in zip(axes, curves.items()):
        ps = [r["p"] for r in rows]
        ax.plot(ps, [r["oracle_price"] for r in rows], "-", label="exact")
        ax.plot(ps, [r["sga_price"] for r in rows], "o", ms=4, label="SGA")
        ax.set_title(kind)
        ax.set_xlabel("p")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(out / "quantile_hedging.png", dpi=120)
    print("saved", out / "quantile_hedging.png")
