"""Transport on a finite sample space: Monge, Kantorovich and the dual.

Run with ``python demos/03_finite_space_duality.py``.
"""

# %%
import numpy as np

from mqh.oracles import FiniteInstance, finite_kp_exact, finite_mp_exact, finite_saturation_check, kantorovich_dual_value

# %% [markdown]
# Four equally likely states, three levels.  Each cost row is a kernel value
# times a nondecreasing payoff ladder.

# %%
kernel = np.array([1.4, 1.1, 0.9, 0.6])
payoff = np.array([[0.0, 10.0, 20.0]] * 4) + np.array([[5.0], [2.0], [0.0], [8.0]])
inst = FiniteInstance(np.full(4, 0.25), kernel[:, None] * payoff, [0.25, 0.25, 0.5])
print(inst.cost)

# %% [markdown]
# The exact transport plan and its potentials.  Strong duality holds to
# rounding; the potentials reproduce the value through
# ``E[min_n(H^n - Phi^n)] + sum_n Phi^n p^n``.

# %%
sol = finite_kp_exact(inst)
print("plan\n", sol.assignment)
print("primal", sol.primal_value, "dual", sol.dual_value, "potentials", sol.dual_potentials)
print("dual from potentials", kantorovich_dual_value(inst, sol.dual_potentials))

# %% [markdown]
# Deterministic maps: with uniform weights and a target on the 1/4 grid the
# exact Monge problem is feasible, and relaxing the target to "dominates mu"
# does not lower the price because the cost rows are monotone.

# %%
print("Monge exact  ", finite_mp_exact(inst))
print("Monge relaxed", finite_mp_exact(inst, relax=True))
print("saturated on the 1/10 grid:", finite_saturation_check(inst, 0.1))

# %%
odd = inst.with_target([1 / 3, 1 / 3, 1 / 3])
print("target 1/3 each -> exact Monge", finite_mp_exact(odd), " Kantorovich", finite_kp_exact(odd).primal_value)
