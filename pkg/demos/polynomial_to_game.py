"""
From a quadratic system to a game
=================================

A homogeneous quadratic system over the simplex compiles into a 7-player
stochastic game.  A zero of the system becomes a stationary equilibrium that
meets a fixed payoff demand; without a zero, some player always wants to
deviate.
"""

# %%
from fractions import Fraction as F

import numpy as np

from stationary_ne import (
    PolySystem,
    build_full_game,
    expected_payoffs,
    regret_vector,
    verify_spe,
    witness_to_profile,
)

# q(x) = x1^2 - x2^2 vanishes at x = (1/2, 1/2)
sat = PolySystem.homogeneous([[1, 0], [0, -1]])
out = build_full_game(sat)
print(f"{len(out.game)} nodes, {out.game.players} players, acyclic: {out.game.is_acyclic}")
print("demand:", [str(v) for v in out.demand])

# %%
# Player 1 mixes according to x at every variable node; threats stay off.
p = witness_to_profile(out, [F(1, 2), F(1, 2)])
print("payoffs:", [str(v) for v in expected_payoffs(out.game, p)])
print("regrets:", [str(v) for v in regret_vector(out.game, p)])
print("subgame perfect:", verify_spe(out.game, p).is_spe)

# %%
# q(x) = x1^2 + x2^2 has no zero on the simplex.  Scan the witness family
# and record the largest regret at each point.
unsat = build_full_game(PolySystem.homogeneous([[1, 0], [0, 1]]))
xs = np.linspace(0, 1, 17)
worst = []
for k in range(17):
    x = [F(k, 16), F(16 - k, 16)]
    worst.append(max(regret_vector(unsat.game, witness_to_profile(unsat, x))))
worst = np.array([float(w) for w in worst])
for x1, w in zip(xs, worst):
    print(f"x1 = {x1:.4f}   max regret = {w:.5f}")
print("smallest:", min(worst), "at x1 =", xs[worst.argmin()])
