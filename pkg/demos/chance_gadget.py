"""
Simulating a chance node with three players
===========================================

A chain of threat nodes forces Player 1 to mix with exactly the probabilities
that reproduce a given sub-stochastic distribution.
"""

# %%
from fractions import Fraction as F

from stationary_ne import (
    StationaryProfile,
    chance_weights,
    gadget_game,
    grid_search,
    reach_probabilities,
    regret_vector,
    serialize_game,
)

p = [F(1, 2), F(1, 4)]
w = chance_weights(p)
print("q    =", [str(x) for x in w.q])
print("qhat =", [str(x) for x in w.q_hat])

# %%
g, gadget = gadget_game(p)
print(serialize_game(g))

# %%
prof = StationaryProfile(gadget.q_profile())
for t in ("u1", "u2", gadget.bottom):
    print(f"reach {t}: {reach_probabilities(g, prof, [t])[g.initial]}")
print("regrets:", [str(r) for r in regret_vector(g, prof)])

# %%
# On the 1/12 grid only one profile gives Player 1 payoff 1.
found = grid_search(g, 12, demand=[1, 0, 0])
print(f"{len(found)} grid equilibria with Player 1 payoff 1")
for v in ("g.t1", "g.t2"):
    print(v, {k: str(x) for k, x in found[0].dist(g.nodes[v]).items()})
