"""
Payoff demands in a two-player tree
===================================

Chance picks an item; Player 1 may give it to Player 2, otherwise Player 2
may give it back or throw it away.  Equilibria that split the expected total
evenly correspond to equal partitions of the item sizes.
"""

# %%
from fractions import Fraction as F

from stationary_ne import (
    build_partition_game,
    derandomize_partition,
    enumerate_positional,
    equal_partition,
    expected_payoffs,
    grid_search,
    subgame,
    verify_ne,
)

for items in ([1, 1, 2], [1, 1, 1]):
    g, demand = build_partition_game(items)
    hits = [p for p in enumerate_positional(g) if verify_ne(g, p, 0, demand).holds]
    print(items, "equal partition:", equal_partition(items), "| positional NE meeting demand:", len(hits))
    if hits:
        print("   payoffs", [str(x) for x in expected_payoffs(g, hits[0])])

# %%
# Equilibria of a single item subgame on the quarter grid.  Player 1 only
# regrets giving the item away when Player 2 would have handed it over.
g, _ = build_partition_game([1, 1, 2])
sub = subgame(g, "item1")
for p in grid_search(sub, 4):
    give1 = p.dist(sub.nodes["item1"])["item1.give"]
    give2 = p.dist(sub.nodes["item1.pass"])["item1.to1"]
    print(f"P1 gives {str(give1):>4}   P2 gives {str(give2):>4}")

# %%
# The deterministic 5-player version swaps the chance node for a gadget.
d = derandomize_partition([1, 1, 2])
rep = verify_ne(d.game, d.witness({1, 2}), 0, d.demand)
print(rep.to_text())
print("players:", d.game.players, "| deterministic:", d.game.is_deterministic, "| demand met:", rep.demands_met)
assert rep.holds and rep.payoffs[:2] == (F(1, 3), F(1, 3))
