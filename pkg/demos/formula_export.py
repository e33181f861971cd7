"""
Equilibrium existence as a real-arithmetic formula
==================================================

Any acyclic terminal-reward game can be written as a quantifier-free formula
over strategy probabilities and value variables.  Here the formula is checked
exactly against candidate profiles; the SMT-LIB text can go to any
nonlinear real-arithmetic solver.
"""

# %%
from fractions import Fraction as F

from stationary_ne import (
    PolySystem,
    StationaryProfile,
    build_full_game,
    canonical_assignment,
    check_assignment,
    encode_stationary_ne,
    parse_game,
    to_smtlib,
    witness_to_profile,
)

g = parse_game("""\
players: 2
initial: a
a player 1 stop, b
stop terminal 1, 0
b player 2 bad, good
bad terminal 0, 0
good terminal 2, 1
""")
f = encode_stationary_ne(g)
print(to_smtlib(f))

# %%
for moves in ({"a": "b", "b": "good"}, {"a": "stop", "b": "bad"}, {"a": "b", "b": "bad"}):
    p = StationaryProfile.pure(moves)
    print(moves, "->", check_assignment(f, canonical_assignment(g, p)))

# %%
# SPE and demand clauses on the compiled 7-player game.
out = build_full_game(PolySystem.homogeneous([[1, 0], [0, -1]]))
big = encode_stationary_ne(out.game, out.demand, spe=True)
print(f"{len(big.variables)} variables, {len(big.clauses)} clauses")
a = canonical_assignment(out.game, witness_to_profile(out, [F(1, 2), F(1, 2)]))
print("witness satisfies the formula:", check_assignment(big, a))
