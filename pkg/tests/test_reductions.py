from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stationary_ne import (
    Game,
    Node,
    PolySystem,
    StationaryProfile,
    build_deterministic_full_game,
    build_exists_ne_game,
    build_full_game,
    build_mul_game,
    build_sure_game,
    build_var_game,
    demand_vector,
    expected_payoffs,
    grid_search,
    mul_game,
    normalize_rewards_to_binary,
    poly_game,
    profile_to_witness,
    regret_vector,
    subgame,
    topological_order,
    validate,
    var_game,
    verify_ne,
    verify_spe,
    witness_to_profile,
)

F = Fraction
HALF = [F(1, 2), F(1, 2)]
SAT = PolySystem.homogeneous([[1, 0], [0, -1]])
UNSAT = PolySystem.homogeneous([[1, 0], [0, 1]])


def random_point(rnd: random.Random, n: int, denom: int = 12) -> list[Fraction]:
    return [F(rnd.randint(0, denom), denom) for _ in range(n)]


def unit_point(rnd: random.Random, n: int, denom: int = 12) -> list[Fraction]:
    cuts = sorted(rnd.randint(0, denom) for _ in range(n - 1))
    return [F(b - a, denom) for a, b in zip([0] + cuts, cuts + [denom])]


def random_scaled_system(rnd: random.Random, n: int, ell: int = 1) -> PolySystem:
    return PolySystem.homogeneous(
        *[[[F(rnd.randint(-4, 4), 4) for _ in range(n)] for _ in range(n)] for _ in range(ell)]
    )


class TestVarGame:
    def test_single_variable_structure(self):
        g, index = build_var_game(1)
        assert len(g) == 4
        assert index["v1"] == "var.v1"
        assert g.is_acyclic

    def test_payoff_example(self):
        out = var_game(2)
        p = witness_to_profile(out, [F(1, 3), F(1)], require_simplex=False)
        assert expected_payoffs(out.game, p) == (0, F(2, 3), F(1, 3), F(2, 3), F(1, 3), 0, 0)

    def test_subgame_at_full_choice(self):
        out = var_game(2)
        sub = subgame(out.game, "var.v1")
        p = StationaryProfile.pure({"var.v1": "var.v1.a"})
        assert expected_payoffs(sub, p) == (0, 1, 0, 1, 0, 0, 0)

    @settings(max_examples=200)
    @given(st.integers(0, 10**9))
    def test_payoff_formula(self, seed):
        rnd = random.Random(seed)
        n = rnd.randint(1, 3)
        x = random_point(rnd, n)
        out = var_game(n)
        u = expected_payoffs(out.game, witness_to_profile(out, x, require_simplex=False))
        r = sum(x) / n
        assert u == (0, r, 1 - r, r, 1 - r, 0, 0)


class TestMulGame:
    def test_payoff_example(self):
        out = mul_game(2, 1, 2, F(3, 4))
        p = witness_to_profile(out, [F(1, 2), F(1, 3)], require_simplex=False)
        assert expected_payoffs(out.game, p) == (1, F(1, 2), F(1, 2), F(1, 6), F(1, 3), F(1, 8), F(1, 24))

    def test_zero_first_variable(self):
        out = mul_game(2, 1, 2, F(3, 4))
        p = witness_to_profile(out, [0, F(1, 3)], require_simplex=False)
        assert expected_payoffs(out.game, p) == (1, 0, 1, 0, 0, 0, 0)

    def test_alpha_one_starves_player7(self):
        out = mul_game(2, 1, 2, F(1))
        sub = subgame(out.game, out.game.initial)
        assert all(sub.nodes[t].reward[6] == 0 for t in sub.terminals)

    def test_alpha_out_of_range(self):
        _, index = build_var_game(2)
        with pytest.raises(ValueError):
            build_mul_game(1, 2, F(3, 2), index, 7)

    def test_shares_variable_nodes(self):
        out = mul_game(2, 1, 2, F(1, 2))
        g = out.game
        assert "var.v1" in g.nodes[out.node_index["mul.1.2.w1"]].succ
        assert "var.v1" in g.nodes["mul.1.2.w2"].succ

    @settings(max_examples=200)
    @given(st.integers(0, 10**9))
    def test_payoff_formula(self, seed):
        rnd = random.Random(seed)
        n = rnd.randint(1, 3)
        i, j = rnd.randint(1, n), rnd.randint(1, n)
        alpha = F(rnd.randint(0, 8), 8)
        x = random_point(rnd, n)
        out = mul_game(n, i, j, alpha)
        u = expected_payoffs(out.game, witness_to_profile(out, x, require_simplex=False))
        xi, xj = x[i - 1], x[j - 1]
        assert u == (1, xi, 1 - xi, xi * xj, xi * (1 - xj), alpha * xi * xj, (1 - alpha) * xi * xj)


class TestPolyGame:
    def test_balanced_witness(self):
        out = poly_game(SAT)
        u = expected_payoffs(out.game, witness_to_profile(out, HALF))
        assert u == (1, F(1, 2), F(1, 2), F(1, 4), F(1, 4), F(1, 8), F(1, 8))

    def test_corner_witness(self):
        out = poly_game(SAT)
        u = expected_payoffs(out.game, witness_to_profile(out, [1, 0]))
        assert u[5:] == (F(1, 4), 0)

    def test_zero_polynomial_is_symmetric(self):
        out = poly_game(PolySystem.homogeneous([[0, 0], [0, 0]]))
        u = expected_payoffs(out.game, witness_to_profile(out, [F(1, 3), F(2, 3)]))
        assert u[5] == u[6] == F(1, 8)

    def test_rejects_unscaled(self):
        with pytest.raises(ValueError):
            poly_game(PolySystem.homogeneous([[2, 0], [0, 0]]))

    @settings(max_examples=100)
    @given(st.integers(0, 10**9))
    def test_payoff_formula(self, seed):
        rnd = random.Random(seed)
        n = rnd.randint(1, 3)
        s = random_scaled_system(rnd, n)
        x = random_point(rnd, n, 6)
        out = poly_game(s)
        u = expected_payoffs(out.game, witness_to_profile(out, x, require_simplex=False))
        norm, q = sum(x) ** 2, s.polys[0](x)
        assert u[5] == (norm + q) / (2 * n * n)
        assert u[6] == (norm - q) / (2 * n * n)


class TestFullGame:
    def test_demands(self):
        out = build_full_game(SAT)
        assert out.demand.values == (F(1, 2), F(1, 2), F(1, 2), F(3, 8), F(3, 8), F(1, 16), F(1, 16))
        assert out.demand_reduced.values == (F(1, 2), F(1, 2), F(1, 2), 0, 0, 0, 0)
        assert out.game.players == 7

    def test_acyclic_and_valid(self):
        for s in (SAT, UNSAT, PolySystem.homogeneous([[1, 0], [0, 0]], [[0, 1], [-1, 0]])):
            g = build_full_game(s).game
            assert validate(g).ok
            topological_order(g)

    def test_root_distribution(self):
        s = PolySystem.homogeneous([[1, 0], [0, 0]], [[0, 1], [-1, 0]])
        g = build_full_game(s).game
        root = g.nodes[g.initial]
        assert dict(zip(root.succ, root.probs)) == {"var": F(1, 2), "poly1": F(1, 4), "poly2": F(1, 4)}

    def test_non_homogeneous_rejected(self):
        with pytest.raises(ValueError):
            build_full_game(PolySystem(1, ()))

    @pytest.mark.parametrize("a", [1, -1])
    def test_single_variable_nonzero_has_no_equilibrium(self, a):
        out = build_full_game(PolySystem.homogeneous([[a]]))
        assert grid_search(out.game, 4, demand=out.demand_reduced) == []

    def test_single_variable_zero_has_witness(self):
        out = build_full_game(PolySystem.homogeneous([[0]]))
        found = grid_search(out.game, 4, demand=out.demand_reduced)
        assert found
        for p in found:
            x = profile_to_witness(out, p)
            assert x.x == (1,)

    @settings(max_examples=20)
    @given(st.integers(0, 10**9))
    def test_zero_of_system_gives_equilibrium(self, seed):
        rnd = random.Random(seed)
        x = unit_point(rnd, 2)
        # a system vanishing at x: q = (x2 y1 - x1 y2)^2 in y, scaled
        a, b = x[1], x[0]
        s = PolySystem.homogeneous([[a * a, -a * b], [-a * b, b * b]])
        out = build_full_game(s)
        p = witness_to_profile(out, x)
        rep = verify_ne(out.game, p, 0, out.demand)
        assert rep.is_ne and rep.demands_met
        assert rep.payoffs == out.demand.values

    def test_witness_is_spe(self):
        out = build_full_game(SAT)
        assert verify_spe(out.game, witness_to_profile(out, HALF), 0, out.demand).holds


class TestDemandVector:
    def test_full(self):
        assert demand_vector(2).values == (F(1, 2), F(1, 2), F(1, 2), F(3, 8), F(3, 8), F(1, 16), F(1, 16))

    def test_deterministic13(self):
        assert demand_vector(2, variant="deterministic13").values == (
            F(1, 8), F(3, 16), F(3, 16), 0, 0, 0, 0, 1, 0, 0, F(1, 4), 0, 0,
        )

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_sure8(self, n):
        assert demand_vector(n, variant="sure8").values == (0,) * 7 + (1,)

    def test_padding(self):
        assert len(demand_vector(2, variant="reduced", m=9)) == 9

    def test_unknown(self):
        with pytest.raises(ValueError, match="unknown demand variant"):
            demand_vector(2, variant="bogus")


class TestSureGame:
    def test_witness_wins_for_player8(self):
        out = build_sure_game(SAT)
        rep = verify_ne(out.game, witness_to_profile(out, HALF), 0, out.demand)
        assert rep.is_ne and rep.demands_met
        assert rep.payoffs[7] == 1

    def test_exit_terminal(self):
        g = build_sure_game(SAT).game
        assert g.nodes["sure.exit"].reward == (F(1, 2), F(1, 2), F(1, 2), 0, 0, 0, 0, 0)
        assert [g.nodes[v].player for v in ("sure.p1", "sure.p2", "sure.p3")] == [1, 2, 3]

    def test_unsat_family_always_has_regret(self):
        out = build_sure_game(UNSAT)
        for k in range(17):
            x = [F(k, 16), F(16 - k, 16)]
            p = witness_to_profile(out, x)
            assert expected_payoffs(out.game, p)[7] == 1
            assert max(regret_vector(out.game, p)[:7]) > 0

    def test_binary_rewards_keep_payoffs(self):
        out = build_sure_game(SAT)
        b = normalize_rewards_to_binary(out.game)
        assert all(set(b.nodes[t].reward) <= {0, 1} for t in b.terminals)
        p = witness_to_profile(out, [F(1, 4), F(3, 4)])
        assert expected_payoffs(b, p) == expected_payoffs(out.game, p)


def self_loop_gadget() -> Game:
    return Game(3, {"loop": Node.controlled("loop", 1, ["loop"])}, "loop")


class TestExistsNE:
    def test_placeholder_gadget_is_cyclic(self):
        out = build_exists_ne_game(SAT, self_loop_gadget())
        assert validate(out.game).ok
        assert not out.game.is_acyclic

    def test_exit_pays_twice_reduced_demand(self):
        g = build_exists_ne_game(SAT, self_loop_gadget()).game
        assert g.nodes["ene.exit"].reward == (1, 1, 1, 0, 0, 0, 0)
        assert g.nodes["ene.t4"].probs == (F(1, 2), F(1, 2))

    def test_deterministic_shift(self):
        base = build_deterministic_full_game(SAT).game
        out = build_exists_ne_game(SAT, self_loop_gadget(), deterministic=True, gadget_players=(4, 5, 6))
        g = out.game
        assert g.is_deterministic
        for t in base.terminals:
            assert g.nodes[t].reward[0] == base.nodes[t].reward[0] - F(1, 8)
            assert g.nodes[t].reward[7] == base.nodes[t].reward[7] - 1

    def test_player_collision(self):
        with pytest.raises(ValueError, match="collision"):
            build_exists_ne_game(SAT, self_loop_gadget(), gadget_players=(1, 5, 6))

    def test_random_gadget_rejected_when_deterministic(self):
        chance = Game(
            3,
            {
                "c": Node.chance("c", [("a", F(1, 2)), ("b", F(1, 2))]),
                "a": Node.terminal("a", [0, 0, 0]),
                "b": Node.terminal("b", [1, 0, 0]),
            },
            "c",
        )
        with pytest.raises(ValueError):
            build_exists_ne_game(SAT, chance, deterministic=True)


class TestWitness:
    def test_round_trip(self):
        out = build_full_game(SAT)
        x = [F(1, 3), F(2, 3)]
        assert list(profile_to_witness(out, witness_to_profile(out, x))) == x

    def test_unnormalized_read_off(self):
        out = build_full_game(SAT)
        p = witness_to_profile(out, [1, 1], require_simplex=False)
        w = profile_to_witness(out, p)
        assert w.x == (1, 1) and w.l1 == 2

    def test_corner_witness_payoffs(self):
        out = build_full_game(SAT)
        u = expected_payoffs(out.game, witness_to_profile(out, [1, 0]))
        # var branch contributes half of (0, 1/2, 1/2, 1/2, 1/2, 0, 0)
        assert u[:3] == (F(1, 2), F(1, 2), F(1, 2))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            witness_to_profile(build_full_game(SAT), [1])

    def test_off_simplex(self):
        with pytest.raises(ValueError):
            witness_to_profile(build_full_game(SAT), [F(1, 4), F(1, 4)])

    @settings(max_examples=30)
    @given(st.integers(0, 10**9))
    def test_round_trip_random(self, seed):
        rnd = random.Random(seed)
        s = random_scaled_system(rnd, 3)
        out = build_full_game(s)
        x = unit_point(rnd, 3)
        assert list(profile_to_witness(out, witness_to_profile(out, x))) == x
