from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gamegen
from stationary_ne import (
    Game,
    Node,
    PolySystem,
    StationaryProfile,
    build_chance_gadget,
    build_deterministic_full_game,
    build_full_game,
    build_partition_game,
    chance_weights,
    demand_vector,
    derandomize_partition,
    eliminate_chance_nodes,
    enumerate_positional,
    equal_partition,
    expected_payoffs,
    gadget_game,
    is_tree,
    mean_payoff,
    partition_witness,
    reach_probabilities,
    regret_vector,
    rewards_to_cycles,
    validate,
    verify_ne,
    witness_to_profile,
)

F = Fraction
SAT = PolySystem.homogeneous([[1, 0], [0, -1]])


def random_weights(rnd: random.Random, n: int) -> list[Fraction]:
    denom = rnd.choice([6, 8, 12, 30])
    budget = denom - 1
    out = []
    for _ in range(n):
        k = rnd.randint(0, budget // max(1, n))
        out.append(F(k, denom))
    return out


def coin() -> Game:
    return Game(
        1,
        {
            "c": Node.chance("c", [("a", F(1, 2)), ("b", F(1, 2))]),
            "a": Node.terminal("a", [1]),
            "b": Node.terminal("b", [F(1, 2)]),
        },
        "c",
    )


def q_profile(gadgets) -> dict:
    out = {}
    for gd in gadgets:
        out.update(gd.q_profile())
    return out


class TestWeights:
    def test_example(self):
        w = chance_weights([F(1, 2), F(1, 4)])
        assert w.q == (F(1, 3), F(3, 4))
        assert w.q_hat == (F(1, 3), F(1, 4))
        assert w.q[0] * w.q[1] == F(1, 4)

    def test_zero_mass(self):
        w = chance_weights([0])
        assert w.q == (1,) and w.q_hat == (1,)
        assert w.outcome_probability(1) == 0

    def test_empty(self):
        w = chance_weights([])
        assert w.q == () and w.bottom_probability == 1

    @pytest.mark.parametrize("p", [[F(1, 2), F(1, 2)], [F(-1, 4)], [F(3, 2)]])
    def test_rejected(self, p):
        with pytest.raises(ValueError):
            chance_weights(p)

    @settings(max_examples=200)
    @given(st.integers(0, 10**9))
    def test_telescoping(self, seed):
        rnd = random.Random(seed)
        p = random_weights(rnd, rnd.randint(1, 6))
        w = chance_weights(p)
        n = len(p)
        for i in range(n):
            assert math.prod(w.q[i:]) == 1 - sum(p[i:])
            assert w.q_hat[i] == math.prod(w.q[: i + 1])
        for i in range(1, n + 1):
            assert w.outcome_probability(i) == p[i - 1]


class TestGadget:
    def test_reach_example(self):
        g, gd = gadget_game([F(1, 2), F(1, 4)])
        p = StationaryProfile(gd.q_profile())
        assert reach_probabilities(g, p, ["u1"])[g.initial] == F(1, 2)
        assert reach_probabilities(g, p, ["u2"])[g.initial] == F(1, 4)
        assert reach_probabilities(g, p, [gd.bottom])[g.initial] == F(1, 4)

    def test_threats_indifferent(self):
        g, gd = gadget_game([F(1, 2), F(1, 4)])
        p = StationaryProfile(gd.q_profile())
        assert regret_vector(g, p) == (0, 0, 0)
        assert expected_payoffs(g, p)[0] == 1

    def test_structure(self):
        gd = build_chance_gadget([F(1, 2), F(1, 4)], ["x", "y"])
        assert gd.entry == "g.s2"
        assert gd.nodes["g.s2"].player == 2
        assert gd.nodes["g.r2"].player == 3
        assert gd.nodes["g.t2"].succ == ("y", "g.s1")
        assert gd.nodes["g.t1"].succ == ("x", "g.bot")

    def test_continuation_count(self):
        with pytest.raises(ValueError):
            build_chance_gadget([F(1, 2)], ["x", "y"])

    @settings(max_examples=50)
    @given(st.integers(0, 10**9))
    def test_q_profile_simulates_chance(self, seed):
        rnd = random.Random(seed)
        p = random_weights(rnd, rnd.randint(1, 5))
        g, gd = gadget_game(p)
        prof = StationaryProfile(gd.q_profile())
        for i, pi in enumerate(p, start=1):
            assert reach_probabilities(g, prof, [f"u{i}"])[g.initial] == pi
        assert reach_probabilities(g, prof, [gd.bottom])[g.initial] == 1 - sum(p)
        assert expected_payoffs(g, prof)[0] == 1
        assert regret_vector(g, prof) == (0, 0, 0)


class TestElimination:
    def test_coin_halves(self):
        det, gadgets = eliminate_chance_nodes(coin())
        assert det.players == 4 and det.is_deterministic
        u = expected_payoffs(det, StationaryProfile(q_profile(gadgets)))
        assert u[0] == F(3, 8)

    def test_deterministic_input_unchanged(self):
        g = gamegen.acyclic_game(random.Random(2), chance=False)
        det, gadgets = eliminate_chance_nodes(g)
        assert det == g and gadgets == []

    def test_nested_group_rejected(self):
        g = Game(
            1,
            {
                "c1": Node.chance("c1", [("c2", F(1, 2)), ("a", F(1, 2))]),
                "c2": Node.chance("c2", [("a", F(1, 2)), ("b", F(1, 2))]),
                "a": Node.terminal("a", [0]),
                "b": Node.terminal("b", [1]),
            },
            "c1",
        )
        with pytest.raises(ValueError, match="nested"):
            eliminate_chance_nodes(g, grouping="shared-independent")

    def test_cyclic_rejected(self):
        g = Game(
            1,
            {"c": Node.chance("c", [("c", F(1, 2)), ("t", F(1, 2))]), "t": Node.terminal("t", [1])},
            "c",
        )
        with pytest.raises(ValueError):
            eliminate_chance_nodes(g)

    @pytest.mark.parametrize("scale", [0, 1, F(3, 2)])
    def test_scale_range(self, scale):
        with pytest.raises(ValueError):
            eliminate_chance_nodes(coin(), scale)

    @settings(max_examples=30)
    @given(st.integers(0, 10**9))
    def test_players_and_determinism(self, seed):
        rnd = random.Random(seed)
        g = gamegen.acyclic_game(rnd, inner=5, leaves=3, players=2)
        det, gadgets = eliminate_chance_nodes(g)
        n_chance = sum(1 for n in g.nodes.values() if n.is_chance)
        assert det.is_deterministic
        assert det.players == g.players + 3 * n_chance
        assert validate(det).ok


class TestDeterministicFull:
    def test_witness_meets_demand(self):
        out = build_deterministic_full_game(SAT)
        g = out.game
        assert g.players == 13 and g.is_deterministic and g.is_acyclic
        rep = verify_ne(g, witness_to_profile(out, [F(1, 2), F(1, 2)]), 0, out.demand)
        assert rep.is_ne and rep.demands_met
        assert out.demand == demand_vector(2, 1, "deterministic13")

    def test_rewards_non_negative(self):
        g = build_deterministic_full_game(SAT).game
        assert all(r >= 0 for t in g.terminals for r in g.nodes[t].reward)

    def test_poly_threats_quartered(self):
        g = build_deterministic_full_game(SAT).game
        assert g.nodes["poly1.t6"].reward[5] == F(1, 16)


class TestPartition:
    @staticmethod
    def positional_ne(g, demand):
        return [p for p in enumerate_positional(g) if verify_ne(g, p, 0, demand).holds]

    def test_equal_split_example(self):
        g, demand = build_partition_game([1, 1, 2])
        assert demand.values == (F(2, 3), F(2, 3))
        p = partition_witness([1, 1, 2], {1, 2})
        rep = verify_ne(g, p, 0, demand)
        assert rep.is_ne and rep.payoffs == (F(2, 3), F(2, 3))

    def test_odd_total_has_no_equilibrium(self):
        g, demand = build_partition_game([1, 1, 1])
        assert self.positional_ne(g, demand) == []
        assert equal_partition([1, 1, 1]) is None

    def test_brute_force_matches_partitions(self):
        g, demand = build_partition_game([1, 1, 2])
        found = self.positional_ne(g, demand)
        assert found
        for p in found:
            given_away = {i for i in (1, 2, 3) if p.dist(g.nodes[f"item{i}"])[f"item{i}.give"] == 1}
            assert sum([1, 1, 2][i - 1] for i in given_away) == 2

    def test_paper_demand(self):
        _, demand = build_partition_game([1, 1, 2], paper_demand=True)
        assert demand.values == (2, 2)

    @pytest.mark.parametrize("a", [[], [1, 0], [-1]])
    def test_bad_items(self, a):
        with pytest.raises(ValueError):
            build_partition_game(a)

    def test_derandomized_witness(self):
        d = derandomize_partition([1, 1, 2])
        g, demand = d
        assert g.players == 5 and g.is_deterministic and is_tree(g)
        assert demand.values == (F(1, 3), F(1, 3), 1, 0, 0)
        rep = verify_ne(g, d.witness({1, 2}), 0, demand)
        assert rep.is_ne and rep.demands_met
        assert rep.payoffs == (F(1, 3), F(1, 3), 1, F(1, 2), F(1, 2))

    def test_derandomized_odd_total(self):
        d = derandomize_partition([1, 1, 1])
        base = d.gadget.q_profile()
        items = [f"item{i}" for i in (1, 2, 3)]
        for combo in itertools.product(["give", "pass"], ["to1", "discard"], repeat=3):
            moves = {}
            for k, u in enumerate(items):
                moves[u] = f"{u}.{combo[2 * k]}"
                moves[f"{u}.pass"] = f"{u}.{combo[2 * k + 1]}"
            p = StationaryProfile.pure(moves).updated(base)
            assert not verify_ne(d.game, p, 0, d.demand).holds


class TestCycles:
    def test_example(self):
        g = Game(2, {"t": Node.terminal("t", [F(2, 3), F(1, 3)])}, "t")
        c = rewards_to_cycles(g)
        assert len(c) == 3
        assert [c.node_rewards.get(v, (0, 0)) for v in ("t", "t.c1", "t.c2")] == [(1, 1), (1, 0), (0, 0)]
        assert mean_payoff(c, StationaryProfile()) == (F(2, 3), F(1, 3))

    def test_zero_terminal(self):
        c = rewards_to_cycles(Game(2, {"t": Node.terminal("t", [0, 0])}, "t"))
        assert len(c) == 1
        assert mean_payoff(c, StationaryProfile()) == (0, 0)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            rewards_to_cycles(Game(1, {"t": Node.terminal("t", [2])}, "t"))

    def test_full_game(self):
        out = build_full_game(SAT)
        p = witness_to_profile(out, [F(1, 2), F(1, 2)])
        assert mean_payoff(rewards_to_cycles(out.game), p) == out.demand.values

    @settings(max_examples=50)
    @given(st.integers(0, 10**9))
    def test_preserves_payoffs(self, seed):
        rnd = random.Random(seed)
        g = gamegen.acyclic_game(rnd, inner=4, leaves=3, players=2)
        p = gamegen.profile(rnd, g)
        assert mean_payoff(rewards_to_cycles(g), p) == expected_payoffs(g, p)
