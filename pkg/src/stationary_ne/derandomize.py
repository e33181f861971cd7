"""Replace chance nodes by three-player threat gadgets, plus the partition
game and the reward-to-cycle transform for mean-payoff games.

A chance node with outcome probabilities ``p`` (``sum(p) < 1``) is
simulated by a chain ``s_n, r_n, t_n, ..., s_1, r_1, t_1``:

* ``s_i`` -- gadget-P2 may leave to a terminal paying it ``1 - qhat_i``
* ``r_i`` -- gadget-P3 may leave to a terminal paying it ``qhat_i``
* ``t_i`` -- gadget-P1 picks continuation ``u_i`` or moves on to ``s_{i-1}``
  (``t_1`` moves on to the bottom terminal instead)

With the threats off and ``t_i`` moving on with probability ``q_i``, each
``u_i`` is reached with probability ``p_i`` and both threats are exactly
indifferent.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from ._exact import ONE, ZERO
from .game import CycleError, Game, Node, PayoffDemand, StationaryProfile, as_fraction, validate
from .polynomials import PolySystem
from .reductions import (
    Fragment,
    ReductionOutput,
    _check_system,
    _full_fragment,
    demand_vector,
)

__all__ = [
    "ChanceGadget",
    "ChanceWeights",
    "build_chance_gadget",
    "build_deterministic_full_game",
    "build_partition_game",
    "chance_weights",
    "derandomize_partition",
    "eliminate_chance_nodes",
    "equal_partition",
    "gadget_game",
    "partition_witness",
    "rewards_to_cycles",
]


@dataclass(frozen=True)
class ChanceWeights:
    p: tuple[Fraction, ...]
    q: tuple[Fraction, ...]
    q_hat: tuple[Fraction, ...]

    def outcome_probability(self, i: int) -> Fraction:
        """Probability of reaching ``u_i`` (1-based) from ``s_n``."""
        tail = math.prod(self.q[i:], start=ONE)
        return (1 - self.q[i - 1]) * tail

    @property
    def bottom_probability(self) -> Fraction:
        return math.prod(self.q, start=ONE)


def chance_weights(p: Iterable) -> ChanceWeights:
    p = tuple(as_fraction(x) for x in p)
    if any(x < 0 for x in p):
        raise ValueError("chance weights must be non-negative")
    if sum(p, ZERO) >= 1:
        raise ValueError("chance weights must sum to less than 1")
    n = len(p)
    q = []
    for i in range(n):
        num = 1 - sum(p[i:], ZERO)
        den = 1 - sum(p[i + 1 :], ZERO)
        q.append(num / den)
    q_hat = []
    acc = ONE
    for x in q:
        acc *= x
        q_hat.append(acc)
    return ChanceWeights(p, tuple(q), tuple(q_hat))


@dataclass(frozen=True)
class ChanceGadget:
    nodes: dict[str, Node]
    entry: str
    weights: ChanceWeights
    players: tuple[int, int, int]
    prefix: str
    continuations: tuple[str, ...]
    bottom: str

    def q_profile(self) -> dict[str, dict[str, Fraction]]:
        """Threats off; ``t_i`` moves on with probability ``q_i``."""
        out: dict[str, dict[str, Fraction]] = {}
        c = self.prefix
        for i, q in enumerate(self.weights.q, start=1):
            out[f"{c}.s{i}"] = {f"{c}.s{i}.x": ZERO, f"{c}.r{i}": ONE}
            out[f"{c}.r{i}"] = {f"{c}.r{i}.x": ZERO, f"{c}.t{i}": ONE}
            on = f"{c}.s{i - 1}" if i > 1 else self.bottom
            u = self.continuations[i - 1]
            if u == on:
                out[f"{c}.t{i}"] = {u: ONE}
            else:
                out[f"{c}.t{i}"] = {u: 1 - q, on: q}
        return out

    @property
    def controlled(self) -> list[str]:
        return [v for v, n in self.nodes.items() if n.is_controlled]


def build_chance_gadget(
    p: Sequence,
    continuations: Sequence[str],
    gadget_players: tuple[int, int, int] = (1, 2, 3),
    bottom_rewards: Sequence | None = None,
    m: int | None = None,
    prefix: str = "g",
    threat_base: Sequence | None = None,
) -> ChanceGadget:
    """Gadget fragment simulating a sub-stochastic chance node.

    ``threat_base`` is the reward vector paid to every player other than the
    threatening one at the two threat terminals (defaults to zeros), and
    ``bottom_rewards`` defaults to 1 for gadget-P1 and gadget-P3.
    """
    w = chance_weights(p)
    if len(continuations) != len(w.p):
        raise ValueError("need exactly one continuation per outcome")
    g1, g2, g3 = gadget_players
    m = m if m is not None else max(gadget_players)
    base = list(as_fraction(x) for x in threat_base) if threat_base is not None else [ZERO] * m
    if len(base) != m:
        raise ValueError("threat_base has the wrong arity")
    if bottom_rewards is None:
        bottom = [ZERO] * m
        bottom[g1 - 1] = bottom[g3 - 1] = ONE
    else:
        bottom = [as_fraction(x) for x in bottom_rewards]
    if len(bottom) != m:
        raise ValueError("bottom_rewards has the wrong arity")
    c = prefix
    bot = f"{c}.bot"
    nodes: dict[str, Node] = {}
    n = len(w.p)
    for i in range(n, 0, -1):
        s, r, t = f"{c}.s{i}", f"{c}.r{i}", f"{c}.t{i}"
        xs = list(base)
        xs[g2 - 1] = 1 - w.q_hat[i - 1]
        xr = list(base)
        xr[g3 - 1] = w.q_hat[i - 1]
        nodes[s] = Node.controlled(s, g2, [f"{s}.x", r])
        nodes[f"{s}.x"] = Node.terminal(f"{s}.x", xs)
        nodes[r] = Node.controlled(r, g3, [f"{r}.x", t])
        nodes[f"{r}.x"] = Node.terminal(f"{r}.x", xr)
        on = f"{c}.s{i - 1}" if i > 1 else bot
        u = continuations[i - 1]
        nodes[t] = Node.controlled(t, g1, [u] if u == on else [u, on])
    nodes[bot] = Node.terminal(bot, bottom)
    entry = f"{c}.s{n}" if n else bot
    return ChanceGadget(nodes, entry, w, (g1, g2, g3), c, tuple(continuations), bot)


def gadget_game(p: Sequence) -> tuple[Game, ChanceGadget]:
    """Three-player game with the gadget's continuations turned into terminals
    paying ``(1, 1, 0)``; the bottom pays ``(1, 0, 1)``."""
    conts = [f"u{i}" for i in range(1, len(p) + 1)]
    gadget = build_chance_gadget(p, conts, prefix="g")
    nodes = dict(gadget.nodes)
    for u in conts:
        nodes[u] = Node.terminal(u, (ONE, ONE, ZERO))
    return Game(3, nodes, gadget.entry), gadget


# --------------------------------------------------------------------------
# chance-node elimination


def _reachable(g: Game, start: str, blocked: set[str]) -> set[str]:
    seen = set()
    stack = [start] if start not in blocked else []
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        stack.extend(w for w in g.nodes[v].succ if w not in blocked and w not in seen)
    return seen


def eliminate_chance_nodes(
    g: Game,
    scale=Fraction(1, 2),
    grouping: str = "per-node",
    groups: Sequence[Sequence[str]] | None = None,
) -> tuple[Game, list[ChanceGadget]]:
    """Replace every chance node ``c`` by a gadget with ``p = scale * pi_c``.

    Each group of chance nodes gets three fresh players appended after the
    existing ones.  ``per-node`` makes one group per chance node;
    ``shared-independent`` uses the caller's ``groups`` (default: all chance
    nodes in one group), and members of a group must not be reachable from
    one another.  For each group the terminals that can only be reached
    through one of its chance nodes pay ``(1, 1, 0)`` to its players;
    everything else pays ``(0, 0, 0)`` except the group's own gadget
    terminals.
    """
    scale = as_fraction(scale)
    if not 0 < scale < 1:
        raise ValueError("scale must lie strictly between 0 and 1")
    if not g.is_acyclic:
        raise CycleError("chance elimination needs an acyclic game", list(g._topology[1] or ()))
    if g.objective != "rewards":
        raise ValueError("chance elimination works on terminal-reward games")
    chance = [v for v, n in g.nodes.items() if n.is_chance]
    if not chance:
        return g, []
    if grouping == "per-node":
        groups = [[c] for c in chance]
    elif grouping == "shared-independent":
        groups = [list(chance)] if groups is None else [list(x) for x in groups]
    else:
        raise ValueError(f"unknown grouping {grouping!r}")
    seen = [c for grp in groups for c in grp]
    if sorted(seen) != sorted(chance):
        raise ValueError("groups must partition the chance nodes exactly once")
    for grp in groups:
        for a in grp:
            below = _reachable(g, a, set())
            for b in grp:
                if a != b and b in below:
                    raise ValueError(f"nested gadgets in one shared group: {a!r} reaches {b!r}")

    m0 = g.players
    m = m0 + 3 * len(groups)
    everything = _reachable(g, g.initial, set())
    # nodes whose every path from the initial node crosses the group
    inside = [everything - _reachable(g, g.initial, set(grp)) for grp in groups]

    def others(v: str, skip: int | None) -> list[Fraction]:
        vec = []
        for k in range(len(groups)):
            if k == skip:
                vec += [ZERO] * 3
            elif v in inside[k]:
                vec += [ONE, ONE, ZERO]
            else:
                vec += [ZERO] * 3
        return vec

    nodes: dict[str, Node] = {}
    gadgets: list[ChanceGadget] = []
    redirect = {c: f"{c}.s{len(g.nodes[c].succ)}" for c in chance}
    for k, grp in enumerate(groups):
        players = (m0 + 3 * k + 1, m0 + 3 * k + 2, m0 + 3 * k + 3)
        for c in grp:
            node = g.nodes[c]
            base = [ZERO] * m0 + others(c, k)
            bottom = list(base)
            bottom[players[0] - 1] = bottom[players[2] - 1] = ONE
            gadget = build_chance_gadget(
                [scale * x for x in node.probs],
                [redirect.get(w, w) for w in node.succ],
                players,
                bottom_rewards=bottom,
                m=m,
                prefix=c,
                threat_base=base,
            )
            gadgets.append(gadget)
    for v, node in g.nodes.items():
        if node.is_chance:
            gadget = next(x for x in gadgets if x.prefix == v)
            nodes.update(gadget.nodes)
        elif node.is_terminal:
            nodes[v] = Node.terminal(v, node.reward + tuple(others(v, None)))
        else:
            nodes[v] = Node.controlled(v, node.player, [redirect.get(w, w) for w in node.succ])
    out = Game(m, nodes, redirect.get(g.initial, g.initial))
    report = validate(out)
    if not report.ok:
        raise AssertionError(f"elimination produced an invalid game: {report.violations}")
    return out, gadgets


def build_deterministic_full_game(s: PolySystem) -> ReductionOutput:
    """13-player deterministic version of G(S).

    The root chance node is merged with the variable chance node (``1/(2n)``
    per ``v_i``, ``1/(2l)`` per polynomial game) and then every chance node is
    eliminated at scale 1/2: one gadget triple (8, 9, 10) at the root and one
    triple (11, 12, 13) shared by all polynomial chance nodes.
    """
    _check_system(s)
    n, ell = s.n, s.size
    frag: Fragment = _full_fragment(s, 7, merged_root=True, threat_value=Fraction(1, 4 * n * n))
    g = Game(7, frag.nodes, "root")
    inner = [f"poly{k}.chance" for k in range(1, ell + 1)]
    det, gadgets = eliminate_chance_nodes(g, Fraction(1, 2), "shared-independent", [["root"], inner])
    index = dict(frag.index)
    for gadget in gadgets:
        index[gadget.prefix] = gadget.entry
        index[f"{gadget.prefix}.bot"] = gadget.bottom
    entries = {x.prefix: x.entry for x in gadgets}
    threats = {v: entries.get(w, w) for v, w in frag.threats.items()}
    dem = demand_vector(n, ell, "deterministic13")
    return ReductionOutput(
        game=det,
        demand=dem,
        demand_reduced=dem,
        node_index=index,
        n=n,
        var_nodes=tuple(f"var.v{i}" for i in range(1, n + 1)),
        threats=threats,
        mul_choices=tuple(frag.mul_choices),
        gadgets=tuple(gadgets),
        system=s,
        variant="deterministic13",
    )


# --------------------------------------------------------------------------
# partition


def _check_items(a) -> tuple[Fraction, ...]:
    a = tuple(as_fraction(x) for x in a)
    if not a:
        raise ValueError("partition needs at least one item")
    if any(x <= 0 for x in a):
        raise ValueError("item sizes must be positive")
    return a


def build_partition_game(a: Sequence, paper_demand: bool = False) -> tuple[Game, PayoffDemand]:
    """Two-player tree: chance picks item ``i`` uniformly, Player 1 gives it
    to Player 2 or passes, then Player 2 gives it to Player 1 or discards it.

    The demand is ``K/(2n)`` per player (the expected value of an equal
    split); ``paper_demand`` gives ``K/2`` instead.
    """
    a = _check_items(a)
    n = len(a)
    nodes = {"root": Node.chance("root", [(f"item{i}", Fraction(1, n)) for i in range(1, n + 1)])}
    for i, x in enumerate(a, start=1):
        u = f"item{i}"
        nodes[u] = Node.controlled(u, 1, [f"{u}.give", f"{u}.pass"])
        nodes[f"{u}.give"] = Node.terminal(f"{u}.give", (ZERO, x))
        nodes[f"{u}.pass"] = Node.controlled(f"{u}.pass", 2, [f"{u}.to1", f"{u}.discard"])
        nodes[f"{u}.to1"] = Node.terminal(f"{u}.to1", (x, ZERO))
        nodes[f"{u}.discard"] = Node.terminal(f"{u}.discard", (ZERO, ZERO))
    total = sum(a, ZERO)
    share = total / 2 if paper_demand else total / (2 * n)
    return Game(2, nodes, "root"), PayoffDemand((share, share))


def equal_partition(a: Sequence) -> frozenset[int] | None:
    """Some 1-based index set holding exactly half the total, or ``None``."""
    a = _check_items(a)
    half = sum(a, ZERO) / 2
    for r in range(len(a) + 1):
        for subset in combinations(range(1, len(a) + 1), r):
            if sum((a[i - 1] for i in subset), ZERO) == half:
                return frozenset(subset)
    return None


def partition_witness(a: Sequence, to_player2: Iterable[int]) -> StationaryProfile:
    """Positional profile: items in ``to_player2`` are given to Player 2 (and
    Player 2 would discard them if passed); the rest go to Player 1."""
    a = _check_items(a)
    chosen = set(to_player2)
    moves = {}
    for i in range(1, len(a) + 1):
        u = f"item{i}"
        if i in chosen:
            moves[u] = f"{u}.give"
            moves[f"{u}.pass"] = f"{u}.discard"
        else:
            moves[u] = f"{u}.pass"
            moves[f"{u}.pass"] = f"{u}.to1"
    return StationaryProfile.pure(moves)


@dataclass(frozen=True)
class DerandomizedPartition:
    game: Game
    demand: PayoffDemand
    gadget: ChanceGadget
    items: tuple[Fraction, ...] = field(default=())

    def __iter__(self):
        return iter((self.game, self.demand))

    def witness(self, to_player2: Iterable[int]) -> StationaryProfile:
        base = partition_witness(self.items, to_player2)
        return base.updated(self.gadget.q_profile())


def derandomize_partition(a: Sequence) -> DerandomizedPartition:
    """Five-player deterministic tree: the uniform item choice becomes a
    gadget with ``p = (1/(2n), ..., 1/(2n))``; demand ``(K/(4n), K/(4n), 1, 0, 0)``."""
    a = _check_items(a)
    n = len(a)
    g, _ = build_partition_game(a)
    det, gadgets = eliminate_chance_nodes(g, Fraction(1, 2), "per-node")
    share = sum(a, ZERO) / (4 * n)
    return DerandomizedPartition(det, PayoffDemand((share, share, 1, 0, 0)), gadgets[0], a)


# --------------------------------------------------------------------------
# mean payoff


def rewards_to_cycles(g: Game) -> Game:
    """Turn each terminal into a simple cycle whose average reward per player
    equals the terminal reward.

    The cycle for a terminal ``t`` has length ``D`` (lcm of the reward
    denominators); ``t`` itself is cycle position 0 and the others are
    ``t.c1 .. t.c<D-1>``.  Player ``i`` earns 1 on the first ``r_i * D``
    positions.  Cycle nodes belong to Player 1 and have a single successor.
    """
    if g.objective != "rewards":
        raise ValueError("rewards_to_cycles needs a terminal-reward game")
    m = g.players
    nodes: dict[str, Node] = {}
    node_rewards: dict[str, tuple[Fraction, ...]] = {}
    for v, node in g.nodes.items():
        if not node.is_terminal:
            nodes[v] = node
            continue
        if any(not 0 <= r <= 1 for r in node.reward):
            raise ValueError(f"terminal {v!r}: rewards must lie in [0, 1]")
        d = math.lcm(*(r.denominator for r in node.reward)) if node.reward else 1
        ring = [v] + [f"{v}.c{k}" for k in range(1, d)]
        for k, w in enumerate(ring):
            if k > 0 and w in g.nodes:
                raise ValueError(f"cycle node id {w!r} already in use")
            nodes[w] = Node.controlled(w, 1, [ring[(k + 1) % d]])
            vec = tuple(ONE if k < r * d else ZERO for r in node.reward)
            if any(vec):
                node_rewards[w] = vec
    return Game(m, nodes, g.initial, "meanpayoff", node_rewards=node_rewards)
