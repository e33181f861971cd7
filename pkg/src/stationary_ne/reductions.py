"""Compile homogeneous quadratic systems into acyclic recursive games.

Node ids follow role paths so they are stable across runs:

* ``root`` -- initial chance node of G(S)
* ``var``, ``var.v<i>``, ``var.v<i>.a`` / ``.b`` -- variable selection
* ``poly<k>`` (Player 6 threat), ``poly<k>.p7``, ``poly<k>.chance``,
  ``poly<k>.t6`` / ``.t7`` -- polynomial evaluation
* ``poly<k>.mul.<i>.<j>.w1`` ... ``.w6`` plus terminals ``.t3``, ``.t6a``,
  ``.t6b`` -- multiplication gadgets; threat edges point at the shared
  ``var.v<i>`` nodes

Players are 1-based throughout.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from ._exact import ONE, ZERO
from .game import Game, Node, PayoffDemand, StationaryProfile, as_fraction, validate
from .polynomials import PolySystem, SimplexPoint

__all__ = [
    "Fragment",
    "ReductionOutput",
    "build_exists_ne_game",
    "build_full_game",
    "build_mul_game",
    "build_poly_game",
    "build_sure_game",
    "build_var_game",
    "demand_vector",
    "mul_game",
    "poly_game",
    "profile_to_witness",
    "reward_vector",
    "var_game",
    "witness_to_profile",
]

DEMAND_VARIANTS = ("full", "reduced", "deterministic13", "sure8")


def reward_vector(m: int, entries: Mapping[int, Fraction]) -> tuple[Fraction, ...]:
    """Length-``m`` vector with the given 1-based entries, zero elsewhere."""
    vec = [ZERO] * m
    for i, r in entries.items():
        vec[i - 1] = as_fraction(r)
    return tuple(vec)


@dataclass
class Fragment:
    nodes: dict[str, Node]
    root: str
    index: dict[str, str] = field(default_factory=dict)
    threats: dict[str, str] = field(default_factory=dict)
    # (w3 id, i, w6 id, j) for every multiplication gadget, 1-based i, j
    mul_choices: list[tuple[str, int, str, int]] = field(default_factory=list)

    def absorb(self, other: Fragment) -> None:
        for v in other.nodes:
            if v in self.nodes and self.nodes[v] != other.nodes[v]:
                raise ValueError(f"node id clash on {v!r}")
        self.nodes.update(other.nodes)
        self.index.update(other.index)
        self.threats.update(other.threats)
        self.mul_choices.extend(other.mul_choices)


@dataclass(frozen=True)
class ReductionOutput:
    game: Game
    demand: PayoffDemand | None
    demand_reduced: PayoffDemand | None
    node_index: dict[str, str]
    n: int
    var_nodes: tuple[str, ...]
    threats: dict[str, str]
    mul_choices: tuple[tuple[str, int, str, int], ...]
    gadgets: tuple = ()
    system: PolySystem | None = None
    variant: str = "full"


def _var_fragment(n: int, m: int) -> Fragment:
    nodes = {"var": Node.chance("var", [(f"var.v{i}", Fraction(1, n)) for i in range(1, n + 1)])}
    index = {"var": "var"}
    for i in range(1, n + 1):
        v = f"var.v{i}"
        nodes[v] = Node.controlled(v, 1, [f"{v}.a", f"{v}.b"])
        nodes[f"{v}.a"] = Node.terminal(f"{v}.a", reward_vector(m, {2: 1, 4: 1}))
        nodes[f"{v}.b"] = Node.terminal(f"{v}.b", reward_vector(m, {3: 1, 5: 1}))
        index[f"v{i}"] = v
    return Fragment(nodes, "var", index)


def build_var_game(n: int, m: int = 7) -> tuple[Game, dict[str, str]]:
    """Variable selection: chance picks ``v_i`` uniformly; Player 1 then
    hands reward 1 either to Players 2 and 4 or to Players 3 and 5."""
    if n < 1:
        raise ValueError("need at least one variable")
    if m < 5:
        raise ValueError("variable selection needs at least 5 players")
    frag = _var_fragment(n, m)
    return Game(m, frag.nodes, "var"), frag.index


def build_mul_game(
    i: int,
    j: int,
    alpha,
    var_index: Mapping[str, str],
    m: int = 7,
    prefix: str | None = None,
) -> Fragment:
    """Multiplication gadget ``w1 .. w6`` with threats into shared ``v_i``/``v_j``."""
    alpha = as_fraction(alpha)
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha={alpha} outside [0, 1]")
    p = prefix or f"mul.{i}.{j}"
    vi, vj = var_index[f"v{i}"], var_index[f"v{j}"]
    w = {k: f"{p}.w{k}" for k in range(1, 7)}
    nodes = {
        w[1]: Node.controlled(w[1], 2, [vi, w[2]]),
        w[2]: Node.controlled(w[2], 3, [vi, w[3]]),
        w[3]: Node.controlled(w[3], 1, [f"{p}.t3", w[4]]),
        f"{p}.t3": Node.terminal(f"{p}.t3", reward_vector(m, {1: 1, 3: 1})),
        w[4]: Node.controlled(w[4], 4, [vj, w[5]]),
        w[5]: Node.controlled(w[5], 5, [vj, w[6]]),
        w[6]: Node.controlled(w[6], 1, [f"{p}.t6a", f"{p}.t6b"]),
        f"{p}.t6a": Node.terminal(f"{p}.t6a", reward_vector(m, {1: 1, 2: 1, 4: 1, 6: alpha, 7: 1 - alpha})),
        f"{p}.t6b": Node.terminal(f"{p}.t6b", reward_vector(m, {1: 1, 2: 1, 5: 1})),
    }
    threats = {w[1]: w[2], w[2]: w[3], w[4]: w[5], w[5]: w[6]}
    index = {f"{p}.w{k}": w[k] for k in range(1, 7)}
    return Fragment(nodes, w[1], index, threats, [(w[3], i, w[6], j)])


def build_poly_game(
    k: int,
    s: PolySystem,
    var_index: Mapping[str, str],
    threat_value=None,
    m: int = 7,
    continue_prob=None,
) -> Fragment:
    """Polynomial evaluation for ``q_k``: threats by Players 6 and 7, then a
    chance node over all ``G_mul(i, j, (1 + a_ij)/2)``.

    ``continue_prob`` overrides the per-gadget chance weight (default
    ``1/n^2``); any leftover mass is left for the caller to route.
    """
    n = s.n
    q = s.polys[k - 1]
    if not q.is_homogeneous:
        raise ValueError("polynomial evaluation needs a homogeneous system")
    if any(abs(a) > 1 for row in q.quad for a in row):
        raise ValueError("coefficient outside [-1, 1]; scale the system first")
    threat = Fraction(1, 2 * n * n) if threat_value is None else as_fraction(threat_value)
    weight = Fraction(1, n * n) if continue_prob is None else as_fraction(continue_prob)
    p = f"poly{k}"
    frag = Fragment(
        {
            p: Node.controlled(p, 6, [f"{p}.t6", f"{p}.p7"]),
            f"{p}.t6": Node.terminal(f"{p}.t6", reward_vector(m, {6: threat})),
            f"{p}.p7": Node.controlled(f"{p}.p7", 7, [f"{p}.t7", f"{p}.chance"]),
            f"{p}.t7": Node.terminal(f"{p}.t7", reward_vector(m, {7: threat})),
        },
        p,
        {p: p, f"{p}.p7": f"{p}.p7", f"{p}.chance": f"{p}.chance"},
        {p: f"{p}.p7", f"{p}.p7": f"{p}.chance"},
    )
    dist = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            alpha = (1 + q.quad[i - 1][j - 1]) / 2
            sub = build_mul_game(i, j, alpha, var_index, m, prefix=f"{p}.mul.{i}.{j}")
            frag.absorb(sub)
            dist.append((sub.root, weight))
    frag.nodes[f"{p}.chance"] = Node.chance(f"{p}.chance", dist)
    return frag


def _check_system(s: PolySystem) -> None:
    if not s.polys:
        raise ValueError("system has no polynomials")
    if not s.is_homogeneous:
        raise ValueError("system must be homogeneous (see homogenize)")
    if not s.is_scaled:
        raise ValueError("coefficients must lie in [-1, 1] (see scale_coefficients)")


def _output(game, frag, n, demand, reduced, s, variant, gadgets=()) -> ReductionOutput:
    report = validate(game)
    if not report.ok:
        raise AssertionError(f"builder produced an invalid game: {report.violations}")
    return ReductionOutput(
        game=game,
        demand=demand,
        demand_reduced=reduced,
        node_index=dict(frag.index),
        n=n,
        var_nodes=tuple(f"var.v{i}" for i in range(1, n + 1)),
        threats=dict(frag.threats),
        mul_choices=tuple(frag.mul_choices),
        gadgets=tuple(gadgets),
        system=s,
        variant=variant,
    )


def _full_fragment(s: PolySystem, m: int, merged_root: bool = False, threat_value=None) -> Fragment:
    n, ell = s.n, s.size
    frag = _var_fragment(n, m)
    for k in range(1, ell + 1):
        frag.absorb(build_poly_game(k, s, frag.index, threat_value, m))
    if merged_root:
        del frag.nodes["var"], frag.index["var"]
        dist = [(f"var.v{i}", Fraction(1, 2 * n)) for i in range(1, n + 1)]
    else:
        dist = [("var", Fraction(1, 2))]
    dist += [(f"poly{k}", Fraction(1, 2 * ell)) for k in range(1, ell + 1)]
    frag.nodes = {"root": Node.chance("root", dist), **frag.nodes}
    frag.index["root"] = "root"
    frag.root = "root"
    return frag


def build_full_game(s: PolySystem, m: int = 7) -> ReductionOutput:
    """G(S): chance to the variable game (1/2) and to each polynomial game
    (1/(2l)); all polynomial games share the variable nodes."""
    _check_system(s)
    frag = _full_fragment(s, m)
    game = Game(m, frag.nodes, "root")
    return _output(
        game, frag, s.n,
        demand_vector(s.n, s.size, "full", m), demand_vector(s.n, s.size, "reduced", m),
        s, "full",
    )


def demand_vector(n: int, ell: int = 1, variant: str = "full", m: int | None = None) -> PayoffDemand:
    """Payoff demand vectors used by the reductions (optionally zero-padded to ``m``)."""
    if n < 1 or ell < 1:
        raise ValueError("n and l must be positive")
    F = Fraction
    if variant == "full":
        vals = [F(1, 2), F(1, n), 1 - F(1, n), F(1 + n, 2 * n * n), F(n * n - 1, 2 * n * n),
                F(1, 4 * n * n), F(1, 4 * n * n)]
    elif variant == "reduced":
        vals = [F(1, 2), F(1, n), F(n - 1, n), 0, 0, 0, 0]
    elif variant == "deterministic13":
        vals = [F(1, 8), F(3, 8 * n), F(3, 8) * (1 - F(1, n)), 0, 0, 0, 0, 1, 0, 0, F(1, 4), 0, 0]
    elif variant == "sure8":
        vals = [0] * 7 + [1]
    else:
        raise ValueError(f"unknown demand variant {variant!r}")
    if m is not None:
        if m < len(vals):
            raise ValueError(f"variant {variant} needs at least {len(vals)} players")
        vals = vals + [0] * (m - len(vals))
    return PayoffDemand(tuple(F(v) for v in vals))


def build_sure_game(s: PolySystem) -> ReductionOutput:
    """Players 1-3 may exit before G(S) at the reduced demand; Player 8 wins
    exactly when nobody exits."""
    _check_system(s)
    n = s.n
    frag = _full_fragment(s, 8)
    for v, node in list(frag.nodes.items()):
        if node.is_terminal:
            frag.nodes[v] = Node.terminal(v, node.reward[:7] + (ONE,))
    exit_reward = reward_vector(8, {1: Fraction(1, 2), 2: Fraction(1, n), 3: Fraction(n - 1, n)})
    head = {
        "sure.p1": Node.controlled("sure.p1", 1, ["sure.exit", "sure.p2"]),
        "sure.p2": Node.controlled("sure.p2", 2, ["sure.exit", "sure.p3"]),
        "sure.p3": Node.controlled("sure.p3", 3, ["sure.exit", "root"]),
        "sure.exit": Node.terminal("sure.exit", exit_reward),
    }
    frag.nodes = {**head, **frag.nodes}
    frag.threats.update({"sure.p1": "sure.p2", "sure.p2": "sure.p3", "sure.p3": "root"})
    frag.index.update({k: k for k in ("sure.p1", "sure.p2", "sure.p3", "sure.exit")})
    game = Game(8, frag.nodes, "sure.p1")
    dem = demand_vector(n, s.size, "sure8")
    return _output(game, frag, n, dem, dem, s, "sure")


def _embed_gadget(gadget: Game, m: int, players: Sequence[int], prefix: str = "noNE.") -> dict[str, Node]:
    if gadget.objective != "rewards":
        raise ValueError("plug-in gadget must be a terminal-reward game")
    if len(players) < gadget.players:
        raise ValueError("not enough target players for the gadget")
    nodes = {}
    for v, node in gadget.nodes.items():
        new = prefix + v
        if node.is_terminal:
            nodes[new] = Node.terminal(
                new, reward_vector(m, {players[k]: r for k, r in enumerate(node.reward)})
            )
        elif node.is_chance:
            nodes[new] = Node(new, node.kind, tuple(prefix + w for w in node.succ), probs=node.probs)
        else:
            nodes[new] = Node.controlled(new, players[node.player - 1], [prefix + w for w in node.succ])
    return nodes


def build_exists_ne_game(
    s: PolySystem,
    gadget: Game,
    deterministic: bool = False,
    gadget_players: Sequence[int] = (4, 5, 6),
) -> ReductionOutput:
    """Compose G(S) with a plug-in game that has no stationary NE.

    Randomized form: Players 1-3 may leave to a chance node that pays twice
    the reduced demand with probability 1/2 and enters the gadget otherwise.
    Deterministic form: starts from the 13-player deterministic game with the
    rewards of Players 1, 2, 3, 8, 11 shifted down by their demands, and the
    threats of those five players lead straight into the gadget.  Only the
    structure is asserted here; equilibrium behaviour depends on the gadget.
    """
    _check_system(s)
    n = s.n
    if deterministic:
        from .derandomize import build_deterministic_full_game

        if not gadget.is_deterministic:
            raise ValueError("deterministic composition needs a deterministic gadget")
        base = build_deterministic_full_game(s)
        m = base.game.players
        blocked = (1, 2, 3, 8, 11)
        shift = reward_vector(m, {1: Fraction(1, 8), 2: Fraction(3, 8 * n), 3: Fraction(3 * n - 3, 8 * n),
                                  8: 1, 11: Fraction(1, 4)})
    else:
        m = 7
        base = build_full_game(s)
        blocked = (1, 2, 3)
        shift = (ZERO,) * m
    players = tuple(gadget_players)[: gadget.players]
    if len(set(players)) != len(players) or any(p in blocked or not 1 <= p <= m for p in players):
        raise ValueError(f"player-index collision: gadget players {players} clash with {blocked} or range 1..{m}")
    nodes = {}
    for v, node in base.game.nodes.items():
        if node.is_terminal:
            nodes[v] = Node.terminal(v, tuple(r - d for r, d in zip(node.reward, shift)))
        else:
            nodes[v] = node
    inner = _embed_gadget(gadget, m, players)
    clash = set(inner) & set(nodes)
    if clash:
        raise ValueError(f"gadget node ids clash: {sorted(clash)}")
    entry = "noNE." + gadget.initial
    threats = dict(base.threats)
    head: dict[str, Node] = {}
    if deterministic:
        target = entry
        chain = list(blocked)
    else:
        target = "ene.t4"
        exit_reward = tuple(2 * x for x in demand_vector(n, s.size, "reduced", m))
        head["ene.t4"] = Node.chance("ene.t4", [("ene.exit", Fraction(1, 2)), (entry, Fraction(1, 2))])
        head["ene.exit"] = Node.terminal("ene.exit", exit_reward)
        chain = [1, 2, 3]
    ids = [f"ene.p{p}" for p in chain] + [base.game.initial]
    for k, p in enumerate(chain):
        head[ids[k]] = Node.controlled(ids[k], p, [target, ids[k + 1]])
        threats[ids[k]] = ids[k + 1]
    order = [ids[k] for k in range(len(chain))] + [v for v in head if v not in ids]
    all_nodes = {v: head[v] for v in order}
    all_nodes.update(nodes)
    all_nodes.update(inner)
    game = Game(m, all_nodes, ids[0])
    report = validate(game)
    if not report.ok:
        raise AssertionError(f"builder produced an invalid game: {report.violations}")
    index = dict(base.node_index)
    index.update({v: v for v in head})
    index["gadget"] = entry
    return ReductionOutput(
        game=game,
        demand=None,
        demand_reduced=None,
        node_index=index,
        n=n,
        var_nodes=base.var_nodes,
        threats=threats,
        mul_choices=base.mul_choices,
        gadgets=base.gadgets,
        system=s,
        variant="exists-ne-deterministic" if deterministic else "exists-ne",
    )


def mul_game(n: int, i: int, j: int, alpha, m: int = 7) -> ReductionOutput:
    """Stand-alone G_mul(i, j, alpha) rooted at ``w1``, with the variable nodes attached."""
    frag = _var_fragment(n, m)
    sub = build_mul_game(i, j, alpha, frag.index, m)
    frag.absorb(sub)
    game = Game(m, frag.nodes, sub.root)
    return _output(game, frag, n, None, None, None, "mul")


def poly_game(s: PolySystem, k: int = 1, m: int = 7) -> ReductionOutput:
    """Stand-alone G_poly(k) rooted at the Player 6 threat node."""
    frag = _var_fragment(s.n, m)
    frag.absorb(build_poly_game(k, s, frag.index, m=m))
    game = Game(m, frag.nodes, f"poly{k}")
    return _output(game, frag, s.n, None, None, s, "poly")


def var_game(n: int, m: int = 7) -> ReductionOutput:
    frag = _var_fragment(n, m)
    return _output(Game(m, frag.nodes, "var"), frag, n, None, None, None, "var")


def witness_to_profile(out: ReductionOutput, x, require_simplex: bool = True) -> StationaryProfile:
    """Stationary profile in which Player 1 plays according to ``x`` everywhere.

    ``v_i`` and every ``w3`` on variable ``i`` pick the first branch with
    probability ``x_i``; every ``w6`` on variable ``j`` picks its first
    terminal with probability ``x_j``; threat nodes always continue; chance
    gadgets follow their q-profiles.  Any other controlled node (for instance
    inside a plug-in gadget) takes its first successor.
    """
    point = x if isinstance(x, SimplexPoint) else SimplexPoint(tuple(x))
    if len(point) != out.n:
        raise ValueError(f"witness has {len(point)} coordinates, game has {out.n} variables")
    if require_simplex and not point.on_unit_simplex:
        raise ValueError("witness is not on the unit simplex")
    if any(not 0 <= v <= 1 for v in point.x):
        raise ValueError("witness coordinates must lie in [0, 1]")
    xs = point.x
    g = out.game
    choice: dict[str, dict[str, Fraction]] = {}

    def split(v: str, first_prob: Fraction):
        a, b = g.nodes[v].succ
        choice[v] = {a: first_prob, b: 1 - first_prob}

    for i, v in enumerate(out.var_nodes):
        if v in g.nodes:
            split(v, xs[i])
    for w3, i, w6, j in out.mul_choices:
        a, b = g.nodes[w3].succ
        choice[w3] = {a: 1 - xs[i - 1], b: xs[i - 1]}
        split(w6, xs[j - 1])
    for v, cont in out.threats.items():
        choice[v] = {w: (ONE if w == cont else ZERO) for w in g.nodes[v].succ}
    for gadget in out.gadgets:
        choice.update(gadget.q_profile())
    for v in g.controlled_nodes:
        if v not in choice:
            choice[v] = {w: (ONE if k == 0 else ZERO) for k, w in enumerate(g.nodes[v].succ)}
    return StationaryProfile(choice)


def profile_to_witness(out: ReductionOutput, p: StationaryProfile) -> SimplexPoint:
    """Read ``x_i`` off ``v_i`` (probability of the Players 2/4 branch)."""
    xs = []
    for v in out.var_nodes:
        node = out.game.nodes[v]
        xs.append(p.dist(node)[node.succ[0]])
    return SimplexPoint(tuple(xs), "corner")
