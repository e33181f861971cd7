"""Best responses, regrets and equilibrium verification for stationary profiles.

The deviating player faces a finite MDP once the others are fixed, so
positional deviations suffice: regrets are computed against the optimal
positional reply.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._exact import ZERO
from .evaluate import _component_values, node_payoffs, transitions
from .game import (
    Game,
    PayoffDemand,
    StationaryProfile,
    check_profile,
    format_rational,
    topological_order,
)

__all__ = [
    "BestResponse",
    "GridBudgetError",
    "UnsupportedMDPError",
    "VerificationReport",
    "best_response",
    "grid_search",
    "grid_options",
    "regret_vector",
    "verify_ne",
    "enumerate_positional",
    "verify_spe",
]

DEFAULT_CAP = 10**7


class UnsupportedMDPError(ValueError):
    pass


class GridBudgetError(ValueError):
    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(f"grid needs {required} profiles, cap is {cap}")


@dataclass(frozen=True)
class BestResponse:
    value: Fraction
    strategy: dict[str, str]
    values: dict[str, Fraction] = field(repr=False)

    def apply(self, p: StationaryProfile) -> StationaryProfile:
        return p.updated({v: {w: Fraction(1)} for v, w in self.strategy.items()})


def _br_backward(g: Game, p: StationaryProfile, i: int) -> BestResponse:
    values: dict[str, Fraction] = {}
    strategy: dict[str, str] = {}
    for v in reversed(topological_order(g)):
        node = g.nodes[v]
        if node.is_terminal:
            values[v] = node.reward[i - 1]
        elif node.is_controlled and node.player == i:
            best = node.succ[0]
            for w in node.succ[1:]:
                if values[w] > values[best]:
                    best = w
            strategy[v] = best
            values[v] = values[best]
        else:
            dist = node.distribution() if node.is_chance else p.dist(node)
            values[v] = sum((q * values[w] for w, q in dist.items() if q), ZERO)
    return BestResponse(values[g.initial], strategy, values)


def _br_policy_iteration(g: Game, p: StationaryProfile, i: int) -> BestResponse:
    if any(g.nodes[t].reward[i - 1] < 0 for t in g.terminals):
        raise UnsupportedMDPError("unsupported MDP class: cyclic game with negative rewards")
    mine = g.owned_by(i)
    policy = {v: g.nodes[v].succ[0] for v in mine}
    base = transitions(g, p)

    def leaf(comp):
        if len(comp) == 1 and g.nodes[comp[0]].is_terminal:
            return {comp[0]: (g.nodes[comp[0]].reward[i - 1],)}
        return {v: (ZERO,) for v in comp}

    while True:
        trans = dict(base)
        for v, w in policy.items():
            trans[v] = [(w, Fraction(1))]
        values = {v: x[0] for v, x in _component_values(g, trans, leaf, 1).items()}
        changed = False
        for v in mine:
            current = values[policy[v]]
            best = policy[v]
            for w in g.nodes[v].succ:
                # strict improvement only; switching on ties can close zero-value cycles
                if values[w] > current:
                    best, current = w, values[w]
            if best != policy[v]:
                policy[v] = best
                changed = True
        if not changed:
            return BestResponse(values[g.initial], dict(policy), values)


def best_response(g: Game, p: StationaryProfile, i: int) -> BestResponse:
    """Optimal positional reply of player ``i`` against the rest of ``p``.

    Acyclic games use backward induction (ties go to the earliest successor).
    Cyclic games need non-negative rewards for ``i`` and are solved by policy
    iteration with exact evaluation of each positional policy.
    """
    if g.objective != "rewards":
        raise ValueError("best response needs a terminal-reward game")
    if not 1 <= i <= g.players:
        raise ValueError(f"no player {i}")
    check_profile(g, p)
    if g.is_acyclic:
        return _br_backward(g, p, i)
    return _br_policy_iteration(g, p, i)


def regret_vector(g: Game, p: StationaryProfile) -> tuple[Fraction, ...]:
    payoff = node_payoffs(g, p)[g.initial]
    return tuple(best_response(g, p, i).value - payoff[i - 1] for i in range(1, g.players + 1))


@dataclass(frozen=True)
class VerificationReport:
    payoffs: tuple[Fraction, ...]
    regrets: tuple[Fraction, ...]
    eps: Fraction
    is_ne: bool
    is_spe: bool | None = None
    demands_met: bool | None = None
    per_node_worst: dict[str, Fraction] | None = field(default=None, repr=False)
    players: int = 0
    deterministic: bool | None = None
    acyclic: bool | None = None

    @property
    def max_regret(self) -> Fraction:
        return max(self.regrets, default=ZERO)

    @property
    def holds(self) -> bool:
        """NE (and SPE / demands, when checked) all hold."""
        return self.is_ne and self.is_spe is not False and self.demands_met is not False

    def as_dict(self) -> dict[str, object]:
        def yn(b):
            return None if b is None else ("yes" if b else "no")

        out: dict[str, object] = {
            "players": self.players,
            "deterministic": yn(self.deterministic),
            "acyclic": yn(self.acyclic),
            "payoffs": [format_rational(x) for x in self.payoffs],
            "regrets": [format_rational(x) for x in self.regrets],
            "max_regret": format_rational(self.max_regret),
            "eps": format_rational(self.eps),
            "is_ne": yn(self.is_ne),
        }
        if self.is_spe is not None:
            out["is_spe"] = yn(self.is_spe)
        if self.demands_met is not None:
            out["demands_met"] = yn(self.demands_met)
        return out

    def to_text(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            if isinstance(value, list):
                value = ", ".join(value)
            lines.append(f"{key}: {value}")
        return "\n".join(lines) + "\n"


def _demand_check(demand, payoffs) -> bool | None:
    if demand is None:
        return None
    if not isinstance(demand, PayoffDemand):
        demand = PayoffDemand(tuple(demand))
    return demand.met_by(payoffs)


def verify_ne(g: Game, p: StationaryProfile, eps=0, demand=None) -> VerificationReport:
    eps = Fraction(eps)
    payoffs = node_payoffs(g, p)[g.initial]
    regrets = tuple(best_response(g, p, i).value - payoffs[i - 1] for i in range(1, g.players + 1))
    return VerificationReport(
        payoffs=payoffs,
        regrets=regrets,
        eps=eps,
        is_ne=all(r <= eps for r in regrets),
        demands_met=_demand_check(demand, payoffs),
        players=g.players,
        deterministic=g.is_deterministic,
        acyclic=g.is_acyclic,
    )


def verify_spe(g: Game, p: StationaryProfile, eps=0, demand=None) -> VerificationReport:
    """NE check rooted at every node; stationary subgames are node-indexed."""
    if not g.is_acyclic:
        raise ValueError("SPE verification needs an acyclic game")
    eps = Fraction(eps)
    payoffs = node_payoffs(g, p)
    responses = [best_response(g, p, i) for i in range(1, g.players + 1)]
    worst = {}
    for v in g.nodes:
        worst[v] = max(br.values[v] - payoffs[v][i] for i, br in enumerate(responses))
    root = payoffs[g.initial]
    regrets = tuple(br.value - root[i] for i, br in enumerate(responses))
    return VerificationReport(
        payoffs=root,
        regrets=regrets,
        eps=eps,
        is_ne=all(r <= eps for r in regrets),
        is_spe=all(w <= eps for w in worst.values()),
        demands_met=_demand_check(demand, root),
        per_node_worst=worst,
        players=g.players,
        deterministic=g.is_deterministic,
        acyclic=True,
    )


# --------------------------------------------------------------------------
# grid oracle


def grid_options(deg: int, d: int) -> list[tuple[Fraction, ...]]:
    """All distributions over ``deg`` outcomes with probabilities in (1/d)Z."""
    out = []
    for cuts in itertools.combinations_with_replacement(range(d + 1), deg - 1):
        parts = []
        prev = 0
        for c in cuts:
            parts.append(c - prev)
            prev = c
        parts.append(d - prev)
        out.append(tuple(Fraction(k, d) for k in reversed(parts)))
    return out


def _optimistic_value(g: Game, fixed: Mapping[str, Mapping[str, Fraction]], i: int) -> Fraction:
    """Largest payoff player ``i`` can get if every unfixed node cooperates."""
    values = {}
    for v in reversed(topological_order(g)):
        node = g.nodes[v]
        if node.is_terminal:
            values[v] = node.reward[i]
        elif node.is_chance:
            values[v] = sum((q * values[w] for w, q in zip(node.succ, node.probs)), ZERO)
        elif v in fixed:
            values[v] = sum((q * values[w] for w, q in fixed[v].items() if q), ZERO)
        else:
            values[v] = max(values[w] for w in node.succ)
    return values[g.initial]


def _prune(g: Game, options: dict[str, list], demand: tuple[Fraction, ...]) -> dict[str, list]:
    """Drop per-node options that make some demand unreachable on their own."""
    pruned = {}
    needy = [i for i, l in enumerate(demand) if l > _pessimistic_floor(g, i)]
    for v, opts in options.items():
        succ = g.nodes[v].succ
        keep = []
        for opt in opts:
            fixed = {v: dict(zip(succ, opt))}
            if all(_optimistic_value(g, fixed, i) >= demand[i] for i in needy):
                keep.append(opt)
        pruned[v] = keep
    return pruned


def _pessimistic_floor(g: Game, i: int) -> Fraction:
    vals = [g.nodes[t].reward[i] for t in g.terminals]
    return min(vals + [ZERO])


@dataclass
class _Plan:
    """Float tables for vectorized screening of an acyclic game."""

    order: list[str]
    kind: list[int]
    owner: list[int]
    succ: list[list[int]]
    weights: dict[int, np.ndarray]
    reward: dict[int, np.ndarray]
    free: list[int]
    tables: list[np.ndarray]
    shape: tuple[int, ...]
    last_use: list[int]
    players: int


def _make_plan(g: Game, options: dict[str, list], free_ids: list[str]) -> _Plan:
    order = list(reversed(topological_order(g)))
    pos = {v: k for k, v in enumerate(order)}
    kind, owner, succ = [], [], []
    weights, reward = {}, {}
    last_use = [-1] * len(order)
    for k, v in enumerate(order):
        node = g.nodes[v]
        succ.append([pos[w] for w in node.succ])
        for w in node.succ:
            last_use[pos[w]] = max(last_use[pos[w]], k)
        if node.is_terminal:
            kind.append(0)
            owner.append(0)
            reward[k] = np.array([[float(r) for r in node.reward]])
        elif node.is_chance:
            kind.append(1)
            owner.append(0)
            weights[k] = np.array([[float(q) for q in node.probs]])
        else:
            kind.append(2)
            owner.append(node.player - 1)
            opts = options.get(v) or [(Fraction(1),)]
            weights[k] = np.array([[float(q) for q in opts[0]]])
    last_use[pos[g.initial]] = len(order)
    tables = [np.array([[float(q) for q in o] for o in options[v]]) for v in free_ids]
    return _Plan(
        order, kind, owner, succ, weights, reward, [pos[v] for v in free_ids], tables,
        tuple(t.shape[0] for t in tables), last_use, g.players,
    )


def _screen_range(plan: _Plan, start: int, stop: int, eps: float, demand, tol: float) -> list[int]:
    """Flat grid indices in [start, stop) that pass the float NE/demand screen."""
    idx = np.arange(start, stop, dtype=np.int64)
    digits = np.unravel_index(idx, plan.shape) if plan.shape else ()
    weights = dict(plan.weights)
    for slot, k in enumerate(plan.free):
        weights[k] = plan.tables[slot][digits[slot]]
    m = plan.players
    u: dict[int, np.ndarray] = {}
    br: dict[int, np.ndarray] = {}
    for k in range(len(plan.order)):
        if plan.kind[k] == 0:
            u[k] = br[k] = plan.reward[k]
        else:
            wk = weights[k]
            uk = sum(wk[:, c : c + 1] * u[w] for c, w in enumerate(plan.succ[k]))
            bk = sum(wk[:, c : c + 1] * br[w] for c, w in enumerate(plan.succ[k]))
            if plan.kind[k] == 2:
                j = plan.owner[k]
                best = br[plan.succ[k][0]][:, j]
                for w in plan.succ[k][1:]:
                    best = np.maximum(best, br[w][:, j])
                rows = max(bk.shape[0], best.shape[0])
                bk = np.array(np.broadcast_to(bk, (rows, m)))
                bk[:, j] = best
            u[k], br[k] = uk, bk
        for w in plan.succ[k]:
            if plan.last_use[w] == k:
                del u[w], br[w]
    root = len(plan.order) - 1
    ur = np.broadcast_to(u[root], (idx.size, m))
    regret = np.broadcast_to(br[root], (idx.size, m)) - ur
    ok = regret.max(axis=1) <= eps + tol
    if demand is not None:
        ok &= (ur >= demand[None, :] - tol).all(axis=1)
    return idx[ok].tolist()


def _screen_job(args):
    return _screen_range(*args)


def grid_search(
    g: Game,
    d: int,
    eps=0,
    demand=None,
    cap: int = DEFAULT_CAP,
    jobs: int = 1,
    chunk: int = 1 << 14,
) -> list[StationaryProfile]:
    """All grid profiles (probabilities in steps of 1/d) that are eps-NE.

    With ``demand`` only profiles whose payoff dominates it are kept.  For
    acyclic games a per-node optimistic bound first discards options that
    cannot meet the demand, the remaining product is screened in floating
    point with a safety margin, and every survivor is re-verified exactly.
    The result is exhaustive over the grid and independent of ``jobs``.
    """
    if d < 1:
        raise ValueError("resolution must be positive")
    eps = Fraction(eps)
    if demand is not None:
        demand = tuple(Fraction(x) for x in demand)
        if len(demand) != g.players:
            raise ValueError("demand arity does not match player count")
    controlled = [v for v in g.controlled_nodes if len(g.nodes[v].succ) > 1]
    options = {v: grid_options(len(g.nodes[v].succ), d) for v in controlled}
    if demand is not None and g.is_acyclic:
        options = _prune(g, options, demand)
        if any(not opts for opts in options.values()):
            return []
    required = math.prod(len(o) for o in options.values())
    if required > cap:
        raise GridBudgetError(required, cap)
    free_ids = [v for v in controlled if len(options[v]) > 1]
    shape = tuple(len(options[v]) for v in free_ids)

    def build(flat: int) -> StationaryProfile:
        digits = np.unravel_index(flat, shape) if shape else ()
        choice = {}
        for v in controlled:
            k = int(digits[free_ids.index(v)]) if v in free_ids else 0
            choice[v] = dict(zip(g.nodes[v].succ, options[v][k]))
        return StationaryProfile(choice)

    if g.is_acyclic:
        plan = _make_plan(g, options, free_ids)
        scale = max([1.0] + [abs(float(r)) for t in g.terminals for r in g.nodes[t].reward])
        dem = None if demand is None else np.array([float(x) for x in demand])
        args = [
            (plan, s, min(s + chunk, required), float(eps), dem, 1e-9 * scale)
            for s in range(0, required, chunk)
        ]
        if jobs > 1 and len(args) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                candidates = [h for part in pool.map(_screen_job, args) for h in part]
        else:
            candidates = [h for a in args for h in _screen_job(a)]
    else:
        candidates = range(required)
    found = []
    for flat in candidates:
        prof = build(flat)
        rep = verify_ne(g, prof, eps, demand)
        if rep.is_ne and rep.demands_met is not False:
            found.append(prof)
    return found


def enumerate_positional(g: Game) -> Iterable[StationaryProfile]:
    """Every pure stationary profile of ``g``."""
    nodes = [v for v in g.controlled_nodes if len(g.nodes[v].succ) > 1]
    for combo in itertools.product(*(g.nodes[v].succ for v in nodes)):
        yield StationaryProfile.pure(dict(zip(nodes, combo)))
