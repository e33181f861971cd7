"""Exact payoffs of stationary profiles, and reward-normalization transforms."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping
from fractions import Fraction

import numpy as np

from ._exact import ONE, ZERO, solve, strongly_connected
from .game import (
    CHANCE,
    Game,
    Node,
    StationaryProfile,
    check_profile,
    topological_order,
)

__all__ = [
    "UnsupportedStructureError",
    "binary_decomposition",
    "expected_payoffs",
    "mean_payoff",
    "node_payoffs",
    "normalize_rewards_to_binary",
    "objective_affine_map",
    "objective_payoffs",
    "reach_probabilities",
    "simulate_payoffs",
    "to_objective_form",
    "transitions",
]

Vec = tuple[Fraction, ...]


class UnsupportedStructureError(ValueError):
    pass


def transitions(g: Game, p: StationaryProfile) -> dict[str, list[tuple[str, Fraction]]]:
    """Positive-probability edges of the Markov chain induced by ``p``."""
    out = {}
    for v, node in g.nodes.items():
        if node.is_terminal:
            out[v] = []
        elif node.is_chance:
            out[v] = [(w, q) for w, q in zip(node.succ, node.probs) if q]
        else:
            out[v] = [(w, q) for w, q in p.dist(node).items() if q]
    return out


def _mix(pairs: Iterable[tuple[Fraction, Vec]], dim: int) -> Vec:
    acc = [ZERO] * dim
    for q, vec in pairs:
        for k in range(dim):
            if vec[k]:
                acc[k] += q * vec[k]
    return tuple(acc)


def _component_values(
    g: Game,
    trans: Mapping[str, list[tuple[str, Fraction]]],
    leaf: Callable[[list[str]], Mapping[str, Vec]],
    dim: int,
) -> dict[str, Vec]:
    """Absorption values, one strongly connected component at a time.

    Bottom components get their value from ``leaf``; every other component is
    transient, so ``I - P`` restricted to it is nonsingular.
    """
    comps = strongly_connected(list(g.nodes), lambda v: [w for w, _ in trans[v]])
    values: dict[str, Vec] = {}
    for comp in comps:
        cset = set(comp)
        leaving = any(w not in cset for v in comp for w, _ in trans[v])
        if not leaving:
            values.update(leaf(comp))
            continue
        internal = any(w in cset for v in comp for w, _ in trans[v])
        if len(comp) == 1 and not internal:
            v = comp[0]
            values[v] = _mix(((q, values[w]) for w, q in trans[v]), dim)
            continue
        pos = {v: k for k, v in enumerate(comp)}
        size = len(comp)
        a = [[ZERO] * size for _ in range(size)]
        b = [[ZERO] * dim for _ in range(size)]
        for v in comp:
            r = pos[v]
            a[r][r] += ONE
            for w, q in trans[v]:
                if w in cset:
                    a[r][pos[w]] -= q
                else:
                    vec = values[w]
                    for k in range(dim):
                        b[r][k] += q * vec[k]
        x = solve(a, b)
        for v in comp:
            values[v] = tuple(x[pos[v]])
    return values


def _backward(g: Game, trans, dim: int, terminal_value: Callable[[Node], Vec]) -> dict[str, Vec]:
    values: dict[str, Vec] = {}
    for v in reversed(topological_order(g)):
        node = g.nodes[v]
        if node.is_terminal:
            values[v] = terminal_value(node)
        else:
            values[v] = _mix(((q, values[w]) for w, q in trans[v]), dim)
    return values


def _linear(g: Game, trans, dim: int) -> dict[str, Vec]:
    """One global absorption solve after discarding nodes that never terminate."""
    preds: dict[str, list[str]] = {v: [] for v in g.nodes}
    for v, edges in trans.items():
        for w, _ in edges:
            preds[w].append(v)
    live = set(g.terminals)
    frontier = list(live)
    while frontier:
        w = frontier.pop()
        for v in preds[w]:
            if v not in live:
                live.add(v)
                frontier.append(v)
    zero = (ZERO,) * dim
    values = {v: zero for v in g.nodes if v not in live}
    for t in g.terminals:
        values[t] = g.nodes[t].reward
    unknown = [v for v in g.nodes if v in live and not g.nodes[v].is_terminal]
    if unknown:
        pos = {v: k for k, v in enumerate(unknown)}
        size = len(unknown)
        a = [[ZERO] * size for _ in range(size)]
        b = [[ZERO] * dim for _ in range(size)]
        for v in unknown:
            r = pos[v]
            a[r][r] += ONE
            for w, q in trans[v]:
                if w in pos:
                    a[r][pos[w]] -= q
                else:
                    for k in range(dim):
                        b[r][k] += q * values[w][k]
        x = solve(a, b)
        for v in unknown:
            values[v] = tuple(x[pos[v]])
    return values


def _require_rewards(g: Game) -> None:
    if g.objective != "rewards":
        raise ValueError(f"expected a terminal-reward game, got objective {g.objective!r}")


def node_payoffs(g: Game, p: StationaryProfile, method: str = "auto") -> dict[str, Vec]:
    """Expected terminal-reward payoff vector from every node.

    ``method`` selects the route: ``backward`` (acyclic only), ``scc``
    (component-wise solve) or ``linear`` (one global solve).  Plays that never
    reach a terminal contribute 0.
    """
    _require_rewards(g)
    check_profile(g, p)
    trans = transitions(g, p)
    m = g.players
    if method == "auto":
        method = "backward" if g.is_acyclic else "scc"
    if method == "backward":
        return _backward(g, trans, m, lambda node: node.reward)
    if method == "scc":
        zero = (ZERO,) * m

        def leaf(comp):
            if len(comp) == 1 and g.nodes[comp[0]].is_terminal:
                return {comp[0]: g.nodes[comp[0]].reward}
            return {v: zero for v in comp}

        return _component_values(g, trans, leaf, m)
    if method == "linear":
        return _linear(g, trans, m)
    raise ValueError(f"unknown method {method!r}")


def expected_payoffs(g: Game, p: StationaryProfile, method: str = "auto") -> Vec:
    return node_payoffs(g, p, method)[g.initial]


def reach_probabilities(g: Game, p: StationaryProfile, target: Iterable[str]) -> dict[str, Fraction]:
    """Probability, from every node, that play reaches ``target``."""
    check_profile(g, p)
    target = set(target)
    unknown = target - set(g.nodes)
    if unknown:
        raise ValueError(f"unknown target nodes {sorted(unknown)}")
    trans = transitions(g, p)
    for v in target:
        trans[v] = []

    def leaf(comp):
        return {v: (ONE,) if v in target else (ZERO,) for v in comp}

    values = _component_values(g, trans, leaf, 1)
    return {v: vec[0] for v, vec in values.items()}


def mean_payoff(g: Game, p: StationaryProfile) -> Vec:
    """Limit-average payoff for chains that absorb into simple cycles.

    Terminals count as one-node cycles carrying their reward vector.
    """
    if g.objective not in ("meanpayoff", "rewards"):
        raise ValueError(f"mean payoff undefined for objective {g.objective!r}")
    check_profile(g, p)
    trans = transitions(g, p)
    m = g.players

    def leaf(comp):
        if len(comp) == 1 and g.nodes[comp[0]].is_terminal:
            avg = g.nodes[comp[0]].reward
        else:
            for v in comp:
                if len(trans[v]) != 1:
                    raise UnsupportedStructureError(
                        f"unsupported mean-payoff structure: node {v!r} branches inside a bottom component"
                    )
            total = _mix(((ONE, g.reward_of(v)) for v in comp), m)
            avg = tuple(x / len(comp) for x in total)
        return {v: avg for v in comp}

    return _component_values(g, trans, leaf, m)[g.initial]


def objective_payoffs(g: Game, p: StationaryProfile) -> Vec:
    """Payoff vector under whatever objective ``g`` declares."""
    if g.objective == "rewards":
        return expected_payoffs(g, p)
    if g.objective == "meanpayoff":
        return mean_payoff(g, p)
    out = []
    for i in range(1, g.players + 1):
        s = (g.targets or {}).get(i, frozenset())
        if g.objective == "reach":
            out.append(reach_probabilities(g, p, s)[g.initial])
        else:
            bad = set(g.nodes) - set(s)
            out.append(ONE - reach_probabilities(g, p, bad)[g.initial])
    return tuple(out)


def simulate_payoffs(
    g: Game,
    p: StationaryProfile,
    plays: int = 100_000,
    seed: int = 0,
    max_steps: int = 10_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo estimate of expected payoffs: (mean, standard error).

    Plays still running after ``max_steps`` count as non-terminating (payoff 0).
    """
    _require_rewards(g)
    check_profile(g, p)
    ids = list(g.nodes)
    pos = {v: k for k, v in enumerate(ids)}
    width = max(1, max(len(n.succ) for n in g.nodes.values()))
    succ = np.zeros((len(ids), width), dtype=np.int64)
    cum = np.ones((len(ids), width))
    reward = np.zeros((len(ids), g.players))
    terminal = np.zeros(len(ids), dtype=bool)
    for v, node in g.nodes.items():
        k = pos[v]
        if node.is_terminal:
            succ[k, :] = k
            reward[k] = [float(r) for r in node.reward]
            terminal[k] = True
            continue
        dist = node.distribution() if node.kind == CHANCE else p.dist(node)
        acc = 0.0
        for col, w in enumerate(node.succ):
            acc += float(dist[w])
            succ[k, col] = pos[w]
            cum[k, col] = acc
        succ[k, len(node.succ):] = succ[k, len(node.succ) - 1]
        cum[k, len(node.succ) - 1:] = 1.0
    rng = np.random.default_rng(seed)
    state = np.full(plays, pos[g.initial], dtype=np.int64)
    for _ in range(max_steps):
        live = ~terminal[state]
        if not live.any():
            break
        idx = np.nonzero(live)[0]
        u = rng.random(idx.size)
        col = (u[:, None] >= cum[state[idx]]).sum(axis=1)
        np.minimum(col, width - 1, out=col)
        state[idx] = succ[state[idx], col]
    samples = np.where(terminal[state][:, None], reward[state], 0.0)
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(plays)
    return mean, stderr


# --------------------------------------------------------------------------
# reward transforms


def binary_decomposition(reward: Iterable, signed: bool = False) -> list[tuple[Fraction, Vec]]:
    """Write ``reward`` as a convex combination of {0,1} (or {-1,0,1}) vectors.

    Coordinates are sorted by magnitude and peeled off as nested indicator
    vectors; the leftover weight goes to the zero vector.  Zero weights are
    dropped.
    """
    r = tuple(Fraction(x) for x in reward)
    mags = [abs(x) for x in r] if signed else list(r)
    lo = -1 if signed else 0
    if any(x < lo or x > 1 for x in r):
        raise ValueError(f"reward {tuple(map(str, r))} outside [{lo}, 1]")
    order = sorted(range(len(r)), key=lambda i: -mags[i])
    parts = []
    for k in range(len(order) - 1, -1, -1):
        nxt = mags[order[k + 1]] if k + 1 < len(order) else ZERO
        weight = mags[order[k]] - nxt
        if weight > 0:
            top = set(order[: k + 1])
            vec = tuple(
                (Fraction(1 if r[i] > 0 else -1) if i in top else ZERO) for i in range(len(r))
            )
            parts.append((weight, vec))
    rest = ONE - (mags[order[0]] if order else ZERO)
    if rest > 0:
        parts.append((rest, (ZERO,) * len(r)))
    return parts


def normalize_rewards_to_binary(g: Game, signed: bool = False) -> Game:
    """Replace fractional terminals by chance nodes over binary terminals.

    A terminal whose reward is already in {0,1}^m (or {-1,0,1}^m) is kept.
    Otherwise it becomes a chance node (same id) over fresh terminals
    ``<id>.bin<k>``.  Expected payoffs of every stationary profile are
    unchanged since the new nodes involve no choices.
    """
    allowed = {-1, 0, 1} if signed else {0, 1}
    nodes: dict[str, Node] = {}
    for v, node in g.nodes.items():
        if not node.is_terminal or all(x in allowed for x in node.reward):
            nodes[v] = node
            continue
        parts = binary_decomposition(node.reward, signed)
        dist = []
        for k, (w, vec) in enumerate(parts):
            tid = f"{v}.bin{k}"
            if tid in g.nodes or tid in nodes:
                raise ValueError(f"fresh node id {tid!r} collides with an existing node")
            dist.append((tid, w))
        nodes[v] = Node.chance(v, dist)
        for (tid, _), (_, vec) in zip(dist, parts):
            nodes[tid] = Node.terminal(tid, vec)
    return g.replace(nodes=nodes)


def _reward_range(g: Game) -> list[tuple[Fraction, Fraction]]:
    out = []
    for i in range(g.players):
        vals = [g.nodes[t].reward[i] for t in g.terminals] or [ZERO]
        out.append((min(vals), max(vals)))
    return out


def objective_affine_map(g: Game, kind: str) -> list[tuple[Fraction, Fraction]]:
    """Per-player ``(a, b)`` with objective payoff = a * reward payoff + b.

    For ``safe`` the shift is only exact when play terminates almost surely.
    """
    out = []
    for lo, hi in _reward_range(g):
        if kind == "reach":
            if lo < 0:
                raise ValueError("reach form needs non-negative rewards")
            out.append((ONE / hi if hi > 0 else ONE, ZERO))
        elif kind == "safe":
            span = hi - lo if hi > lo else ONE
            out.append((ONE / span, ONE - hi / span))
        else:
            raise ValueError(f"unknown objective kind {kind!r}")
    return out


def to_objective_form(g: Game, kind: str) -> Game:
    """Recast a terminal-reward game as a reach-a-set or stay-in-a-set game.

    Rewards are rescaled per player (into [0,1] for ``reach``, into [-1,0]
    for ``safe``), binarized, and the resulting indicator terminals define
    each player's target set.
    """
    _require_rewards(g)
    ranges = _reward_range(g)
    if kind == "reach":
        if any(lo < 0 for lo, _ in ranges):
            raise ValueError("negative rewards cannot be cast as reachability")

        def rescale(i, r):
            hi = ranges[i][1]
            return r / hi if hi > 0 else r
    elif kind == "safe":
        def rescale(i, r):
            lo, hi = ranges[i]
            return (r - hi) / (hi - lo) if hi > lo else r - hi
    else:
        raise ValueError(f"unknown objective kind {kind!r}")
    scaled = {}
    for v, node in g.nodes.items():
        if node.is_terminal:
            scaled[v] = Node.terminal(v, [rescale(i, r) for i, r in enumerate(node.reward)])
        else:
            scaled[v] = node
    binary = normalize_rewards_to_binary(g.replace(nodes=scaled), signed=(kind == "safe"))
    terms = binary.terminals
    targets = {}
    for i in range(binary.players):
        if kind == "reach":
            targets[i + 1] = frozenset(t for t in terms if binary.nodes[t].reward[i] == 1)
        else:
            bad = {t for t in terms if binary.nodes[t].reward[i] == -1}
            targets[i + 1] = frozenset(v for v in binary.nodes if v not in bad)
    return binary.replace(objective=kind, targets=targets)
