"""Game IR for perfect-information stochastic games.

A game is a digraph whose nodes are owned by chance, by one of ``m`` players,
or are terminals (sinks).  All probabilities and rewards are exact
:class:`fractions.Fraction` values.  Games and profiles are immutable once
built; builders in other modules assemble node dictionaries and wrap them.
"""

from __future__ import annotations

import graphlib
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

__all__ = [
    "CHANCE",
    "PLAYER",
    "TERMINAL",
    "OBJECTIVES",
    "CycleError",
    "Game",
    "GameParseError",
    "IncompleteProfileError",
    "InvalidGameError",
    "Node",
    "PayoffDemand",
    "StationaryProfile",
    "ValidationReport",
    "Violation",
    "as_fraction",
    "check_profile",
    "find_cycle",
    "format_rational",
    "is_tree",
    "parse_game",
    "parse_profile",
    "pull_back_profile",
    "serialize_game",
    "serialize_profile",
    "subgame",
    "topological_order",
    "unfold",
    "unfold_to_tree",
    "validate",
]

CHANCE = "chance"
PLAYER = "player"
TERMINAL = "terminal"
OBJECTIVES = ("rewards", "reach", "safe", "meanpayoff")

CycleError = graphlib.CycleError

_ID_RE = re.compile(r"^[^\s,:#]+$")


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to an exact Fraction.

    Floats are rejected so that rounding never leaks into exact code paths.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


@dataclass(frozen=True)
class Node:
    """A single game node.

    ``succ`` lists out-neighbours in a fixed order; for chance nodes ``probs``
    is aligned with ``succ``.  Terminals carry a reward vector and no
    successors.
    """

    id: str
    kind: str
    succ: tuple[str, ...] = ()
    player: int | None = None
    probs: tuple[Fraction, ...] | None = None
    reward: tuple[Fraction, ...] | None = None

    @classmethod
    def chance(cls, id: str, dist) -> Node:
        items = list(dist.items()) if isinstance(dist, Mapping) else list(dist)
        return cls(
            id,
            CHANCE,
            tuple(w for w, _ in items),
            probs=tuple(as_fraction(p) for _, p in items),
        )

    @classmethod
    def controlled(cls, id: str, player: int, succ: Iterable[str]) -> Node:
        return cls(id, PLAYER, tuple(succ), player=player)

    @classmethod
    def terminal(cls, id: str, reward: Iterable) -> Node:
        return cls(id, TERMINAL, (), reward=tuple(as_fraction(r) for r in reward))

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL

    @property
    def is_chance(self) -> bool:
        return self.kind == CHANCE

    @property
    def is_controlled(self) -> bool:
        return self.kind == PLAYER

    def distribution(self) -> dict[str, Fraction]:
        return dict(zip(self.succ, self.probs or ()))


@dataclass(frozen=True)
class Game:
    """An ``players``-player perfect-information stochastic game.

    ``nodes`` preserves insertion order, which doubles as the canonical
    serialization order.  ``targets`` holds per-player node sets for the
    ``reach``/``safe`` objectives; ``node_rewards`` holds per-node reward
    vectors of non-terminal nodes for ``meanpayoff`` (missing entries are 0).
    """

    players: int
    nodes: Mapping[str, Node]
    initial: str
    objective: str = "rewards"
    targets: Mapping[int, frozenset[str]] | None = None
    node_rewards: Mapping[str, tuple[Fraction, ...]] | None = None

    def __getitem__(self, node_id: str) -> Node:
        return self.nodes[node_id]

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def is_deterministic(self) -> bool:
        return not any(n.is_chance for n in self.nodes.values())

    @cached_property
    def predecessors(self) -> dict[str, list[str]]:
        preds: dict[str, list[str]] = {v: [] for v in self.nodes}
        for node in self.nodes.values():
            for w in node.succ:
                if w in preds:
                    preds[w].append(node.id)
        return preds

    @cached_property
    def _topology(self) -> tuple[tuple[str, ...] | None, tuple[str, ...] | None]:
        sorter = graphlib.TopologicalSorter()
        for node in self.nodes.values():
            sorter.add(node.id)
            for w in node.succ:
                # graphlib orders predecessors first: w depends on node
                sorter.add(w, node.id)
        try:
            return tuple(sorter.static_order()), None
        except graphlib.CycleError as err:
            return None, tuple(err.args[1])

    @property
    def is_acyclic(self) -> bool:
        return self._topology[0] is not None

    @property
    def controlled_nodes(self) -> list[str]:
        return [v for v, n in self.nodes.items() if n.is_controlled]

    @property
    def terminals(self) -> list[str]:
        return [v for v, n in self.nodes.items() if n.is_terminal]

    def owned_by(self, player: int) -> list[str]:
        return [v for v, n in self.nodes.items() if n.is_controlled and n.player == player]

    def reward_of(self, node_id: str) -> tuple[Fraction, ...]:
        """Per-step reward vector of a node under the mean-payoff reading."""
        node = self.nodes[node_id]
        if node.is_terminal:
            return node.reward
        if self.node_rewards and node_id in self.node_rewards:
            return self.node_rewards[node_id]
        return (Fraction(0),) * self.players

    def replace(self, **changes) -> Game:
        data = {
            "players": self.players,
            "nodes": self.nodes,
            "initial": self.initial,
            "objective": self.objective,
            "targets": self.targets,
            "node_rewards": self.node_rewards,
        }
        data.update(changes)
        return Game(**data)


@dataclass(frozen=True)
class PayoffDemand:
    values: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(as_fraction(v) for v in self.values))

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def met_by(self, payoffs: Iterable[Fraction]) -> bool:
        payoffs = tuple(payoffs)
        if len(payoffs) != len(self.values):
            raise ValueError("demand arity does not match payoff vector")
        return all(u >= l for u, l in zip(payoffs, self.values))


class IncompleteProfileError(ValueError):
    pass


@dataclass(frozen=True)
class StationaryProfile:
    """Per-node distributions over successors for controlled nodes.

    Nodes with a single successor may be omitted; their move is forced.
    """

    choice: Mapping[str, Mapping[str, Fraction]] = field(default_factory=dict)

    def __post_init__(self):
        frozen = {
            v: {w: as_fraction(p) for w, p in dist.items()} for v, dist in self.choice.items()
        }
        object.__setattr__(self, "choice", frozen)

    @classmethod
    def pure(cls, moves: Mapping[str, str]) -> StationaryProfile:
        return cls({v: {w: Fraction(1)} for v, w in moves.items()})

    def dist(self, node: Node) -> dict[str, Fraction]:
        """Full distribution over ``node.succ`` (zero entries included)."""
        got = self.choice.get(node.id)
        if got is None:
            if len(node.succ) == 1:
                return {node.succ[0]: Fraction(1)}
            raise IncompleteProfileError(f"profile has no choice for node {node.id!r}")
        return {w: got.get(w, Fraction(0)) for w in node.succ}

    def updated(self, changes: Mapping[str, Mapping[str, Fraction]]) -> StationaryProfile:
        merged = dict(self.choice)
        merged.update(changes)
        return StationaryProfile(merged)

    def __eq__(self, other):
        if not isinstance(other, StationaryProfile):
            return NotImplemented
        return _strip(self.choice) == _strip(other.choice)

    def __hash__(self):
        return hash(frozenset((v, frozenset(d.items())) for v, d in _strip(self.choice).items()))


def _strip(choice):
    return {v: {w: p for w, p in d.items() if p != 0} for v, d in choice.items()}


def check_profile(g: Game, p: StationaryProfile) -> None:
    """Raise unless ``p`` is a complete stationary profile for ``g``."""
    for v, dist in p.choice.items():
        node = g.nodes.get(v)
        if node is None or not node.is_controlled:
            raise IncompleteProfileError(f"profile names non-controlled node {v!r}")
        extra = set(dist) - set(node.succ)
        if extra:
            raise IncompleteProfileError(f"node {v!r}: {sorted(extra)} are not successors")
        if any(q < 0 for q in dist.values()):
            raise IncompleteProfileError(f"node {v!r}: negative probability")
        if sum(dist.values()) != 1:
            raise IncompleteProfileError(f"node {v!r}: distribution sums to {sum(dist.values())}")
    for v in g.controlled_nodes:
        p.dist(g.nodes[v])


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    node: str | None
    rule: str
    detail: str = ""

    def __str__(self):
        where = f"{self.node}: " if self.node is not None else ""
        return f"{where}{self.rule}" + (f" ({self.detail})" if self.detail else "")


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}


class InvalidGameError(ValueError):
    def __init__(self, violations: Iterable[Violation]):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def validate(g: Game) -> ValidationReport:
    out: list[Violation] = []
    m = g.players
    if m < 1:
        out.append(Violation(None, "player count", f"players={m}"))
    if g.initial not in g.nodes:
        out.append(Violation(g.initial, "unknown initial node"))
    if g.objective not in OBJECTIVES:
        out.append(Violation(None, "unknown objective", g.objective))
    for vid, node in g.nodes.items():
        if vid != node.id:
            out.append(Violation(vid, "node id mismatch", node.id))
        if not _ID_RE.match(vid):
            out.append(Violation(vid, "bad node id"))
        if node.kind == TERMINAL:
            if node.succ:
                out.append(Violation(vid, "terminal has successors"))
            if node.reward is None:
                out.append(Violation(vid, "missing reward vector"))
            elif len(node.reward) != m:
                out.append(Violation(vid, "reward arity", f"{len(node.reward)} != {m}"))
            continue
        if node.kind not in (CHANCE, PLAYER):
            out.append(Violation(vid, "unknown owner", node.kind))
            continue
        if not node.succ:
            out.append(Violation(vid, "non-terminal without successors"))
        if len(set(node.succ)) != len(node.succ):
            out.append(Violation(vid, "duplicate successor"))
        for w in node.succ:
            if w not in g.nodes:
                out.append(Violation(vid, "edge target missing", w))
        if node.kind == PLAYER:
            if node.player is None or not 1 <= node.player <= m:
                out.append(Violation(vid, "player index out of range", str(node.player)))
        else:
            probs = node.probs or ()
            if len(probs) != len(node.succ):
                out.append(Violation(vid, "chance support mismatch"))
            if any(q <= 0 for q in probs):
                out.append(Violation(vid, "non-positive chance probability"))
            total = sum(probs, Fraction(0))
            if total != 1:
                out.append(Violation(vid, "chance distribution", f"distribution sums to {total}"))
    if g.objective in ("reach", "safe"):
        targets = g.targets or {}
        for i, s in targets.items():
            if not 1 <= i <= m:
                out.append(Violation(None, f"{g.objective} set player out of range", str(i)))
            for v in s:
                if v not in g.nodes:
                    out.append(Violation(v, f"{g.objective} set names unknown node"))
    if g.objective == "meanpayoff":
        for v, r in (g.node_rewards or {}).items():
            if v not in g.nodes:
                out.append(Violation(v, "mean-payoff reward names unknown node"))
            elif len(r) != m:
                out.append(Violation(v, "reward arity", f"{len(r)} != {m}"))
    return ValidationReport(tuple(out))


# --------------------------------------------------------------------------
# structure


def topological_order(g: Game) -> list[str]:
    """Order in which every edge points forward.

    Raises :class:`CycleError` with the cycle (first node repeated at the end)
    as ``err.args[1]`` when the digraph has a directed cycle.
    """
    order, cycle = g._topology
    if order is None:
        raise CycleError("game digraph has a cycle", list(cycle))
    return list(order)


def find_cycle(g: Game) -> list[str] | None:
    cycle = g._topology[1]
    return list(cycle) if cycle is not None else None


def is_tree(g: Game) -> bool:
    if not g.is_acyclic:
        return False
    seen = set()
    stack = [g.initial]
    while stack:
        v = stack.pop()
        if v in seen:
            return False
        seen.add(v)
        stack.extend(g.nodes[v].succ)
    return len(seen) == len(g.nodes)


def subgame(g: Game, root: str) -> Game:
    """The game started at ``root``, restricted to the nodes reachable from it."""
    if root not in g.nodes:
        raise KeyError(f"unknown node {root!r}")
    seen: set[str] = set()
    stack = [root]
    while stack:
        v = stack.pop()
        if v not in seen:
            seen.add(v)
            stack.extend(g.nodes[v].succ)
    nodes = {v: n for v, n in g.nodes.items() if v in seen}
    targets = None
    if g.targets is not None:
        targets = {i: frozenset(s & seen) for i, s in g.targets.items()}
    node_rewards = None
    if g.node_rewards is not None:
        node_rewards = {v: r for v, r in g.node_rewards.items() if v in seen}
    return g.replace(nodes=nodes, initial=root, targets=targets, node_rewards=node_rewards)


def unfold(g: Game) -> tuple[Game, dict[str, str]]:
    """Unfold an acyclic game into a tree; also return copy -> original ids.

    The first copy of every node keeps its id, later copies get ``~k``
    suffixes, so tree inputs come back unchanged.
    """
    if not g.is_acyclic:
        raise ValueError("cannot unfold a cyclic game")
    origin: dict[str, str] = {}
    copies: dict[str, int] = {}
    nodes: dict[str, Node] = {}

    def fresh(v: str) -> str:
        k = copies.get(v, 0)
        while True:
            new = v if k == 0 else f"{v}~{k}"
            k += 1
            if new not in origin and (new == v or new not in g.nodes):
                break
        copies[v] = k
        origin[new] = v
        return new

    # iterative preorder so deep chains do not hit the recursion limit
    root = fresh(g.initial)
    stack = [(root, g.initial)]
    pending: dict[str, list[str]] = {}
    order: list[str] = []
    while stack:
        new, old = stack.pop()
        order.append(new)
        node = g.nodes[old]
        kids = [fresh(w) for w in node.succ]
        pending[new] = kids
        for kid, w in reversed(list(zip(kids, node.succ))):
            stack.append((kid, w))
    for new in order:
        node = g.nodes[origin[new]]
        kids = tuple(pending[new])
        if node.is_terminal:
            nodes[new] = Node.terminal(new, node.reward)
        elif node.is_chance:
            nodes[new] = Node(new, CHANCE, kids, probs=node.probs)
        else:
            nodes[new] = Node(new, PLAYER, kids, player=node.player)
    targets = None
    if g.targets is not None:
        targets = {i: frozenset(c for c, o in origin.items() if o in s) for i, s in g.targets.items()}
    node_rewards = None
    if g.node_rewards is not None:
        node_rewards = {c: g.node_rewards[o] for c, o in origin.items() if o in g.node_rewards}
    tree = Game(g.players, nodes, root, g.objective, targets, node_rewards)
    return tree, origin


def unfold_to_tree(g: Game) -> Game:
    return unfold(g)[0]


def pull_back_profile(p: StationaryProfile, tree: Game, origin: Mapping[str, str]) -> StationaryProfile:
    """Copy each original node's choice onto all of its tree copies."""
    choice = {}
    for new, old in origin.items():
        if old in p.choice and tree.nodes[new].is_controlled:
            kids = tree.nodes[new].succ
            dist = p.choice[old]
            choice[new] = {kid: dist.get(origin[kid], Fraction(0)) for kid in kids}
    return StationaryProfile(choice)


# --------------------------------------------------------------------------
# text formats


class GameParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _split_list(text: str) -> list[str]:
    text = text.strip()
    if not text:
        return []
    return [part.strip() for part in text.split(",")]


def _rational(tok: str, lineno: int, line: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise GameParseError(f"bad rational {tok!r}", lineno, line.find(tok) + 1) from None


def parse_game(text: str) -> Game:
    """Parse the line-oriented game format and validate the result."""
    header: dict[str, str] = {}
    nodes: dict[str, Node] = {}
    targets: dict[str, dict[int, set[str]]] = {"reach": {}, "safe": {}}
    mp_rewards: dict[str, tuple[Fraction, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        head, _, rest = line.strip().partition(" ")
        if head.endswith(":") and head[:-1] in ("players", "initial", "objective"):
            header[head[:-1]] = rest.strip()
            continue
        kind, _, body = rest.strip().partition(" ")
        if kind in (CHANCE, PLAYER, TERMINAL):
            vid = head
            if vid in nodes:
                raise GameParseError(f"duplicate node {vid!r}", lineno)
            if not _ID_RE.match(vid):
                raise GameParseError(f"bad node id {vid!r}", lineno)
            if kind == CHANCE:
                dist = []
                for item in _split_list(body):
                    succ, sep, prob = item.partition(":")
                    if not sep:
                        raise GameParseError(f"expected succ:prob, got {item!r}", lineno, line.find(item) + 1)
                    dist.append((succ.strip(), _rational(prob.strip(), lineno, line)))
                nodes[vid] = Node.chance(vid, dist)
            elif kind == PLAYER:
                owner, _, succs = body.strip().partition(" ")
                try:
                    player = int(owner)
                except ValueError:
                    raise GameParseError(f"bad player index {owner!r}", lineno, line.find(owner) + 1) from None
                nodes[vid] = Node.controlled(vid, player, _split_list(succs))
            else:
                nodes[vid] = Node.terminal(vid, [_rational(t, lineno, line) for t in _split_list(body)])
        elif head in ("reach", "safe"):
            owner, _, ids = rest.strip().partition(" ")
            try:
                player = int(owner)
            except ValueError:
                raise GameParseError(f"bad player index {owner!r}", lineno) from None
            targets[head].setdefault(player, set()).update(_split_list(ids))
        elif head == "mpreward":
            vid, _, vals = rest.strip().partition(" ")
            mp_rewards[vid] = tuple(_rational(t, lineno, line) for t in _split_list(vals))
        else:
            raise GameParseError(f"unrecognised line {line.strip()!r}", lineno)
    for key in ("players", "initial"):
        if key not in header:
            raise GameParseError(f"missing header {key!r}", 1)
    try:
        players = int(header["players"])
    except ValueError:
        raise GameParseError("players must be an integer", 1) from None
    objective = header.get("objective", "rewards")
    tgt = None
    if objective in ("reach", "safe"):
        sets = targets[objective]
        tgt = {i: frozenset(sets.get(i, ())) for i in range(1, players + 1)}
    g = Game(
        players,
        nodes,
        header["initial"],
        objective,
        tgt,
        mp_rewards if objective == "meanpayoff" else None,
    )
    report = validate(g)
    if not report.ok:
        raise InvalidGameError(report.violations)
    return g


def _fmt_vec(vec) -> str:
    return ", ".join(format_rational(x) for x in vec)


def serialize_game(g: Game) -> str:
    lines = [f"players: {g.players}", f"initial: {g.initial}"]
    if g.objective != "rewards":
        lines.append(f"objective: {g.objective}")
    for node in g.nodes.values():
        if node.is_chance:
            body = ", ".join(f"{w}:{format_rational(p)}" for w, p in zip(node.succ, node.probs))
            lines.append(f"{node.id} chance {body}")
        elif node.is_controlled:
            lines.append(f"{node.id} player {node.player} {', '.join(node.succ)}")
        else:
            lines.append(f"{node.id} terminal {_fmt_vec(node.reward)}")
    if g.objective in ("reach", "safe") and g.targets is not None:
        order = {v: k for k, v in enumerate(g.nodes)}
        for i in sorted(g.targets):
            ids = sorted(g.targets[i], key=lambda v: order.get(v, len(order)))
            lines.append(f"{g.objective} {i} {', '.join(ids)}".rstrip())
    if g.objective == "meanpayoff" and g.node_rewards:
        for v, r in g.node_rewards.items():
            lines.append(f"mpreward {v} {_fmt_vec(r)}")
    return "\n".join(lines) + "\n"


def parse_profile(text: str) -> StationaryProfile:
    choice = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        vid, _, body = line.strip().partition(" ")
        dist = {}
        for item in _split_list(body):
            succ, sep, prob = item.partition(":")
            if not sep:
                raise GameParseError(f"expected succ:prob, got {item!r}", lineno, line.find(item) + 1)
            dist[succ.strip()] = _rational(prob.strip(), lineno, line)
        choice[vid] = dist
    return StationaryProfile(choice)


def serialize_profile(p: StationaryProfile) -> str:
    lines = []
    for v, dist in p.choice.items():
        body = ", ".join(f"{w}:{format_rational(q)}" for w, q in dist.items())
        lines.append(f"{v} {body}")
    return "\n".join(lines) + ("\n" if lines else "")
