"""Existential real-arithmetic encoding of "a stationary NE exists".

Variables are ``tau.<v>.<w>`` (probability of edge ``v -> w``),
``U.<i>.<v>`` (Player ``i``'s value at ``v`` under the profile) and
``B.<i>.<v>`` (Player ``i``'s best-response value at ``v`` against the
others).  Constraints are grouped into clauses:

* ``a`` -- every ``tau`` row is a distribution
* ``b`` -- ``U`` follows the profile
* ``c`` -- ``B`` follows the profile except at Player ``i``'s own nodes,
  where it is the maximum over successors
* ``d`` -- ``U.i.root >= B.i.root`` (no profitable deviation)
* ``e`` -- (SPE only) ``tau.v.w * (B.i.v - B.i.w) = 0`` at Player ``i``'s nodes
* ``f`` -- (demands only) ``U.i.root >= L_i``

Only acyclic terminal-reward games are encoded: on cyclic games the
total-reward values are least fixed points and the plain flow equations
admit spurious solutions.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction

from ._exact import ONE, ZERO
from .equilibrium import best_response
from .evaluate import node_payoffs
from .game import CycleError, Game, PayoffDemand, StationaryProfile, as_fraction

__all__ = [
    "And",
    "Atom",
    "Clause",
    "Formula",
    "MissingVariableError",
    "Or",
    "Poly",
    "canonical_assignment",
    "check_assignment",
    "encode_stationary_ne",
    "to_raw",
    "to_smtlib",
]

Monomial = tuple[str, ...]


@dataclass(frozen=True)
class Poly:
    """Sparse polynomial: sorted ``(monomial, coefficient)`` pairs."""

    terms: tuple[tuple[Monomial, Fraction], ...] = ()

    @classmethod
    def of(cls, pairs: Iterable[tuple[Monomial, Fraction]]) -> Poly:
        acc: dict[Monomial, Fraction] = {}
        for mono, c in pairs:
            key = tuple(sorted(mono))
            acc[key] = acc.get(key, ZERO) + as_fraction(c)
        return cls(tuple(sorted((k, c) for k, c in acc.items() if c != 0)))

    @classmethod
    def var(cls, name: str) -> Poly:
        return cls((((name,), ONE),))

    @classmethod
    def const(cls, c) -> Poly:
        return cls.of([((), c)])

    def __sub__(self, other: Poly) -> Poly:
        return Poly.of(list(self.terms) + [(m, -c) for m, c in other.terms])

    @property
    def variables(self) -> set[str]:
        return {v for mono, _ in self.terms for v in mono}

    @property
    def degree(self) -> int:
        return max((len(m) for m, _ in self.terms), default=0)

    def evaluate(self, a: Mapping[str, Fraction]) -> Fraction:
        total = ZERO
        for mono, c in self.terms:
            t = c
            for v in mono:
                x = a[v]
                if not x:
                    break
                t = x if t == 1 else t * x
            else:
                total += t
        return total


@dataclass(frozen=True)
class Atom:
    """``lhs rel rhs`` with ``rel`` one of ``=`` and ``>=``."""

    lhs: Poly
    rel: str
    rhs: Poly

    def holds(self, a) -> bool:
        lhs, rhs = self.lhs.evaluate(a), self.rhs.evaluate(a)
        return lhs == rhs if self.rel == "=" else lhs >= rhs

    @property
    def variables(self) -> set[str]:
        return self.lhs.variables | self.rhs.variables


@dataclass(frozen=True)
class And:
    parts: tuple

    def holds(self, a) -> bool:
        return all(p.holds(a) for p in self.parts)

    @property
    def variables(self) -> set[str]:
        return set().union(*(p.variables for p in self.parts))


@dataclass(frozen=True)
class Or:
    parts: tuple

    def holds(self, a) -> bool:
        return any(p.holds(a) for p in self.parts)

    @property
    def variables(self) -> set[str]:
        return set().union(*(p.variables for p in self.parts))


@dataclass(frozen=True)
class Clause:
    tag: str
    constraint: Atom | And | Or


@dataclass(frozen=True)
class Formula:
    variables: tuple[str, ...]
    clauses: tuple[Clause, ...]

    def without(self, tag: str) -> Formula:
        kept = tuple(c for c in self.clauses if c.tag != tag)
        used = set().union(*(c.constraint.variables for c in kept)) if kept else set()
        return Formula(tuple(v for v in self.variables if v in used), kept)

    def by_tag(self, tag: str) -> list[Clause]:
        return [c for c in self.clauses if c.tag == tag]


class MissingVariableError(KeyError):
    pass


def tau(v: str, w: str) -> str:
    return f"tau.{v}.{w}"


def U(i: int, v: str) -> str:
    return f"U.{i}.{v}"


def B(i: int, v: str) -> str:
    return f"B.{i}.{v}"


def encode_stationary_ne(g: Game, demand: PayoffDemand | None = None, spe: bool = False) -> Formula:
    if not g.is_acyclic:
        raise CycleError("only acyclic games can be encoded", list(g._topology[1] or ()))
    if g.objective != "rewards":
        raise ValueError("only terminal-reward games can be encoded")
    m = g.players
    if demand is not None and len(demand) != m:
        raise ValueError("demand arity does not match player count")
    clauses: list[Clause] = []
    names: list[str] = []

    def add(tag, c):
        clauses.append(Clause(tag, c))

    for v in g.controlled_nodes:
        node = g.nodes[v]
        for w in node.succ:
            names.append(tau(v, w))
            add("a", Atom(Poly.var(tau(v, w)), ">=", Poly()))
        add("a", Atom(Poly.of([((tau(v, w),), ONE) for w in node.succ]), "=", Poly.const(1)))
    for table, best in ((U, False), (B, True)):
        tag = "c" if best else "b"
        for i in range(1, m + 1):
            for v, node in g.nodes.items():
                names.append(table(i, v))
                lhs = Poly.var(table(i, v))
                if node.is_terminal:
                    add(tag, Atom(lhs, "=", Poly.const(node.reward[i - 1])))
                elif node.is_chance:
                    rhs = Poly.of([((table(i, w),), p) for w, p in zip(node.succ, node.probs)])
                    add(tag, Atom(lhs, "=", rhs))
                elif best and node.player == i:
                    succ = [Poly.var(table(i, w)) for w in node.succ]
                    add(tag, And(tuple(Atom(lhs, ">=", s) for s in succ)))
                    add(tag, Or(tuple(Atom(lhs, "=", s) for s in succ)))
                else:
                    rhs = Poly.of([((tau(v, w), table(i, w)), ONE) for w in node.succ])
                    add(tag, Atom(lhs, "=", rhs))
    root = g.initial
    for i in range(1, m + 1):
        add("d", Atom(Poly.var(U(i, root)), ">=", Poly.var(B(i, root))))
    if spe:
        for v in g.controlled_nodes:
            node = g.nodes[v]
            i = node.player
            for w in node.succ:
                gap = Poly.of([((tau(v, w), B(i, v)), ONE), ((tau(v, w), B(i, w)), -ONE)])
                add("e", Atom(gap, "=", Poly()))
    if demand is not None:
        for i in range(1, m + 1):
            add("f", Atom(Poly.var(U(i, root)), ">=", Poly.const(demand[i - 1])))
    return Formula(tuple(names), tuple(clauses))


def check_assignment(f: Formula, assignment: Mapping[str, Fraction]) -> bool:
    """Exact truth value of every clause under ``assignment``."""
    missing = [v for v in f.variables if v not in assignment]
    if missing:
        raise MissingVariableError(f"assignment misses {len(missing)} variables, e.g. {missing[0]!r}")
    a = {k: as_fraction(v) for k, v in assignment.items()}
    return all(c.constraint.holds(a) for c in f.clauses)


def canonical_assignment(g: Game, p: StationaryProfile) -> dict[str, Fraction]:
    """``tau`` from the profile, ``U`` from exact evaluation and ``B`` from
    per-player best responses."""
    a: dict[str, Fraction] = {}
    for v in g.controlled_nodes:
        for w, q in p.dist(g.nodes[v]).items():
            a[tau(v, w)] = q
    values = node_payoffs(g, p)
    for i in range(1, g.players + 1):
        br = best_response(g, p, i)
        for v in g.nodes:
            a[U(i, v)] = values[v][i - 1]
            a[B(i, v)] = br.values[v]
    return a


# --------------------------------------------------------------------------
# text output

_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_\-+=<>.?/][A-Za-z0-9~!@$%^&*_\-+=<>.?/]*$")


def _symbol(name: str) -> str:
    if _SIMPLE.match(name):
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"variable name {name!r} cannot be quoted")
    return f"|{name}|"


def _smt_num(c: Fraction) -> str:
    mag = abs(c)
    body = f"{mag.numerator}.0" if mag.denominator == 1 else f"(/ {mag.numerator}.0 {mag.denominator}.0)"
    return f"(- {body})" if c < 0 else body


def _raw_num(c: Fraction) -> str:
    return str(c)


def _poly(p: Poly, num, sym) -> str:
    if not p.terms:
        return num(ZERO)
    parts = []
    for mono, c in p.terms:
        factors = [sym(v) for v in mono]
        if c != 1 or not factors:
            factors.insert(0, num(c))
        parts.append(factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})")
    return parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"


def _constraint(c, num, sym) -> str:
    if isinstance(c, Atom):
        return f"({c.rel} {_poly(c.lhs, num, sym)} {_poly(c.rhs, num, sym)})"
    op = "and" if isinstance(c, And) else "or"
    return f"({op} {' '.join(_constraint(x, num, sym) for x in c.parts)})"


def to_smtlib(f: Formula) -> str:
    """QF_NRA script: one declaration per variable, one assertion per line."""
    lines = ["(set-logic QF_NRA)"]
    lines += [f"(declare-const {_symbol(v)} Real)" for v in f.variables]
    lines += [f"(assert {_constraint(c.constraint, _smt_num, _symbol)})" for c in f.clauses]
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def to_raw(f: Formula) -> str:
    """S-expressions with exact ``p/q`` rationals, one tagged clause per line."""
    lines = [f"(vars {' '.join(f.variables)})"]
    lines += [f"({c.tag} {_constraint(c.constraint, _raw_num, str)})" for c in f.clauses]
    return "\n".join(lines) + "\n"
