"""Quadratic polynomial systems over the (corner) simplex."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

from ._exact import ZERO
from .game import GameParseError, as_fraction, format_rational

__all__ = [
    "PolySystem",
    "Quadratic",
    "SimplexPoint",
    "homogenize",
    "parse_system",
    "scale_coefficients",
    "serialize_system",
]


@dataclass(frozen=True)
class Quadratic:
    """``sum_ij quad[i][j] x_i x_j + sum_i lin[i] x_i + const`` (0-based)."""

    quad: tuple[tuple[Fraction, ...], ...]
    lin: tuple[Fraction, ...] | None = None
    const: Fraction = ZERO

    def __post_init__(self):
        object.__setattr__(self, "quad", tuple(tuple(as_fraction(a) for a in row) for row in self.quad))
        if self.lin is not None:
            object.__setattr__(self, "lin", tuple(as_fraction(b) for b in self.lin))
        object.__setattr__(self, "const", as_fraction(self.const))

    @classmethod
    def homogeneous(cls, quad) -> Quadratic:
        return cls(tuple(tuple(row) for row in quad))

    @property
    def n(self) -> int:
        return len(self.quad)

    @property
    def is_homogeneous(self) -> bool:
        return self.const == 0 and (self.lin is None or not any(self.lin))

    def coefficients(self) -> Iterable[Fraction]:
        for row in self.quad:
            yield from row
        if self.lin is not None:
            yield from self.lin
        yield self.const

    def __call__(self, x: Sequence) -> Fraction:
        x = [as_fraction(v) for v in x]
        total = self.const
        for i, row in enumerate(self.quad):
            if x[i]:
                for j, a in enumerate(row):
                    if a:
                        total += a * x[i] * x[j]
        if self.lin is not None:
            total += sum((b * xi for b, xi in zip(self.lin, x)), ZERO)
        return total


@dataclass(frozen=True)
class PolySystem:
    n: int
    polys: tuple[Quadratic, ...]

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        for q in self.polys:
            if q.n != self.n or any(len(row) != self.n for row in q.quad):
                raise ValueError("coefficient matrix does not match variable count")
            if q.lin is not None and len(q.lin) != self.n:
                raise ValueError("linear part does not match variable count")

    @classmethod
    def homogeneous(cls, *quads) -> PolySystem:
        polys = tuple(Quadratic.homogeneous(q) for q in quads)
        return cls(len(polys[0].quad), polys)

    @property
    def is_homogeneous(self) -> bool:
        return all(q.is_homogeneous for q in self.polys)

    @property
    def size(self) -> int:
        return len(self.polys)

    @property
    def is_scaled(self) -> bool:
        return all(abs(a) <= 1 for q in self.polys for a in q.coefficients())

    def evaluate(self, x: Sequence) -> tuple[Fraction, ...]:
        return tuple(q(x) for q in self.polys)

    def is_zero_at(self, x: Sequence) -> bool:
        return all(v == 0 for v in self.evaluate(x))


@dataclass(frozen=True)
class SimplexPoint:
    x: tuple[Fraction, ...]
    variant: str = "unit"

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(as_fraction(v) for v in self.x))
        if self.variant not in ("unit", "corner"):
            raise ValueError(f"unknown simplex variant {self.variant!r}")

    @property
    def l1(self) -> Fraction:
        return sum(self.x, ZERO)

    @property
    def on_unit_simplex(self) -> bool:
        return all(v >= 0 for v in self.x) and self.l1 == 1

    @property
    def in_corner_simplex(self) -> bool:
        return all(v >= 0 for v in self.x) and self.l1 <= 1

    def __iter__(self):
        return iter(self.x)

    def __len__(self):
        return len(self.x)


def homogenize(s: PolySystem) -> PolySystem:
    """Add the slack variable ``x_n = 1 - sum(x)`` and homogenize.

    A constant ``c`` becomes ``sum_ij c x_i x_j`` and a linear term ``b x_i``
    becomes ``sum_j b x_i x_j``, so the new system agrees with the old one at
    every corner-simplex point extended by its slack.
    """
    n = s.n + 1
    out = []
    for q in s.polys:
        a = [[ZERO] * n for _ in range(n)]
        for i, row in enumerate(q.quad):
            for j, coef in enumerate(row):
                a[i][j] += coef
        for i in range(n):
            for j in range(n):
                a[i][j] += q.const
        if q.lin is not None:
            for i, b in enumerate(q.lin):
                for j in range(n):
                    a[i][j] += b
        out.append(Quadratic(tuple(tuple(r) for r in a)))
    return PolySystem(n, tuple(out))


def scale_coefficients(s: PolySystem) -> PolySystem:
    """Divide each polynomial by ``max(1, largest |coefficient|)``."""
    out = []
    for q in s.polys:
        big = max((abs(a) for a in q.coefficients()), default=ZERO)
        f = max(Fraction(1), big)
        out.append(
            Quadratic(
                tuple(tuple(a / f for a in row) for row in q.quad),
                None if q.lin is None else tuple(b / f for b in q.lin),
                q.const / f,
            )
        )
    return PolySystem(s.n, tuple(out))


def parse_system(text: str) -> PolySystem:
    """Parse the polynomial-system text format (1-based variable indices)."""
    n = None
    declared_hom = None
    polys: list[dict] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0]
        try:
            if head == "vars:":
                n = int(toks[1])
            elif head == "homogeneous:":
                if toks[1] not in ("yes", "no"):
                    raise GameParseError("homogeneous must be yes or no", lineno)
                declared_hom = toks[1] == "yes"
            elif head == "poly":
                polys.append({"quad": {}, "lin": {}, "const": ZERO})
            elif head in ("quad", "lin", "const"):
                if not polys:
                    raise GameParseError(f"{head} before any poly header", lineno)
                if n is None:
                    raise GameParseError("vars header must come first", lineno)
                cur = polys[-1]
                if head == "quad":
                    i, j, a = int(toks[1]), int(toks[2]), Fraction(toks[3])
                    if not (1 <= i <= n and 1 <= j <= n):
                        raise GameParseError(f"index out of range in {line!r}", lineno)
                    cur["quad"][(i - 1, j - 1)] = cur["quad"].get((i - 1, j - 1), ZERO) + a
                elif head == "lin":
                    i, b = int(toks[1]), Fraction(toks[2])
                    if not 1 <= i <= n:
                        raise GameParseError(f"index out of range in {line!r}", lineno)
                    cur["lin"][i - 1] = cur["lin"].get(i - 1, ZERO) + b
                else:
                    cur["const"] += Fraction(toks[1])
            else:
                raise GameParseError(f"unrecognised line {line!r}", lineno)
        except (IndexError, ValueError, ZeroDivisionError) as err:
            if isinstance(err, GameParseError):
                raise
            raise GameParseError(f"malformed line {line!r}", lineno) from None
    if n is None:
        raise GameParseError("missing vars header", 1)
    out = []
    for p in polys:
        quad = tuple(tuple(p["quad"].get((i, j), ZERO) for j in range(n)) for i in range(n))
        lin = tuple(p["lin"].get(i, ZERO) for i in range(n)) if p["lin"] else None
        out.append(Quadratic(quad, lin, p["const"]))
    system = PolySystem(n, tuple(out))
    if declared_hom and not system.is_homogeneous:
        raise GameParseError("system declared homogeneous has linear or constant terms", 1)
    return system


def serialize_system(s: PolySystem) -> str:
    lines = [f"vars: {s.n}", f"homogeneous: {'yes' if s.is_homogeneous else 'no'}"]
    for k, q in enumerate(s.polys, start=1):
        lines.append(f"poly {k}:")
        for i, row in enumerate(q.quad):
            for j, a in enumerate(row):
                if a:
                    lines.append(f"quad {i + 1} {j + 1} {format_rational(a)}")
        if q.lin is not None:
            for i, b in enumerate(q.lin):
                if b:
                    lines.append(f"lin {i + 1} {format_rational(b)}")
        if q.const:
            lines.append(f"const {format_rational(q.const)}")
    return "\n".join(lines) + "\n"
