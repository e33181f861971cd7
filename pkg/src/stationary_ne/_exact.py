"""Exact rational linear algebra and graph helpers shared by the evaluators."""

from __future__ import annotations

from collections.abc import Callable, Hashable, Iterable, Sequence
from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def solve(a: list[list[Fraction]], b: list[list[Fraction]]) -> list[list[Fraction]]:
    """Solve ``a @ x = b`` exactly by Gauss-Jordan elimination.

    ``b`` may carry several right-hand sides (one per column).  Raises
    ``ArithmeticError`` on a singular matrix.
    """
    n = len(a)
    k = len(b[0]) if b else 0
    rows = [list(a[i]) + list(b[i]) for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            raise ArithmeticError("singular system")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        prow = rows[col]
        inv = 1 / prow[col]
        if inv != 1:
            prow[:] = [x * inv for x in prow]
        for r in range(n):
            if r == col:
                continue
            f = rows[r][col]
            if f:
                row = rows[r]
                for c in range(col, n + k):
                    if prow[c]:
                        row[c] -= f * prow[c]
    return [row[n:] for row in rows]


def strongly_connected(nodes: Iterable[Hashable], succ: Callable[[Hashable], Sequence[Hashable]]):
    """Tarjan's algorithm, iterative.

    Components come out in reverse topological order of the condensation:
    every component appears after all components it can reach.
    """
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list[list] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out
