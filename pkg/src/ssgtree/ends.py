"""Classify the boundary points fixed by one tree automorphism.

An end (infinite ray from the root) is fixed by g exactly when every finite
prefix is fixed, which makes fixed ends the infinite paths in the fixed
graph of g's section machine: keep the letter-edges v ->x succ(v, x) with
perm_v(x) = x, then discard nodes with no infinite continuation. On the
surviving subgraph the trichotomy is decidable:

  * the root died: no fixed ends, and the fixed-vertex count Y_k hits zero
    at some k bounded by the machine size;
  * some reachable node on a cycle keeps two live letter-edges: pumping the
    cycle against the exit produces infinitely many fixed ends;
  * otherwise every cycle is forced and the fixed ends are finitely many
    eventually periodic rays, enumerable by a DAG walk.

Beware that Y_k alone cannot decide this: it can plateau at a positive
value while the true end count is smaller.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .budgets import DEFAULT, Budgets
from .core import Element, level_perm
from .errors import BudgetExceeded
from .graphs import cycle_nodes
from .machine import section_closure

NO_ENDS = "no_ends"
FINITELY_MANY = "finitely_many"
INFINITELY_MANY = "infinitely_many"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class EndsReport:
    kind: str
    count: int | None = None            # 0, a positive count, or None
    vanish_level: int | None = None     # least k with Y_k = 0, for no_ends
    ends: tuple = ()                    # (prefix, cycle) pairs, finite case
    branch: tuple | None = None         # (path, cycle, exit letter)
    detail: str = ""


def count_fixed_level(g: Element, n, budgets: Budgets = DEFAULT) -> int:
    """Y_n(g): the number of level-n vertices fixed by g."""
    t = level_perm(g, n, budgets)
    return int((t == np.arange(t.size, dtype=t.dtype)).sum())


def fixed_edges(machine):
    """Per node, the letter-edges the node's permutation fixes."""
    d = machine.automaton.d
    return [
        [(x, machine.succ[v][x]) for x in range(d) if machine.perms[v][x] == x]
        for v in range(machine.node_count)
    ]


def _alive(fedges):
    """Nodes with arbitrarily long fixed continuations."""
    alive = set(range(len(fedges)))
    while True:
        dead = [v for v in alive
                if not any(w in alive for _, w in fedges[v])]
        if not dead:
            return alive
        alive.difference_update(dead)


def _vanish_level(machine, fedges):
    """Least k with no fixed vertices at level k; exists when the root dies."""
    counts = {0: 1}
    k = 0
    while counts:
        k += 1
        nxt = {}
        for v, c in counts.items():
            for _, w in fedges[v]:
                nxt[w] = nxt.get(w, 0) + c
        counts = nxt
    return k


def _forced_cycle(v, forced_succ):
    """Letters around the forced loop from an on-cycle node back to itself."""
    letters = []
    w = v
    while True:
        x, nxt = forced_succ[w]
        letters.append(x)
        w = nxt
        if w == v:
            return tuple(letters)


def _shortest_cycle(v, alive_edges):
    """Letter word of a shortest cycle through v in the live subgraph."""
    best = None
    for x0, w0 in alive_edges[v]:
        if w0 == v:
            return (x0,)
        prev = {w0: None}
        queue = [w0]
        k = 0
        closing = None
        while k < len(queue) and closing is None:
            u = queue[k]
            k += 1
            for x, w in alive_edges[u]:
                if w == v:
                    closing = (u, x)
                    break
                if w not in prev:
                    prev[w] = (u, x)
                    queue.append(w)
        if closing is None:
            continue
        u, x = closing
        letters = [x]
        while prev[u] is not None:
            p, y = prev[u]
            letters.append(y)
            u = p
        letters.reverse()
        cand = (x0,) + tuple(letters)
        if best is None or len(cand) < len(best):
            best = cand
    return best


def classify_fixed_ends(g: Element, budgets: Budgets = DEFAULT) -> EndsReport:
    try:
        m = section_closure(g, budgets)
    except BudgetExceeded as e:
        return EndsReport(UNKNOWN, detail=str(e))
    fedges = fixed_edges(m)
    alive = _alive(fedges)
    if 0 not in alive:
        return EndsReport(NO_ENDS, count=0, vanish_level=_vanish_level(m, fedges))

    alive_edges = {v: [(x, w) for x, w in fedges[v] if w in alive]
                   for v in alive}
    # restrict to what the root reaches
    reach = {0}
    queue = [0]
    paths = {0: ()}
    k = 0
    while k < len(queue):
        v = queue[k]
        k += 1
        for x, w in alive_edges[v]:
            if w not in reach:
                reach.add(w)
                paths[w] = paths[v] + (x,)
                queue.append(w)
    adj = {v: [w for _, w in alive_edges[v]] for v in reach}
    on_cycle = cycle_nodes(adj)

    for v in queue:  # BFS order: shortest access path first
        if v in on_cycle and len(alive_edges[v]) >= 2:
            cyc = _shortest_cycle(v, alive_edges)
            exit_letter = next(x for x, _ in alive_edges[v] if x != cyc[0])
            return EndsReport(INFINITELY_MANY, count=None,
                              branch=(paths[v], cyc, exit_letter))

    # every on-cycle node is forced: finitely many eventually periodic ends.
    # Count by DAG DP first; path counts can be huge, so only enumerate
    # certificates when there are few.
    values = {v: 1 for v in on_cycle}
    pending = [v for v in reach if v not in on_cycle]
    while pending:
        rest = []
        for v in pending:
            if all(w in values for _, w in alive_edges[v]):
                values[v] = sum(values[w] for _, w in alive_edges[v])
            else:
                rest.append(v)
        pending = rest
    count = values[0]

    certs = ()
    detail = ""
    if count <= 1000:
        forced_succ = {v: alive_edges[v][0] for v in on_cycle}
        found = []
        stack = [(0, ())]
        while stack:
            v, pre = stack.pop()
            if v in on_cycle:
                found.append((pre, _forced_cycle(v, forced_succ)))
                continue
            for x, w in reversed(alive_edges[v]):
                stack.append((w, pre + (x,)))
        found.sort()
        certs = tuple(found)
        if len(certs) != count:
            raise AssertionError("end enumeration disagrees with count")
    else:
        detail = "end certificates omitted (count too large)"
    return EndsReport(FINITELY_MANY, count=count, ends=certs, detail=detail)


def end_prefix(cert, depth):
    """First `depth` letters of the eventually periodic end (prefix, cycle)."""
    pre, cyc = cert
    out = list(pre[:depth])
    while len(out) < depth:
        out.extend(cyc)
    return tuple(out[:depth])


@dataclass(frozen=True)
class DichotomyReport:
    words_checked: int
    classes_checked: int
    violations: tuple = ()   # (word string, end count) pairs
    unknowns: tuple = ()

    @property
    def holds(self):
        return not self.violations and not self.unknowns


def check_end_dichotomy(aut, word_len, budgets: Budgets = DEFAULT) -> DichotomyReport:
    """Sweep all reduced words up to the given length.

    Flags every automorphism fixing a finite positive number of ends; the
    zero-or-infinite dichotomy holds for the swept ball when none appear.
    """
    n = 2 * aut.state_count
    words = [()]
    frontier = [()]
    for _ in range(word_len):
        nxt = []
        for w in frontier:
            for c in range(n):
                if w and w[-1] == (c ^ 1):
                    continue
                nxt.append(w + (c,))
        words.extend(nxt)
        frontier = nxt

    seen = set()
    violations = []
    unknowns = []
    for w in words:
        g = Element(aut, w)
        try:
            key = section_closure(g, budgets).key
        except BudgetExceeded:
            unknowns.append(str(Element(aut, w)))
            continue
        if key in seen:
            continue
        seen.add(key)
        rep = classify_fixed_ends(g, budgets)
        if rep.kind == FINITELY_MANY:
            violations.append((str(g), rep.count))
        elif rep.kind == UNKNOWN:
            unknowns.append(str(g))
    return DichotomyReport(len(words), len(seen),
                           tuple(violations), tuple(unknowns))
