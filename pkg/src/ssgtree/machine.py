"""Section machines: the full section closure of one element, minimized.

A SectionMachine is the reachable section graph of an element with nodes
merged by bisimulation (partition refinement: split by permutation first,
then by successor classes until stable), then renumbered canonically by
breadth-first order from the root. Two elements define the same tree
automorphism exactly when their machines have equal canonical keys, which
is what `equal` uses after a cheap level-table screen.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .budgets import DEFAULT, Budgets
from .core import (Element, apply, invert, level_perm, multiply, unrank,
                   _act_word)
from .errors import BudgetExceeded


@dataclass(frozen=True, eq=False)
class SectionMachine:
    """Minimized section closure of an element; node 0 is the root."""

    automaton: object
    perms: tuple[tuple[int, ...], ...]
    succ: tuple[tuple[int, ...], ...]
    witnesses: tuple[tuple[int, ...], ...]  # per node: a letter-code word in that class
    paths: tuple[tuple[int, ...], ...]      # per node: first-BFS access path from the root

    @property
    def node_count(self):
        return len(self.perms)

    @cached_property
    def key(self):
        """Canonical key: equal keys == equal tree automorphisms."""
        return (self.automaton.d, self.perms, self.succ)

    @cached_property
    def identity_node(self):
        ident = tuple(range(self.automaton.d))
        for i, (p, s) in enumerate(zip(self.perms, self.succ)):
            if p == ident and all(t == i for t in s):
                return i
        return None

    @property
    def is_identity(self):
        return self.node_count == 1 and self.identity_node == 0

    def node_element(self, node) -> Element:
        return Element(self.automaton, self.witnesses[node])

    def rooted(self, node) -> "SectionMachine":
        """The machine of the section at this node (renumbered from it)."""
        if node == 0:
            return self
        order = [node]
        pos = {node: 0}
        paths = {node: ()}
        i = 0
        while i < len(order):
            v = order[i]
            for x, w in enumerate(self.succ[v]):
                if w not in pos:
                    pos[w] = len(order)
                    paths[w] = paths[v] + (x,)
                    order.append(w)
            i += 1
        return SectionMachine(
            self.automaton,
            tuple(self.perms[v] for v in order),
            tuple(tuple(pos[w] for w in self.succ[v]) for v in order),
            tuple(self.witnesses[v] for v in order),
            tuple(paths[v] for v in order),
        )


def _word_level_data(aut, codes):
    """Permutation row and per-letter section words of a reduced word."""
    perm = []
    secs = []
    for x in range(aut.d):
        y, sw = _act_word(aut, codes, x)
        perm.append(y)
        secs.append(sw)
    return tuple(perm), secs


def section_closure(g: Element, budgets: Budgets = DEFAULT) -> SectionMachine:
    """Explore all sections of g breadth-first and minimize by bisimulation."""
    aut = g.automaton
    budget = budgets.machine_nodes
    words = {g.word: 0}
    order = [g.word]
    perms = []
    succs = []
    i = 0
    while i < len(order):
        pm, secs = _word_level_data(aut, order[i])
        row = []
        for sw in secs:
            j = words.get(sw)
            if j is None:
                j = len(order)
                if j >= budget:
                    raise BudgetExceeded("machine", budget, j + 1,
                                         "section closure did not close")
                words[sw] = j
                order.append(sw)
            row.append(j)
        perms.append(pm)
        succs.append(row)
        i += 1

    # partition refinement
    n = len(order)
    labels, n_classes = _renumber([perms[i] for i in range(n)])
    while True:
        sig = [(labels[i], tuple(labels[j] for j in succs[i])) for i in range(n)]
        labels, new_count = _renumber(sig)
        if new_count == n_classes:
            break
        n_classes = new_count

    # canonical BFS numbering of classes from the root's class
    class_succ = {}
    class_perm = {}
    members = {}
    for i in range(n):
        c = labels[i]
        members.setdefault(c, []).append(i)
        if c not in class_perm:
            class_perm[c] = perms[i]
            class_succ[c] = tuple(labels[j] for j in succs[i])
    root = labels[0]
    bfs = [root]
    pos = {root: 0}
    paths = {root: ()}
    k = 0
    while k < len(bfs):
        c = bfs[k]
        for x, w in enumerate(class_succ[c]):
            if w not in pos:
                pos[w] = len(bfs)
                paths[w] = paths[c] + (x,)
                bfs.append(w)
        k += 1

    def witness(c):
        return min((order[i] for i in members[c]), key=lambda w: (len(w), w))

    return SectionMachine(
        aut,
        tuple(class_perm[c] for c in bfs),
        tuple(tuple(pos[w] for w in class_succ[c]) for c in bfs),
        tuple(witness(c) for c in bfs),
        tuple(paths[c] for c in bfs),
    )


def _renumber(items):
    seen = {}
    out = []
    for it in items:
        j = seen.get(it)
        if j is None:
            j = len(seen)
            seen[it] = j
        out.append(j)
    return out, len(seen)


def machine_key(g: Element, budgets: Budgets = DEFAULT):
    return section_closure(g, budgets).key


def moved_vertex(machine: SectionMachine):
    """A vertex moved by the machine's element, or None for the identity.

    Searches breadth-first through letters fixed at each node; the first node
    whose permutation moves some letter yields the witness path + letter.
    """
    seen = {0}
    queue = [(0, ())]
    k = 0
    while k < len(queue):
        node, path = queue[k]
        k += 1
        perm = machine.perms[node]
        for x in range(machine.automaton.d):
            if perm[x] != x:
                return path + (x,)
        for x in range(machine.automaton.d):
            w = machine.succ[node][x]
            if w not in seen:
                seen.add(w)
                queue.append((w, path + (x,)))
    return None


EQUAL = "equal"
DISTINCT = "distinct"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class EqualityResult:
    kind: str
    witness: tuple | None = None
    detail: str = ""

    def __bool__(self):
        raise TypeError("EqualityResult is three-valued; test .kind explicitly")


_FAST_SCAN_LEAVES = 4096


def equal(g: Element, h: Element, budgets: Budgets = DEFAULT) -> EqualityResult:
    """Exact three-valued equality of tree automorphisms.

    Distinct comes with a vertex where the images differ. Equal is exact,
    via the section machine of g*h^-1. Unknown only on machine overflow.
    """
    if not g.automaton.same_as(h.automaton):
        from .errors import MismatchedAutomata
        raise MismatchedAutomata("elements over different automata")
    if g.word == h.word:
        return EqualityResult(EQUAL)
    d = g.automaton.d
    k = 1
    while d ** k <= _FAST_SCAN_LEAVES and k <= 12:
        tg = level_perm(g, k, budgets)
        th = level_perm(h, k, budgets)
        diff = np.nonzero(tg != th)[0]
        if diff.size:
            return EqualityResult(DISTINCT, unrank(d, int(diff[0]), k))
        k += 1
    try:
        m = section_closure(multiply(g, invert(h)), budgets)
    except BudgetExceeded as e:
        return EqualityResult(UNKNOWN, detail=str(e))
    if m.is_identity:
        return EqualityResult(EQUAL)
    v = moved_vertex(m)
    witness = apply(invert(h), v)
    return EqualityResult(DISTINCT, witness)
