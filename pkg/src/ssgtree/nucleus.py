"""Nucleus computation for contracting automaton groups.

The nucleus is grown from {identity, states, inverse states} by alternating
two closures until nothing changes:

  * section/inverse closure: every section of a member (every node of its
    minimized section machine) and every inverse is a member;
  * product absorption: for each ordered pair (g, h) of members, the machine
    of g*h may only have cycles through member nodes. Non-member nodes on a
    cycle, or reachable from one, are sections of g*h at unboundedly large
    depths, so they are forced into the nucleus.

If the loop stabilizes the group is contracting with this nucleus; budget
overflow raises instead of guessing.
"""
from __future__ import annotations

from dataclasses import dataclass

from .budgets import DEFAULT, Budgets
from .core import Element, invert, multiply
from .errors import BudgetExceeded
from .graphs import cycle_nodes, reachable_from
from .machine import SectionMachine, section_closure


@dataclass(frozen=True)
class NucleusReport:
    automaton: object
    elements: tuple[Element, ...]  # shortlex order
    generations: int

    @property
    def size(self):
        return len(self.elements)

    @property
    def words(self):
        return tuple(str(e) for e in self.elements)


def _shortlex(word):
    return (len(word), word)


class _Pool:
    """Members keyed by machine key, keeping the shortlex-least word seen."""

    def __init__(self, budgets):
        self.budgets = budgets
        self.elems = {}     # key -> Element
        self.machines = {}  # key -> SectionMachine

    def add(self, elem, machine=None):
        """Add one element; returns True when its class is new."""
        if machine is None:
            machine = section_closure(elem, self.budgets)
        key = machine.key
        old = self.elems.get(key)
        if old is None:
            if len(self.elems) >= self.budgets.nucleus_elements:
                raise BudgetExceeded("nucleus", self.budgets.nucleus_elements,
                                     len(self.elems) + 1,
                                     "candidate set keeps growing")
            self.elems[key] = elem
            self.machines[key] = machine
            return True
        if _shortlex(elem.word) < _shortlex(old.word):
            self.elems[key] = elem
        return False

    def __contains__(self, key):
        return key in self.elems

    def keys(self):
        return list(self.elems)


def _recurrent_escapes(machine: SectionMachine, pool: _Pool):
    """Nodes of the machine that recur outside the pool.

    Returns witness words for every non-member node lying on a cycle or
    reachable from one; empty means all deep sections land in the pool.
    """
    rooted_keys = [machine.rooted(i).key for i in range(machine.node_count)]
    outside = [i for i in range(machine.node_count) if rooted_keys[i] not in pool]
    if not outside:
        return []
    oset = set(outside)
    adj = {i: [w for w in machine.succ[i] if w in oset] for i in outside}
    cyc = cycle_nodes(adj)
    if not cyc:
        return []
    bad = reachable_from(adj, cyc)
    return [machine.witnesses[i] for i in sorted(bad)]


def _close_sections_inverses(pool: _Pool, frontier):
    """Close the given keys under sections and inverses; returns new keys."""
    new = []
    todo = list(frontier)
    while todo:
        key = todo.pop()
        m = pool.machines[key]
        elem = pool.elems[key]
        candidates = [Element(elem.automaton, w) for w in m.witnesses]
        candidates.append(invert(elem))
        for c in candidates:
            cm = section_closure(c, pool.budgets)
            if pool.add(c, cm):
                new.append(cm.key)
                todo.append(cm.key)
    return new


def compute_nucleus(aut, budgets: Budgets = DEFAULT) -> NucleusReport:
    """The nucleus of the group generated by the automaton's states.

    Raises BudgetExceeded when the candidate set or the generation count
    outgrows the budgets, which is the expected outcome for a
    non-contracting group.
    """
    pool = _Pool(budgets)
    seed = [aut.identity()]
    for name in aut.names:
        seed.append(aut.generator(name))
        seed.append(aut.generator(name, -1))
    fresh = []
    for e in seed:
        m = section_closure(e, budgets)
        if pool.add(e, m):
            fresh.append(m.key)

    generations = 0
    checked_pairs = set()
    while fresh:
        generations += 1
        if generations > budgets.nucleus_generations:
            raise BudgetExceeded("nucleus-generations",
                                 budgets.nucleus_generations, generations,
                                 "absorption closure keeps producing elements")
        _close_sections_inverses(pool, fresh)
        added = []
        keys = pool.keys()
        for kg in keys:
            for kh in keys:
                if (kg, kh) in checked_pairs:
                    continue
                checked_pairs.add((kg, kh))
                prod = multiply(pool.elems[kg], pool.elems[kh])
                pm = section_closure(prod, budgets)
                for w in _recurrent_escapes(pm, pool):
                    e = Element(aut, w)
                    em = section_closure(e, budgets)
                    if pool.add(e, em):
                        added.append(em.key)
        fresh = added

    elems = sorted(pool.elems.values(), key=lambda e: _shortlex(e.word))
    return NucleusReport(aut, tuple(elems), generations)


def closure_report(aut, elements, budgets: Budgets = DEFAULT):
    """Check the nucleus properties of an explicit element set.

    Verifies: identity present, inverse-closed, section-closed, and every
    ordered pairwise product's deep sections land in the set. Returns
    (ok, reason); reason names the first failing property.
    """
    pool = _Pool(budgets)
    for e in elements:
        pool.add(e)
    ident_key = section_closure(aut.identity(), budgets).key
    if ident_key not in pool:
        return False, "identity missing"
    for key in pool.keys():
        e = pool.elems[key]
        ik = section_closure(invert(e), budgets).key
        if ik not in pool:
            return False, "not inverse-closed at %s" % e
        m = pool.machines[key]
        for i in range(m.node_count):
            if m.rooted(i).key not in pool:
                return False, "not section-closed at %s" % e
    for kg in pool.keys():
        for kh in pool.keys():
            prod = multiply(pool.elems[kg], pool.elems[kh])
            pm = section_closure(prod, budgets)
            if _recurrent_escapes(pm, pool):
                return False, "product %s * %s escapes" % (
                    pool.elems[kg], pool.elems[kh])
    return True, ""


def removable_elements(aut, elements, budgets: Budgets = DEFAULT):
    """Members whose single removal keeps all nucleus properties intact."""
    out = []
    for i, e in enumerate(elements):
        rest = list(elements[:i]) + list(elements[i + 1:])
        ok, _ = closure_report(aut, rest, budgets)
        if ok:
            out.append(e)
    return out
