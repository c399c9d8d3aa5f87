"""Kneading-automaton checks and the small-automaton search.

A finite automaton over alphabet X is kneading when, writing NT for its
semantically nontrivial states (states whose generator is not the identity
automorphism):

  * unique incoming: every state in NT has exactly one incoming transition
    (s, x) -> s|_x with s in NT and s|_x in NT;
  * cycle deficiency: sum over NT of (|X| - #orbits of the state's
    permutation) equals |X| - 1;
  * connected: the permutations of NT generate a transitive action on X.

Triviality of a state is decided by bisimulation, so a state that is
declared but acts as the identity counts as trivial. When that decision
exceeds the machine budget the verdict degrades to unknown rather than
guessing.

The search enumerates automata with up to S nontrivial states over given
alphabets in a fixed deterministic order, keeps one representative per
state-renaming/alphabet-relabeling class (the one with shortlex-minimal
transition table), and evaluates, for kneading entries, whether some letter
is moved by exactly one generator whose identity is not duplicated among
the other generators' sections there.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import os
import string
from dataclasses import dataclass

from .budgets import DEFAULT, Budgets
from .core import Automaton, section
from .errors import BudgetExceeded, CacheError
from .machine import DISTINCT, EQUAL, equal, section_closure
from .parsing import serialize_automaton

KNEADING = "kneading"
NOT_KNEADING = "not_kneading"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class KneadingReport:
    kind: str
    reason: str = ""
    trivial_states: tuple = ()
    arrows: tuple = ()        # (source, letter, target) over nontrivial states
    checked: tuple = ()       # (sub-condition name, outcome or None)


def _orbit_count(perm):
    seen = set()
    orbits = 0
    for x in range(len(perm)):
        if x in seen:
            continue
        orbits += 1
        y = x
        while y not in seen:
            seen.add(y)
            y = perm[y]
    return orbits


def check_kneading(aut: Automaton, budgets: Budgets = DEFAULT) -> KneadingReport:
    trivial = []
    try:
        for name in aut.names:
            if section_closure(aut.generator(name), budgets).is_identity:
                trivial.append(name)
    except BudgetExceeded as e:
        return KneadingReport(UNKNOWN,
                              "cannot settle state triviality: %s" % e,
                              checked=(("unique_incoming", None),
                                       ("cycle_deficiency", None),
                                       ("connected", None)))
    nt = [i for i, nm in enumerate(aut.names) if nm not in trivial]
    ntset = set(nt)
    arrows = tuple((aut.names[i], x, aut.names[t])
                   for i in nt
                   for x, t in enumerate(aut.sections[i])
                   if t >= 0 and t in ntset)
    incoming = {aut.names[i]: 0 for i in nt}
    for _, _, dst in arrows:
        incoming[dst] += 1
    unique_ok = all(c == 1 for c in incoming.values())

    deficiency = sum(aut.d - _orbit_count(aut.perms[i]) for i in nt)
    cycle_ok = deficiency == aut.d - 1

    orbit = {0}
    frontier = [0]
    while frontier:
        x = frontier.pop()
        for i in nt:
            y = aut.perms[i][x]
            if y not in orbit:
                orbit.add(y)
                frontier.append(y)
    connected = len(orbit) == aut.d

    checked = (("unique_incoming", unique_ok),
               ("cycle_deficiency", cycle_ok),
               ("connected", connected))
    if unique_ok and cycle_ok and connected:
        return KneadingReport(KNEADING, trivial_states=tuple(trivial),
                              arrows=arrows, checked=checked)
    if not unique_ok:
        crowded = [nm for nm, c in incoming.items() if c > 1]
        if crowded:
            bad = crowded[0]
        else:
            bad = next(nm for nm, c in incoming.items() if c != 1)
        ws = tuple(a for a in arrows if a[2] == bad)
        reason = ("state %s has %d incoming transitions from nontrivial "
                  "states" % (bad, incoming[bad]))
        return KneadingReport(NOT_KNEADING, reason, tuple(trivial), ws, checked)
    if not cycle_ok:
        reason = ("permutation cycle deficiency %d differs from %d"
                  % (deficiency, aut.d - 1))
    else:
        reason = "state permutations do not act transitively on the alphabet"
    return KneadingReport(NOT_KNEADING, reason, tuple(trivial), arrows, checked)


# -- the two letter conditions shared with the combined criterion ------------

def exclusive_letters(aut: Automaton):
    """Letters moved by exactly one generator, with that generator's index."""
    out = []
    for x in range(aut.d):
        movers = [i for i in range(aut.state_count) if aut.perms[i][x] != x]
        if len(movers) == 1:
            out.append((x, movers[0]))
    return tuple(out)


@dataclass(frozen=True)
class SectionDistinctness:
    passed: bool | None          # None: no candidate settled definitively
    candidates: tuple            # (letter, generator index) pairs examined
    passing: tuple               # candidates where all other sections differ
    witnesses: tuple             # (letter, i, j) with g_j|_letter equal to g_i
    unknowns: tuple              # (letter, i, j) comparisons that overflowed


def sections_differ(aut: Automaton, budgets: Budgets = DEFAULT) -> SectionDistinctness:
    """For each exclusive letter (x0, i): do all g_j|_x0 with j != i differ
    from g_i? Exact equality via bisimulation machines."""
    candidates = exclusive_letters(aut)
    passing = []
    witnesses = []
    unknowns = []
    for x0, i in candidates:
        gi = aut.generator(aut.names[i])
        ok = True
        for j in range(aut.state_count):
            if j == i:
                continue
            sec = section(aut.generator(aut.names[j]), (x0,))
            r = equal(sec, gi, budgets)
            if r.kind == EQUAL:
                witnesses.append((x0, i, j))
                ok = False
            elif r.kind != DISTINCT:
                unknowns.append((x0, i, j))
                ok = None if ok is True else ok
        if ok is True:
            passing.append((x0, i))
    if passing:
        passed = True
    elif unknowns:
        passed = None
    else:
        passed = False
    return SectionDistinctness(passed, candidates, tuple(passing),
                               tuple(witnesses), tuple(unknowns))


# -- exhaustive search -------------------------------------------------------

def _encode(perms, secs):
    """Flattened transition table used for canonical-form comparison."""
    return tuple(perms) + tuple(secs)


def _relabelings(d, s, perms, secs):
    """All encodings reachable by renaming states and relabeling letters."""
    for sigma in itertools.permutations(range(s)):
        smap = [0] * (s + 1)
        for old, new in enumerate(sigma):
            smap[old + 1] = new + 1
        for tau in itertools.permutations(range(d)):
            inv = [0] * d
            for x, y in enumerate(tau):
                inv[y] = x
            new_perms = [None] * s
            new_secs = [None] * (s * d)
            for old in range(s):
                new = sigma[old]
                new_perms[new] = tuple(tau[perms[old][inv[x]]]
                                       for x in range(d))
                for x in range(d):
                    new_secs[new * d + x] = smap[secs[old * d + inv[x]]]
            yield _encode(new_perms, new_secs)


def is_canonical(d, s, perms, secs):
    enc = _encode(perms, secs)
    return all(other >= enc for other in _relabelings(d, s, perms, secs))


def build_search_automaton(d, s, perms, secs):
    names = string.ascii_lowercase
    states = []
    for i in range(s):
        row = tuple("1" if t == 0 else names[t - 1]
                    for t in secs[i * d:(i + 1) * d])
        states.append((names[i], perms[i], row))
    return Automaton.build(d, states)


@dataclass(frozen=True)
class SearchResult:
    alphabet_sizes: tuple
    max_states: int
    rows_emitted: int
    raw_scanned: int
    complete: bool
    next_index: int
    out_path: str | None
    rows: tuple = ()          # rows emitted by THIS call, in order


def _args_digest(alphabet_sizes, max_states):
    blob = json.dumps([sorted(alphabet_sizes), max_states]).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_checkpoint(path, digest, next_index, emitted):
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write("ssg-search v1\nargs %s\nnext %d\nemitted %d\n"
                % (digest, next_index, emitted))
    os.replace(tmp, path)


def _read_checkpoint(path, digest):
    try:
        with open(path) as f:
            lines = f.read().splitlines()
    except OSError:
        return None
    if len(lines) < 4 or lines[0] != "ssg-search v1":
        raise CacheError("unrecognized checkpoint file %s" % path)
    if lines[1] != "args " + digest:
        raise CacheError("checkpoint %s belongs to different search arguments"
                         % path)
    return int(lines[2].split()[1]), int(lines[3].split()[1])


def _raw_enumeration(alphabet_sizes, max_states):
    """Deterministic stream of (raw index, d, s, perms, secs)."""
    idx = 0
    for d in sorted(set(alphabet_sizes)):
        all_perms = sorted(itertools.permutations(range(d)))
        for s in range(0, max_states + 1):
            for perms in itertools.product(all_perms, repeat=s):
                for secs in itertools.product(range(s + 1), repeat=s * d):
                    yield idx, d, s, perms, secs
                    idx += 1


def search_kneading(alphabet_sizes, max_states, budgets: Budgets = DEFAULT,
                    out_path=None, checkpoint_path=None) -> SearchResult:
    """Catalog all canonical automata within the bounds as JSON lines.

    Each row records the automaton, its kneading verdict, and, for kneading
    entries, the two letter conditions. Deterministic order; a checkpoint
    file makes interrupted runs resumable with identical output.
    """
    digest = _args_digest(alphabet_sizes, max_states)
    start = 0
    emitted = 0
    rows = []
    if checkpoint_path is not None:
        state = _read_checkpoint(checkpoint_path, digest)
        if state is not None:
            start, emitted = state
    if out_path is not None:
        if start > 0:
            # keep exactly the rows the checkpoint vouches for
            try:
                with open(out_path) as f:
                    kept = f.read().splitlines()[:emitted]
            except OSError:
                kept = []
            if len(kept) < emitted:
                raise CacheError("catalog %s is shorter than its checkpoint"
                                 % out_path)
            with open(out_path, "w") as f:
                for line in kept:
                    f.write(line + "\n")
            out = open(out_path, "a")
        else:
            out = open(out_path, "w")
    else:
        out = None

    budget = budgets.search_rows
    raw_scanned = 0
    complete = True
    next_index = start
    try:
        for idx, d, s, perms, secs in _raw_enumeration(alphabet_sizes,
                                                       max_states):
            if idx < start:
                continue
            if budget is not None and emitted >= budget:
                complete = False
                next_index = idx
                break
            next_index = idx + 1
            raw_scanned += 1
            if not is_canonical(d, s, perms, secs):
                continue
            aut = build_search_automaton(d, s, perms, secs)
            krep = check_kneading(aut, budgets)
            if krep.kind == KNEADING:
                kn = True
                cond1 = len(exclusive_letters(aut)) > 0
                sd = sections_differ(aut, budgets)
                cond2 = sd.passed
            elif krep.kind == NOT_KNEADING:
                kn, cond1, cond2 = False, None, None
            else:
                kn, cond1, cond2 = None, None, None
            row = json.dumps({
                "index": idx,
                "d": d,
                "states": s,
                "automaton": serialize_automaton(aut),
                "kneading": kn,
                "cond1": cond1,
                "cond2": cond2,
            }, sort_keys=True, separators=(",", ":"))
            rows.append(row)
            emitted += 1
            if out is not None:
                out.write(row + "\n")
                out.flush()
                if checkpoint_path is not None:
                    _write_checkpoint(checkpoint_path, digest, idx + 1,
                                      emitted)
    finally:
        if out is not None:
            out.close()
    if checkpoint_path is not None:
        _write_checkpoint(checkpoint_path, digest, next_index, emitted)
    return SearchResult(tuple(sorted(set(alphabet_sizes))), max_states,
                        emitted, raw_scanned, complete, next_index, out_path,
                        tuple(rows))
