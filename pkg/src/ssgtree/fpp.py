"""Fixed-point statistics over the closure of a tree automorphism group.

Everything here treats the closure of the generated group as a probability
space under its Haar measure, which on a finite level quotient is just the
uniform distribution. Y_n is the number of level-n vertices an element
fixes. The module provides:

  * conditional_increase: exact conditional probability that Y grows when
    one more block of levels is revealed, against the 1/|level-m quotient|
    bound, with a diagnosis of which hypothesis fails when the bound does;
  * estimate_fpp: the per-level probability that an element fixes at least
    one vertex, exact where the quotient is enumerable, sampled on those
    same quotients otherwise never (sampling is restricted to enumerated
    levels on purpose);
  * check_vssf: evidence that vertex stabilizers surject onto level
    quotients and that the section-kernel approximants along the leftmost
    path stabilize, plus end classifications of its coset representatives;
  * check_prop4: the structural sufficient criterion combining the
    kneading shape of the automaton, letters moved by a single generator
    with distinct foreign sections, and the requirement that nucleus
    elements lying in the subgroup without that generator fix infinitely
    many ends.

The leftmost path 0, 00, 000, ... is the fixed choice for kernel
approximants; the kernel is independent of the path, so one canonical
choice suffices.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .budgets import DEFAULT, Budgets
from .core import format_vertex, level_perm, multiply, unrank
from .ends import (FINITELY_MANY, INFINITELY_MANY, NO_ENDS,
                   classify_fixed_ends, count_fixed_level)
from .errors import BudgetExceeded
from .kneading import (KNEADING, NOT_KNEADING, KneadingReport, check_kneading,
                       exclusive_letters, sections_differ)
from .machine import section_closure
from .nucleus import compute_nucleus
from .quotient import (level_quotient, section_tables,
                       stabilizer_section_subgroup, top_tables,
                       uniform_sample)

MEMBER = "member"
NON_MEMBER = "non_member"
UNDECIDED = "unknown"

HOLDS = "holds"
FAILS = "fails"
UNKNOWN = "unknown"


# -- martingale statistic -----------------------------------------------------

@dataclass(frozen=True)
class MartingaleReport:
    n: int
    m: int
    r: int
    p: Fraction               # μ(Y_{n+m} > r | Y_n = r)
    epsilon: Fraction         # 1 / |level-m quotient|
    passes: bool              # p >= epsilon, vacuously true on empty event
    vacuous: bool
    sample_space: int         # size of the level-(n+m) quotient
    conditioned: int          # elements with Y_n = r
    increased: int            # of those, elements with Y_{n+m} > r
    hypothesis_failure: str | None


def conditional_increase(aut, n, m, r, budgets: Budgets = DEFAULT,
                         cache_dir=None) -> MartingaleReport:
    """Exact conditional probability that the fixed-vertex count grows.

    Enumerates the level-(n+m) quotient, conditions on elements whose
    level-n action fixes exactly r vertices, and compares the increase
    probability with the uniform lower bound. When the bound fails the
    report names the first hypothesis of the increase argument that the
    automaton violates at this (n, m, r); a None there with a failing
    bound would be a genuine counterexample.
    """
    qnm = level_quotient(aut, n + m, budgets, cache_dir)
    qm = level_quotient(aut, m, budgets, cache_dir)
    tops = top_tables(qnm, n)
    ar = np.arange(aut.d ** n, dtype=tops.dtype)
    y_top = (tops == ar).sum(axis=1)
    y_full = qnm.fixed_counts()
    mask = y_top == r
    conditioned = int(mask.sum())
    epsilon = Fraction(1, qm.order)
    failure = _increase_hypotheses(aut, n, m, r, budgets, cache_dir)
    if conditioned == 0:
        return MartingaleReport(n, m, r, Fraction(0), epsilon, True, True,
                                qnm.order, 0, 0, failure)
    increased = int((mask & (y_full > r)).sum())
    p = Fraction(increased, conditioned)
    return MartingaleReport(n, m, r, p, epsilon, p >= epsilon, False,
                            qnm.order, conditioned, increased, failure)


def _increase_hypotheses(aut, n, m, r, budgets, cache_dir):
    """First failing hypothesis of the increase bound, or None.

    Checked in order: a fixed vertex to refine exists (r >= 1); vertex
    sections surject and the kernel approximant stabilizes; every coset
    representative fixes infinitely many ends; every representative fixes
    more than r level-m vertices (so routing a section through it can push
    the count past r).
    """
    if r < 1:
        return ("r = %d: the conditioning event fixes no vertex whose "
                "section could be refined" % r)
    try:
        ev = check_vssf(aut, max(n, 2), m, budgets, cache_dir)
    except BudgetExceeded as e:
        return "supporting evidence out of reach: %s" % e
    if ev.surjectivity_failures:
        v, mm = ev.surjectivity_failures[0]
        return ("sections at vertex %s do not surject onto the level-%d "
                "quotient" % (v, mm))
    if not ev.stabilized:
        return "section-kernel index sequence has not stabilized at this reach"
    if not ev.reps_infinite:
        bad = next((w, k) for w, k in ev.reps if k != INFINITELY_MANY)
        return ("coset representative %s does not fix infinitely many ends "
                "(classified %s)" % bad)
    worst = min(count_fixed_level(s, m) for s in ev.rep_elements)
    if worst <= r:
        return ("a coset representative fixes only %d level-%d vertices, "
                "not more than r = %d" % (worst, m, r))
    return None


# -- fixed-point probability per level ---------------------------------------

@dataclass(frozen=True)
class FppEstimate:
    max_level: int
    levels: tuple             # levels with exact values, 1..reach
    exact: tuple              # Fraction per level: μ(Y_n >= 1)
    sampled: tuple            # float per level (empty when not sampling)
    radius: float | None      # two-sided 99% confidence radius
    samples_per_level: int
    seed: int
    monotone: bool            # exact sequence nonincreasing
    reach_note: str = ""


def estimate_fpp(aut, max_level, sample_budget=0, seed=0,
                 budgets: Budgets = DEFAULT, cache_dir=None) -> FppEstimate:
    """Per-level probability that a uniform closure element fixes a vertex.

    Exact counting on every enumerable level up to max_level. Sampling, if
    requested, draws from those same enumerated quotients; levels beyond
    the enumeration budget are reported as out of reach rather than
    approximated through a weaker sampler.
    """
    levels = []
    exact = []
    sampled = []
    note = ""
    for n in range(1, max_level + 1):
        try:
            q = level_quotient(aut, n, budgets, cache_dir)
        except BudgetExceeded as e:
            note = ("exact enumeration reaches level %d; %s" % (n - 1, e))
            break
        fc = q.fixed_counts()
        levels.append(n)
        exact.append(Fraction(int((fc > 0).sum()), q.order))
        if sample_budget > 0:
            level_seed = (seed * 0x9E3779B97F4A7C15 + n) % (1 << 64)
            idx, _ = uniform_sample(aut, n, sample_budget, level_seed, budgets)
            hits = int((fc[idx] > 0).sum())
            sampled.append(hits / sample_budget)
    radius = None
    if sample_budget > 0 and sampled:
        radius = math.sqrt(math.log(2 / 0.01) / (2 * sample_budget))
    monotone = all(exact[i + 1] <= exact[i] for i in range(len(exact) - 1))
    return FppEstimate(max_level, tuple(levels), tuple(exact), tuple(sampled),
                       radius, sample_budget, seed, monotone, note)


# -- vertex-section surjectivity and the kernel approximant -------------------

@dataclass(frozen=True)
class VssfEvidence:
    max_n: int
    max_m: int
    reached_n: int               # deepest level with all vertex checks done
    surjectivity_checked: int    # number of (vertex, m) pairs verified
    surjectivity_failures: tuple  # (vertex string, m)
    index_sequences: tuple       # (m, (index at n=1, index at n=2, ...))
    stabilized: bool             # deepest-m sequence flat over its last step
    kernel_m: int | None         # m of the kernel approximant used for S
    kernel_ids: tuple            # quotient indices forming that approximant
    reps: tuple                  # (element word, end kind) per coset rep
    rep_elements: tuple          # the same reps as Element objects
    reps_infinite: bool
    passes: bool
    reach_note: str = ""


_vssf_memo: dict = {}


def check_vssf(aut, max_n, max_m, budgets: Budgets = DEFAULT,
               cache_dir=None) -> VssfEvidence:
    """Evidence for vertex-level self-replication and a finite-index kernel.

    (i) For every vertex v with 1 <= |v| <= max_n and every m <= max_m,
    check that sections at v of elements fixing v realize the whole level-m
    quotient. (ii) Along the leftmost path intersect the images of level-k
    stabilizer sections for k <= max_n, recording the index sequence, which
    is nondecreasing; flat at the end means stabilized. (iii) Take one
    representative per left coset of the final approximant and classify its
    fixed ends. Budget overruns shrink the reach and are noted, never
    raised.
    """
    memo_key = (aut.content_hash, max_n, max_m, budgets)
    hit = _vssf_memo.get(memo_key)
    if hit is not None:
        return hit
    d = aut.d
    notes = []
    failures = []
    checked = 0
    reached_n = 0
    for k in range(1, max_n + 1):
        try:
            for m in range(1, max_m + 1):
                qm = level_quotient(aut, m, budgets, cache_dir)
                qkm = level_quotient(aut, k + m, budgets, cache_dir)
                tops = top_tables(qkm, k)
                for rv in range(d ** k):
                    stab = np.nonzero(tops[:, rv] == rv)[0]
                    v = tuple(unrank(d, rv, k))
                    secs = section_tables(qkm, v)[stab]
                    distinct = np.unique(secs, axis=0)
                    checked += 1
                    if len(distinct) != qm.order:
                        failures.append((format_vertex(v), m))
        except BudgetExceeded as e:
            notes.append("vertex checks reach level %d of %d (%s)"
                         % (k - 1, max_n, e))
            break
        reached_n = k

    index_sequences = []
    kernel_ids = None
    kernel_m = None
    deepest_seq = ()
    for m in range(1, max_m + 1):
        try:
            qm = level_quotient(aut, m, budgets, cache_dir)
        except BudgetExceeded:
            break
        seq = []
        inter = None
        for k in range(1, max_n + 1):
            try:
                level_quotient(aut, k + m, budgets, cache_dir)
                ids, _ = stabilizer_section_subgroup(aut, k, m, (0,) * k,
                                                     budgets)
            except BudgetExceeded as e:
                notes.append("kernel approximant stops at n=%d for m=%d (%s)"
                             % (k - 1, m, e))
                break
            s = set(ids)
            inter = s if inter is None else inter & s
            assert qm.order % len(inter) == 0
            seq.append(qm.order // len(inter))
        index_sequences.append((m, tuple(seq)))
        if seq:
            kernel_ids = tuple(sorted(inter))
            kernel_m = m
            deepest_seq = tuple(seq)
    stabilized = len(deepest_seq) >= 2 and deepest_seq[-1] == deepest_seq[-2]

    reps = []
    rep_elements = []
    reps_infinite = False
    if kernel_ids:
        qm = level_quotient(aut, kernel_m, budgets, cache_dir)
        visited = bytearray(qm.order)
        rep_ids = []
        for i in range(qm.order):
            if visited[i]:
                continue
            rep_ids.append(i)
            for kk in kernel_ids:
                visited[qm.compose(i, kk)] = 1
        rep_elements = [qm.witness(i) for i in rep_ids]
        for e in rep_elements:
            try:
                kind = classify_fixed_ends(e, budgets).kind
            except BudgetExceeded:
                kind = "unknown"
            reps.append((str(e), kind))
        reps_infinite = all(k == INFINITELY_MANY for _, k in reps)

    passes = (reached_n >= 1 and not failures and stabilized
              and reps_infinite)
    ev = VssfEvidence(max_n, max_m, reached_n, checked, tuple(failures),
                      tuple(index_sequences), stabilized, kernel_m,
                      tuple(kernel_ids or ()), tuple(reps),
                      tuple(rep_elements), reps_infinite, passes,
                      "; ".join(notes))
    _vssf_memo[memo_key] = ev
    return ev


# -- subgroup membership, tri-state ------------------------------------------

def _membership(aut, targets, gen_names, budgets, cache_dir):
    """Verdict per target element for membership in <gen_names>.

    Sound non-membership from level-quotient sieves, sound membership from
    a bounded word search deduplicated by section machine; everything else
    stays unknown.
    """
    verdicts = [None] * len(targets)
    gen_idx = [aut.index[nm] for nm in gen_names]
    for k in range(1, budgets.sieve_depth + 1):
        if all(v is not None for v in verdicts):
            break
        try:
            tabs = aut.level_tables(k, budgets)
        except BudgetExceeded:
            break
        if gen_idx:
            gens = np.stack([tabs[2 * i] for i in gen_idx])
            elems, _, _, complete = kernels.bfs_closure(
                gens, budgets.quotient_elements)
            if not complete:
                continue
            table_set = {row.tobytes() for row in elems}
        else:
            table_set = {np.arange(aut.d ** k, dtype=tabs.dtype).tobytes()}
        for t, g in enumerate(targets):
            if verdicts[t] is None:
                if level_perm(g, k, budgets).tobytes() not in table_set:
                    verdicts[t] = NON_MEMBER

    remaining = {}
    for t, g in enumerate(targets):
        if verdicts[t] is None:
            try:
                remaining[section_closure(g, budgets).key] = t
            except BudgetExceeded:
                pass
    if remaining:
        gens = []
        for nm in gen_names:
            gens.append(aut.generator(nm))
            gens.append(aut.generator(nm, -1))
        start = aut.identity()
        start_key = section_closure(start, budgets).key
        seen = {start_key}
        t = remaining.pop(start_key, None)
        if t is not None:
            verdicts[t] = MEMBER
        frontier = [start]
        depth = 0
        explored = 1
        capped = False
        while frontier and remaining and not capped \
                and depth < budgets.word_search_len:
            depth += 1
            nxt = []
            for e in frontier:
                if capped:
                    break
                for g in gens:
                    h = multiply(e, g)
                    try:
                        key = section_closure(h, budgets).key
                    except BudgetExceeded:
                        continue
                    if key in seen:
                        continue
                    seen.add(key)
                    explored += 1
                    t = remaining.pop(key, None)
                    if t is not None:
                        verdicts[t] = MEMBER
                    nxt.append(h)
                    if explored >= budgets.member_words:
                        capped = True
                        break
            frontier = nxt
    return [UNDECIDED if v is None else v for v in verdicts]


# -- the combined structural criterion ----------------------------------------

@dataclass(frozen=True)
class Prop4Report:
    kneading: KneadingReport
    candidates: tuple            # (letter, generator name) exclusive movers
    cond2: object | None         # SectionDistinctness
    chosen: tuple | None         # candidate the verdict rests on
    nucleus_words: tuple
    memberships: tuple           # (word, verdict, end kind or None)
    product_orderings: tuple     # (product word, bool: lands in kernel)
    vssf: VssfEvidence | None
    verdict: str                 # holds / fails / unknown
    failed_condition: str | None  # kneading / 1 / 2 / 3 / product
    detail: str = ""


def check_prop4(aut, budgets: Budgets = DEFAULT, cache_dir=None) -> Prop4Report:
    """Sufficient criterion for the fixed-end process to die out.

    Requires: the automaton is kneading; some letter x0 is moved by exactly
    one generator g_i; every other generator's section at x0 differs from
    g_i; every nucleus element lying in the subgroup generated without g_i
    fixes infinitely many ends; some ordering of the generators multiplies
    into the kernel approximant; and the surjectivity/kernel evidence
    passes. Sound failures are reported as fails with the violated
    condition; anything not established degrades to unknown, never to a
    false holds.
    """
    kn = check_kneading(aut, budgets)
    candidates = tuple((x, aut.names[i]) for x, i in exclusive_letters(aut))

    def report(cond2=None, chosen=None, nucleus_words=(), memberships=(),
               orderings=(), vssf=None, verdict=UNKNOWN, failed=None,
               detail=""):
        return Prop4Report(kn, candidates, cond2, chosen, nucleus_words,
                           memberships, orderings, vssf, verdict, failed,
                           detail)

    if kn.kind == NOT_KNEADING:
        return report(verdict=FAILS, failed="kneading", detail=kn.reason)
    if kn.kind != KNEADING:
        return report(detail="kneading shape undecided: %s" % kn.reason)
    if not candidates:
        return report(verdict=FAILS, failed="1",
                      detail="no letter is moved by exactly one generator")
    sd = sections_differ(aut, budgets)
    if sd.passed is False:
        x0, i, j = sd.witnesses[0]
        return report(cond2=sd, verdict=FAILS, failed="2",
                      detail="generator %s has section %s at letter %d"
                             % (aut.names[j], aut.names[i], x0))
    if sd.passed is None:
        return report(cond2=sd,
                      detail="section distinctness undecided for some "
                             "candidate")
    try:
        nuc = compute_nucleus(aut, budgets)
    except BudgetExceeded as e:
        return report(cond2=sd, detail="nucleus out of reach: %s" % e)

    vssf = check_vssf(aut, 3, 2, budgets, cache_dir)

    tried_i = []
    best = None                 # (kind, chosen, memberships, detail)
    for x0, i in sd.passing:
        if i in tried_i:
            continue
        tried_i.append(i)
        gen_names = [nm for j, nm in enumerate(aut.names) if j != i]
        verdicts = _membership(aut, nuc.elements, gen_names, budgets,
                               cache_dir)
        rows = []
        hard = None
        soft = None
        for e, v in zip(nuc.elements, verdicts):
            kind = None
            if v != NON_MEMBER:
                try:
                    kind = classify_fixed_ends(e, budgets).kind
                except BudgetExceeded:
                    kind = "unknown"
            rows.append((str(e), v, kind))
            if v == MEMBER and kind in (NO_ENDS, FINITELY_MANY):
                hard = ("nucleus element %s lies in the subgroup without %s "
                        "and fixes %s ends" % (e, aut.names[i],
                                               "no" if kind == NO_ENDS
                                               else "finitely many"))
            elif kind is not None and kind != INFINITELY_MANY:
                soft = ("end or membership status of nucleus element %s "
                        "unresolved" % e)
        rows = tuple(rows)
        if hard is None and soft is None:
            best = ("ok", (x0, aut.names[i]), rows, "")
            break
        kindrank = "hard" if hard else "soft"
        if best is None or (best[0] == "hard" and kindrank == "soft"):
            best = (kindrank, (x0, aut.names[i]), rows, hard or soft)

    kind3, chosen, memberships, detail3 = best

    orderings = []
    product_ok = None
    if vssf.kernel_ids and aut.state_count <= 6:
        qk = level_quotient(aut, vssf.kernel_m, budgets, cache_dir)
        kid = set(vssf.kernel_ids)
        for perm in itertools.permutations(range(aut.state_count)):
            g = aut.identity()
            for j in perm:
                g = multiply(g, aut.generator(aut.names[j]))
            idx = qk.index_of_element(g)
            orderings.append((str(g), idx in kid))
        product_ok = any(ok for _, ok in orderings)
    orderings = tuple(orderings)

    if kind3 == "hard":
        return report(cond2=sd, chosen=chosen, nucleus_words=nuc.words,
                      memberships=memberships, orderings=orderings,
                      vssf=vssf, verdict=FAILS, failed="3", detail=detail3)
    if product_ok is False:
        return report(cond2=sd, chosen=chosen, nucleus_words=nuc.words,
                      memberships=memberships, orderings=orderings,
                      vssf=vssf, verdict=FAILS, failed="product",
                      detail="no ordering of the generators lands in the "
                             "kernel approximant")
    if kind3 == "soft":
        return report(cond2=sd, chosen=chosen, nucleus_words=nuc.words,
                      memberships=memberships, orderings=orderings,
                      vssf=vssf, detail=detail3)
    if product_ok is None:
        return report(cond2=sd, chosen=chosen, nucleus_words=nuc.words,
                      memberships=memberships, orderings=orderings,
                      vssf=vssf, detail="kernel approximant unavailable for "
                                        "the generator-product check")
    if not vssf.passes:
        return report(cond2=sd, chosen=chosen, nucleus_words=nuc.words,
                      memberships=memberships, orderings=orderings,
                      vssf=vssf, detail="surjectivity/kernel evidence "
                                        "incomplete: %s" % (vssf.reach_note
                                                            or "gate failed"))
    return report(cond2=sd, chosen=chosen, nucleus_words=nuc.words,
                  memberships=memberships, orderings=orderings, vssf=vssf,
                  verdict=HOLDS)
