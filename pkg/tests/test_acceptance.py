"""Acceptance gate: nine exact desk-scale checks, one line per criterion.

Under pytest each criterion is a single test. Standalone,

    python3 tests/test_acceptance.py

prints one PASS/FAIL line per criterion and exits nonzero on any failure.
"""
import json
import subprocess
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from conftest import CORPUS, random_word
from oracle_ends import oracle_classify
from ssgtree.budgets import DEFAULT
from ssgtree.core import level_perm
from ssgtree.ends import FINITELY_MANY, UNKNOWN as ENDS_UNKNOWN, \
    classify_fixed_ends
from ssgtree.fpp import FAILS, HOLDS, check_prop4, check_vssf, \
    conditional_increase, estimate_fpp
from ssgtree.kneading import search_kneading
from ssgtree.machine import DISTINCT, EQUAL, equal
from ssgtree.nucleus import closure_report, compute_nucleus, \
    removable_elements
from ssgtree.parsing import parse_automaton, serialize_automaton
from ssgtree.quotient import level_quotient, subindependence_check, top_tables

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"
BIG = DEFAULT.with_overrides(quotient_elements=10_000_000)


def criterion_1():
    """Cone subindependence holds exactly on the corpus."""
    t0 = time.perf_counter()
    combos = [(name, n, m)
              for name in ("odometer", "grigorchuk", "basilica")
              for n in (1, 2) for m in (1, 2)]
    combos.append(("odometer", 3, 1))
    triples = 0
    for name, n, m in combos:
        rep = subindependence_check(CORPUS[name], n, m)
        assert rep.holds, (name, n, m, rep.violations[:3])
        assert rep.row_sums_ok, (name, n, m)
        triples += rep.nonempty_triples
    dt = time.perf_counter() - t0
    assert dt < 60, "took %.1fs" % dt
    return ("zero violations over %d (group, n, m) combos, %d nonempty "
            "triples, %.1fs" % (len(combos), triples, dt))


def criterion_2():
    """Conditional-increase bound, gated by its hypotheses, at full reach."""
    t0 = time.perf_counter()
    cells = bound_holds = diagnosed = 0
    odometer_r0 = False
    eligible = []
    for name, aut in CORPUS.items():
        ev = check_vssf(aut, 3, 2, BIG)
        if not (ev.passes and ev.reps_infinite):
            continue
        eligible.append(name)
        for n in (1, 2, 3):
            for m in (1, 2):
                qnm = level_quotient(aut, n + m, BIG)
                tops = top_tables(qnm, n)
                ar = np.arange(aut.d ** n, dtype=tops.dtype)
                seen_r = sorted(set(int(x) for x in (tops == ar).sum(axis=1)))
                for r in seen_r:
                    rep = conditional_increase(aut, n, m, r, BIG)
                    assert not rep.vacuous, (name, n, m, r)
                    cells += 1
                    if rep.hypothesis_failure is None:
                        # all hypotheses hold: the exact bound must too
                        assert rep.passes, (name, n, m, r,
                                            str(rep.p), str(rep.epsilon))
                    if rep.passes:
                        bound_holds += 1
                    else:
                        assert rep.hypothesis_failure is not None, \
                            (name, n, m, r, str(rep.p))
                        diagnosed += 1
                    if name == "odometer" and r == 0:
                        assert rep.hypothesis_failure is not None, (n, m)
                        odometer_r0 = True
    assert len(eligible) == len(CORPUS), eligible
    assert odometer_r0, "odometer r=0 cells never appeared"
    dt = time.perf_counter() - t0
    assert dt < 120, "took %.1fs" % dt
    return ("p >= 1/|pi_m| exact on %d of %d nonempty cells; the other %d "
            "failures each carry a hypothesis diagnostic (odometer r=0 "
            "included), %.1fs" % (bound_holds, cells, diagnosed, dt))


def criterion_3():
    """Exact fixed-point probabilities: halving for the odometer, monotone
    everywhere."""
    est = estimate_fpp(CORPUS["odometer"], 10)
    want = [Fraction(1, 2 ** n) for n in range(1, 11)]
    assert list(est.exact) == want, est.exact[:4]
    parts = []
    for name, aut in CORPUS.items():
        e = estimate_fpp(aut, 10)
        assert e.monotone, (name, e.exact)
        assert len(e.levels) >= 4, (name, e.levels)
        parts.append("%s:%d levels" % (name, len(e.levels)))
    return ("odometer curve is exactly 2^-n for n=1..10; nonincreasing on "
            "all groups (%s)" % ", ".join(parts))


def criterion_4():
    """Ends classifier against the independent path-counting oracle."""
    rng = np.random.default_rng(20260817)
    total = unknowns = agreed = 0
    for name, aut in CORPUS.items():
        for _ in range(1000):
            g = random_word(aut, rng, 6)
            rep = classify_fixed_ends(g)
            total += 1
            if rep.kind == ENDS_UNKNOWN:
                unknowns += 1
                continue
            kind, count = oracle_classify(g)
            if kind == ENDS_UNKNOWN:
                unknowns += 1
                continue
            assert rep.kind == kind, (name, str(g), rep.kind, kind)
            if kind == FINITELY_MANY:
                assert rep.count == count, (name, str(g), rep.count, count)
            agreed += 1
    assert unknowns / total < 0.01, "%d unknowns of %d" % (unknowns, total)
    return ("%d words across %d groups: %d decided verdicts all agree with "
            "the oracle, %d unknown (%.2f%%)"
            % (total, len(CORPUS), agreed, unknowns,
               100.0 * unknowns / total))


def criterion_5():
    """Nucleus contents, closure re-check, and minimality."""
    t0 = time.perf_counter()
    expected = {"odometer": {"1", "a", "a^-1"},
                "grigorchuk": {"1", "a", "b", "c", "d"}}
    for name, words in expected.items():
        rep = compute_nucleus(CORPUS[name])
        assert rep.size == len(words), (name, rep.words)
        assert set(rep.words) == words, (name, rep.words)
        ok, reason = closure_report(rep.automaton, rep.elements)
        assert ok, (name, reason)
        assert removable_elements(rep.automaton, rep.elements) == [], name
    dt = time.perf_counter() - t0
    assert dt < 30, "took %.1fs" % dt
    return ("odometer nucleus {1, a, a^-1} and grigorchuk nucleus "
            "{1, a, b, c, d}; both closure-checked and minimal, %.1fs" % dt)


def criterion_6():
    """Bisimulation equality against level-8 image tables."""
    rng = np.random.default_rng(88)
    pairs_per_group = 10_000
    checked = 0
    for name, aut in CORPUS.items():
        for _ in range(pairs_per_group):
            g = random_word(aut, rng, 8)
            h = random_word(aut, rng, 8)
            r = equal(g, h)
            same_tables = np.array_equal(level_perm(g, 8), level_perm(h, 8))
            if r.kind == EQUAL:
                assert same_tables, (name, str(g), str(h))
            elif r.kind == DISTINCT:
                assert not same_tables, (name, str(g), str(h))
            else:
                raise AssertionError("undecided pair %s, %s in %s"
                                     % (g, h, name))
            checked += 1
    return ("%d random pairs across %d groups, zero disagreements with "
            "level-8 tables" % (checked, len(CORPUS)))


def criterion_7():
    """Structural criterion verdicts, with decreasing curves behind every
    Holds."""
    t0 = time.perf_counter()
    for name in ("odometer", "basilica"):
        rep = check_prop4(CORPUS[name])
        assert rep.verdict == HOLDS, (name, rep.verdict, rep.detail)
        est = estimate_fpp(CORPUS[name], 4)
        assert len(est.exact) == 4, name
        assert all(a > b for a, b in zip(est.exact, est.exact[1:])), \
            (name, est.exact)
    viol = parse_automaton((CORPUS_DIR / "prop4_violator.ssg").read_text())
    rep = check_prop4(viol)
    assert rep.verdict == FAILS and rep.failed_condition == "2", \
        (rep.verdict, rep.failed_condition)
    assert rep.cond2 is not None and rep.cond2.witnesses, "witness missing"
    assert rep.detail, "witness text missing"
    dt = time.perf_counter() - t0
    assert dt < 180, "took %.1fs" % dt
    return ("Holds for odometer and basilica with strictly decreasing "
            "curves; violator Fails(2) with witness %s, %.1fs"
            % (list(rep.cond2.witnesses), dt))


def criterion_8():
    """Exhaustive two-state search: conditions hold, runs are resumable."""
    full = search_kneading((2,), 2, DEFAULT)
    assert full.complete and full.raw_scanned == 333, full
    assert full.rows_emitted == 106, full.rows_emitted
    rows = [json.loads(r) for r in full.rows]
    kneads = [r for r in rows if r["kneading"]]
    assert len(kneads) == 12, len(kneads)
    bad = [r["index"] for r in kneads if not (r["cond1"] and r["cond2"])]
    assert bad == [], bad

    again = search_kneading((2,), 2, DEFAULT)
    assert again.rows == full.rows, "catalog is not deterministic"

    with tempfile.TemporaryDirectory() as td:
        one_shot = Path(td) / "single.jsonl"
        search_kneading((2,), 2, DEFAULT, out_path=str(one_shot))

        cat = Path(td) / "restart.jsonl"
        ck = Path(td) / "ck"
        partial = search_kneading((2,), 2,
                                  DEFAULT.with_overrides(search_rows=40),
                                  out_path=str(cat), checkpoint_path=str(ck))
        assert not partial.complete
        # a kill can leave a torn final line after the checkpointed rows
        with open(cat, "a") as f:
            f.write('{"index":9999,"trunc')
        resumed = search_kneading((2,), 2, DEFAULT, out_path=str(cat),
                                  checkpoint_path=str(ck))
        assert resumed.complete
        assert cat.read_bytes() == one_shot.read_bytes(), \
            "restart produced a different catalog"
    return ("333 encodings -> 106 canonical rows, 12 kneading, zero failing "
            "the two letter conditions; deterministic and identical after "
            "interrupt/restart")


def criterion_9():
    """Byte-stable JSON output and corpus file round-trips."""
    for path in sorted(CORPUS_DIR.glob("*.ssg")):
        text = path.read_text()
        aut = parse_automaton(text)
        assert serialize_automaton(aut) == text, path.name
        assert parse_automaton(serialize_automaton(aut)) == aut, path.name

    grig = str(CORPUS_DIR / "grigorchuk.ssg")
    seeded = [sys.executable, "-m", "ssgtree.cli", "fpp", grig,
              "--max-level", "3", "--samples", "500", "--seed", "123",
              "--json"]
    for argv in (seeded,
                 [sys.executable, "-m", "ssgtree.cli", "prop4", grig,
                  "--json"],
                 [sys.executable, "-m", "ssgtree.cli", "search",
                  "--alphabet", "2", "--states", "1", "--json"]):
        a = subprocess.run(argv, capture_output=True)
        b = subprocess.run(argv, capture_output=True)
        assert a.stdout == b.stdout and a.stdout, argv[3:]
        assert a.returncode == b.returncode
    return ("all %d corpus files round-trip byte-identically; repeated "
            "seeded --json runs are byte-identical"
            % len(list(CORPUS_DIR.glob("*.ssg"))))


_CRITERIA = [
    (1, "subindependence", criterion_1),
    (2, "martingale bound", criterion_2),
    (3, "fixed-point curve", criterion_3),
    (4, "ends vs oracle", criterion_4),
    (5, "nucleus", criterion_5),
    (6, "equality vs tables", criterion_6),
    (7, "structural criterion", criterion_7),
    (8, "exhaustive search", criterion_8),
    (9, "determinism & round-trip", criterion_9),
]


def test_criterion_1_subindependence():
    print("PASS criterion 1: " + criterion_1())


def test_criterion_2_martingale_bound():
    print("PASS criterion 2: " + criterion_2())


def test_criterion_3_fixed_point_curve():
    print("PASS criterion 3: " + criterion_3())


def test_criterion_4_ends_vs_oracle():
    print("PASS criterion 4: " + criterion_4())


def test_criterion_5_nucleus():
    print("PASS criterion 5: " + criterion_5())


def test_criterion_6_equality_vs_tables():
    print("PASS criterion 6: " + criterion_6())


def test_criterion_7_structural_criterion():
    print("PASS criterion 7: " + criterion_7())


def test_criterion_8_exhaustive_search():
    print("PASS criterion 8: " + criterion_8())


def test_criterion_9_determinism_round_trip():
    print("PASS criterion 9: " + criterion_9())


def _run_all():
    failed = 0
    for num, label, fn in _CRITERIA:
        try:
            msg = fn()
        except AssertionError as e:
            failed += 1
            print("FAIL criterion %d (%s): %s" % (num, label, e))
        else:
            print("PASS criterion %d: %s" % (num, msg))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(_run_all())
