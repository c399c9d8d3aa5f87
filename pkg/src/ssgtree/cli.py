"""Command line front end.

One subcommand per engine facility. Results go to stdout, either as plain
text or, with --json, as a single machine-readable line conforming to the
schema shipped in ssgtree/schema/cli-output.schema.json. Diagnostics go to
stderr only.

Exit codes: 0 success, 1 a checked property fails with a sound witness,
2 usage or input errors, 3 a budget tripped or the verdict is unknown at
the configured reach.
"""

import argparse
import dataclasses
import json
import os
import sys
from fractions import Fraction

from .budgets import DEFAULT, Budgets
from .core import format_vertex
from .errors import BudgetExceeded, CacheError, ParseError
from .ends import (FINITELY_MANY, INFINITELY_MANY, NO_ENDS,
                   check_end_dichotomy, classify_fixed_ends)
from .fpp import (FAILS, HOLDS, check_prop4, check_vssf, conditional_increase,
                  estimate_fpp)
from .kneading import search_kneading
from .nucleus import compute_nucleus
from .parsing import parse_automaton, parse_element
from .quotient import level_quotient, subindependence_check

SCHEMA_ID = "ssgtree-cli/1"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


# -- input helpers -----------------------------------------------------------

def _load_automaton(path):
    with open(path) as f:
        text = f.read()
    try:
        return parse_automaton(text)
    except ParseError as e:
        raise ParseError("%s: %s" % (path, e.message), e.line,
                         e.column) from None


def _word(letters):
    return "".join(str(x) for x in letters)


def _frac(f: Fraction) -> str:
    return str(f)


def _yesno(b):
    return "yes" if b else "no"


# -- per-command handlers ----------------------------------------------------
# Each returns (automaton or None, result dict, text lines, exit code).

def _cmd_nucleus(args, budgets, cache_dir):
    aut = _load_automaton(args.automaton)
    rep = compute_nucleus(aut, budgets)
    result = {
        "size": rep.size,
        "generations": rep.generations,
        "elements": list(rep.words),
    }
    text = ["nucleus size %d (closed after %d generations)"
            % (rep.size, rep.generations)]
    text += ["  " + w for w in rep.words]
    return aut, result, text, EXIT_OK


def _cmd_ends(args, budgets, cache_dir):
    aut = _load_automaton(args.automaton)
    g = parse_element(args.element, aut)
    rep = classify_fixed_ends(g, budgets)
    result = {
        "element": str(g),
        "kind": rep.kind,
        "count": rep.count,
        "vanish_level": rep.vanish_level,
        "ends": [[_word(p), _word(c)] for p, c in rep.ends],
        "branch": (None if rep.branch is None else
                   [_word(rep.branch[0]), _word(rep.branch[1]),
                    int(rep.branch[2])]),
        "detail": rep.detail,
    }
    if rep.kind == NO_ENDS:
        text = ["NoEnds, certificate k=%d" % rep.vanish_level]
        code = EXIT_OK
    elif rep.kind == FINITELY_MANY:
        text = ["FinitelyMany(%d)" % rep.count]
        text += ["  end %s(%s)^w" % (_word(p) or "-", _word(c))
                 for p, c in rep.ends]
        code = EXIT_OK
    elif rep.kind == INFINITELY_MANY:
        text = ["InfinitelyMany"]
        if rep.branch is not None:
            path, cyc, exit_letter = rep.branch
            text.append("  branching along %s(%s)* with exit letter %d"
                        % (_word(path) or "-", _word(cyc), exit_letter))
        code = EXIT_OK
    else:
        text = ["Unknown: %s" % (rep.detail or "budget exhausted")]
        code = EXIT_BUDGET
    return aut, result, text, code


def _cmd_dichotomy(args, budgets, cache_dir):
    aut = _load_automaton(args.automaton)
    rep = check_end_dichotomy(aut, args.word_len, budgets)
    result = {
        "holds": rep.holds,
        "word_len": args.word_len,
        "words_checked": rep.words_checked,
        "classes_checked": rep.classes_checked,
        "violations": [[w, c] for w, c in rep.violations],
        "unknowns": list(rep.unknowns),
    }
    text = ["%d violations / %d words (%d distinct automorphisms)"
            % (len(rep.violations), rep.words_checked, rep.classes_checked)]
    text += ["  %s fixes exactly %d ends" % wc for wc in rep.violations]
    if rep.unknowns:
        text.append("  %d words undecided at this budget" % len(rep.unknowns))
    if rep.violations:
        code = EXIT_FAIL
    elif rep.unknowns:
        code = EXIT_BUDGET
    else:
        code = EXIT_OK
    return aut, result, text, code


def _cmd_quotient(args, budgets, cache_dir):
    aut = _load_automaton(args.automaton)
    q = level_quotient(aut, args.n, budgets, cache_dir)
    fixing = Fraction(int((q.fixed_counts() >= 1).sum()), q.order)
    result = {
        "n": args.n,
        "order": q.order,
        "cone_measure": _frac(Fraction(1, q.order)),
        "fixing_fraction": _frac(fixing),
    }
    text = [
        "level %d quotient: order %d" % (args.n, q.order),
        "cone measure 1/%d" % q.order,
        "fraction fixing some level-%d vertex: %s" % (args.n, _frac(fixing)),
    ]
    return aut, result, text, EXIT_OK


def _cmd_subindep(args, budgets, cache_dir):
    aut = _load_automaton(args.automaton)
    if cache_dir is not None:
        for k in (args.n, args.m, args.n + args.m):
            level_quotient(aut, k, budgets, cache_dir)
    rep = subindependence_check(aut, args.n, args.m, budgets)
    result = {
        "holds": rep.holds and rep.row_sums_ok,
        "n": rep.n,
        "m": rep.m,
        "order_n": rep.order_n,
        "order_m": rep.order_m,
        "order_nm": rep.order_nm,
        "triples_checked": rep.triples_checked,
        "nonempty_triples": rep.nonempty_triples,
        "violations": [{
            "vertex": _word(v["vertex"]),
            "top": v["top"],
            "section": v["section"],
            "count": v["count"],
            "lhs": v["lhs"],
            "rhs": v["rhs"],
        } for v in rep.violations],
        "row_sums_ok": rep.row_sums_ok,
        "note": rep.note,
    }
    text = ["%d violations / %d triples (%d nonempty)"
            % (len(rep.violations), rep.triples_checked, rep.nonempty_triples)]
    for v in rep.violations:
        text.append("  vertex %s top %s section %s: %s < %s"
                    % (format_vertex(v["vertex"]), v["top"], v["section"],
                       v["lhs"], v["rhs"]))
    if not rep.row_sums_ok:
        text.append("  row sums do not recover the cone measure")
    if rep.note:
        text.append("note: %s" % rep.note)
    ok = rep.holds and rep.row_sums_ok
    return aut, result, text, EXIT_OK if ok else EXIT_FAIL


def _cmd_martingale(args, budgets, cache_dir):
    aut = _load_automaton(args.automaton)
    rep = conditional_increase(aut, args.n, args.m, args.r, budgets, cache_dir)
    result = {
        "n": rep.n,
        "m": rep.m,
        "r": rep.r,
        "p": _frac(rep.p),
        "epsilon": _frac(rep.epsilon),
        "passes": rep.passes,
        "vacuous": rep.vacuous,
        "sample_space": rep.sample_space,
        "conditioned": rep.conditioned,
        "increased": rep.increased,
        "hypothesis_failure": rep.hypothesis_failure,
    }
    if rep.vacuous:
        text = ["no element of the level-%d quotient fixes exactly %d "
                "level-%d vertices; bound vacuously holds"
                % (args.n + args.m, args.r, args.n)]
    else:
        verdict = "holds" if rep.passes else "FAILS"
        text = ["p = %s (%d of %d), epsilon = %s: bound %s"
                % (_frac(rep.p), rep.increased, rep.conditioned,
                   _frac(rep.epsilon), verdict)]
    if rep.hypothesis_failure:
        text.append("hypothesis not met: %s" % rep.hypothesis_failure)
    ok = rep.passes or rep.hypothesis_failure is not None
    return aut, result, text, EXIT_OK if ok else EXIT_FAIL


def _cmd_fpp(args, budgets, cache_dir):
    aut = _load_automaton(args.automaton)
    est = estimate_fpp(aut, args.max_level, args.samples, args.seed,
                       budgets, cache_dir)
    result = {
        "max_level": est.max_level,
        "levels": list(est.levels),
        "exact": [_frac(f) for f in est.exact],
        "sampled": [float(x) for x in est.sampled],
        "radius": est.radius,
        "samples_per_level": est.samples_per_level,
        "monotone": est.monotone,
        "reach_note": est.reach_note,
    }
    text = []
    for i, n in enumerate(est.levels):
        line = "level %d: mu(fixes a vertex) = %s" % (n, _frac(est.exact[i]))
        if est.sampled:
            line += "  (sampled %.6f +- %.6f)" % (est.sampled[i], est.radius)
        text.append(line)
    text.append("nonincreasing: %s" % _yesno(est.monotone))
    if est.reach_note:
        print("ssgtree: %s" % est.reach_note, file=sys.stderr)
    code = EXIT_OK if len(est.levels) == est.max_level else EXIT_BUDGET
    return aut, result, text, code


def _vssf_result(ev):
    return {
        "max_n": ev.max_n,
        "max_m": ev.max_m,
        "reached_n": ev.reached_n,
        "surjectivity_checked": ev.surjectivity_checked,
        "surjectivity_failures": [[v, m] for v, m in ev.surjectivity_failures],
        "index_sequences": [[m, list(seq)] for m, seq in ev.index_sequences],
        "stabilized": ev.stabilized,
        "kernel_m": ev.kernel_m,
        "kernel_ids": [int(i) for i in ev.kernel_ids],
        "reps": [[w, k] for w, k in ev.reps],
        "reps_infinite": ev.reps_infinite,
        "passes": ev.passes,
        "reach_note": ev.reach_note,
    }


def _vssf_exit(ev):
    if ev.passes:
        return EXIT_OK
    if ev.surjectivity_failures or (ev.reps and not ev.reps_infinite):
        return EXIT_FAIL
    return EXIT_BUDGET


def _cmd_vssf(args, budgets, cache_dir):
    aut = _load_automaton(args.automaton)
    ev = check_vssf(aut, args.max_n, args.max_m, budgets, cache_dir)
    result = _vssf_result(ev)
    text = ["vertex levels reached: %d of %d" % (ev.reached_n, ev.max_n),
            "surjectivity: %d checks, %d failures"
            % (ev.surjectivity_checked, len(ev.surjectivity_failures))]
    text += ["  sections at %s miss the level-%d quotient" % vm
             for vm in ev.surjectivity_failures]
    for m, seq in ev.index_sequences:
        text.append("kernel index sequence (m=%d): %s"
                    % (m, ", ".join(str(i) for i in seq)))
    text.append("stabilized: %s" % _yesno(ev.stabilized))
    for w, kind in ev.reps:
        text.append("coset rep %s: %s" % (w, kind))
    text.append("passes: %s" % _yesno(ev.passes))
    if ev.reach_note:
        print("ssgtree: %s" % ev.reach_note, file=sys.stderr)
    return aut, result, text, _vssf_exit(ev)


def _cmd_prop4(args, budgets, cache_dir):
    aut = _load_automaton(args.automaton)
    rep = check_prop4(aut, budgets, cache_dir)
    kn = rep.kneading
    result = {
        "verdict": rep.verdict,
        "failed_condition": rep.failed_condition,
        "detail": rep.detail,
        "kneading": {
            "kind": kn.kind,
            "reason": kn.reason,
            "trivial_states": list(kn.trivial_states),
            "arrows": [[a, int(x), b] for a, x, b in kn.arrows],
            "checked": [[name, ok] for name, ok in kn.checked],
        },
        "candidates": [[int(x), nm] for x, nm in rep.candidates],
        "cond2": None if rep.cond2 is None else {
            "passed": rep.cond2.passed,
            "passing": [list(p) for p in rep.cond2.passing],
            "witnesses": [list(w) for w in rep.cond2.witnesses],
            "unknowns": [list(u) for u in rep.cond2.unknowns],
        },
        "chosen": None if rep.chosen is None else [int(rep.chosen[0]),
                                                   rep.chosen[1]],
        "nucleus": list(rep.nucleus_words),
        "memberships": [[w, v, k] for w, v, k in rep.memberships],
        "product_orderings": [[w, bool(ok)] for w, ok in
                              rep.product_orderings],
        "vssf": None if rep.vssf is None else _vssf_result(rep.vssf),
    }
    if rep.verdict == HOLDS:
        text = ["Holds"]
        if rep.chosen is not None:
            text.append("  exclusive letter %d moved only by %s"
                        % (rep.chosen[0], rep.chosen[1]))
        for w, v, k in rep.memberships:
            kk = "" if k is None else " (%s)" % k
            text.append("  nucleus word %s: %s%s" % (w, v, kk))
        for w, ok in rep.product_orderings:
            text.append("  product %s lands in the kernel approximant: %s"
                        % (w, _yesno(ok)))
        code = EXIT_OK
    elif rep.verdict == FAILS:
        text = ["Fails(%s): %s" % (rep.failed_condition, rep.detail)]
        code = EXIT_FAIL
    else:
        text = ["Unknown: %s" % rep.detail]
        code = EXIT_BUDGET
    return aut, result, text, code


def _cmd_search(args, budgets, cache_dir):
    res = search_kneading(tuple(args.alphabet), args.states, budgets,
                          out_path=args.out, checkpoint_path=args.checkpoint)
    result = {
        "alphabet_sizes": list(res.alphabet_sizes),
        "max_states": res.max_states,
        "rows_emitted": res.rows_emitted,
        "raw_scanned": res.raw_scanned,
        "complete": res.complete,
        "next_index": res.next_index,
        "rows": [json.loads(r) for r in res.rows],
    }
    text = []
    if args.out is None:
        text += list(res.rows)
    text.append("scanned %d raw encodings, emitted %d canonical rows"
                % (res.raw_scanned, res.rows_emitted))
    if args.out is not None:
        text.append("catalog written to %s" % args.out)
    if not res.complete:
        print("ssgtree: row budget exhausted; resume from raw index %d"
              % res.next_index, file=sys.stderr)
    return None, result, text, EXIT_OK if res.complete else EXIT_BUDGET


# -- argument parsing ---------------------------------------------------------

def _budget_flags(parser):
    group = parser.add_argument_group("budgets")
    for f in dataclasses.fields(Budgets):
        flag = "--budget-" + f.name.replace("_", "-")
        group.add_argument(flag, type=int, default=None, metavar="N",
                           dest="budget_" + f.name,
                           help="override %s (default %s)"
                           % (f.name, f.default))


def _common_flags(parser):
    parser.add_argument("--json", action="store_true",
                        help="emit one machine-readable JSON line")
    parser.add_argument("--seed", type=int, default=0, metavar="S",
                        help="sampling seed, 64-bit unsigned (default 0)")
    parser.add_argument("--cache-dir", default=None, metavar="DIR",
                        help="quotient cache directory (overrides "
                             "SSGTREE_CACHE_DIR)")
    _budget_flags(parser)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ssgtree",
        description="Self-similar group computations on rooted trees.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text, needs_file=True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        if needs_file:
            p.add_argument("automaton", help="automaton description file")
        _common_flags(p)
        p.set_defaults(handler=handler)
        return p

    add("nucleus", _cmd_nucleus,
        "compute the nucleus of the self-similar action")

    p = add("ends", _cmd_ends,
            "classify the fixed ends of one tree automorphism")
    p.add_argument("--element", required=True, metavar="EXPR",
                   help="group element expression, e.g. 'a*b^-1'")

    p = add("dichotomy", _cmd_dichotomy,
            "sweep short words for the zero-or-infinite fixed-end dichotomy")
    p.add_argument("--word-len", type=int, required=True, metavar="L",
                   help="maximum reduced word length")

    p = add("quotient", _cmd_quotient,
            "enumerate the level-n quotient and its basic measures")
    p.add_argument("-n", type=int, required=True, help="tree level")

    p = add("subindep", _cmd_subindep,
            "exact cone pair-correlation lower bound at levels n and m")
    p.add_argument("-n", type=int, required=True, help="top level")
    p.add_argument("-m", type=int, required=True, help="section level")

    p = add("martingale", _cmd_martingale,
            "conditional probability that the fixed-vertex count grows")
    p.add_argument("-n", type=int, required=True, help="conditioning level")
    p.add_argument("-m", type=int, required=True, help="refinement depth")
    p.add_argument("-r", type=int, required=True,
                   help="conditioned fixed-vertex count")

    p = add("fpp", _cmd_fpp,
            "per-level probability that a uniform element fixes a vertex")
    p.add_argument("--max-level", type=int, required=True, metavar="L",
                   help="deepest level to evaluate")
    p.add_argument("--samples", type=int, default=0, metavar="K",
                   help="Monte Carlo draws per level (default 0: exact only)")

    p = add("vssf", _cmd_vssf,
            "vertex-section surjectivity and kernel approximant evidence")
    p.add_argument("--max-n", type=int, required=True, metavar="N",
                   help="deepest vertex level to verify")
    p.add_argument("--max-m", type=int, required=True, metavar="M",
                   help="deepest section level to verify")

    add("prop4", _cmd_prop4,
        "combined structural criterion for vanishing fixed-end probability")

    p = add("search", _cmd_search,
            "catalog canonical automata and their kneading conditions",
            needs_file=False)
    p.add_argument("--alphabet", type=int, nargs="+", required=True,
                   metavar="D", help="alphabet sizes to enumerate")
    p.add_argument("--states", type=int, required=True, metavar="S",
                   help="maximum number of states")
    p.add_argument("--out", default=None, metavar="PATH",
                   help="write the catalog to this JSONL file")
    p.add_argument("--checkpoint", default=None, metavar="PATH",
                   help="checkpoint file for resumable runs")

    return parser


# -- entry point ---------------------------------------------------------------

def _run(args):
    if not 0 <= args.seed < 2 ** 64:
        print("ssgtree: --seed must be a 64-bit unsigned integer",
              file=sys.stderr)
        return EXIT_USAGE
    overrides = {f.name: getattr(args, "budget_" + f.name)
                 for f in dataclasses.fields(Budgets)}
    budgets = DEFAULT.with_overrides(**overrides)
    cache_dir = args.cache_dir
    if cache_dir is None:
        cache_dir = os.environ.get("SSGTREE_CACHE_DIR") or None

    aut, result, text, code = args.handler(args, budgets, cache_dir)

    if args.json:
        doc = {
            "schema": SCHEMA_ID,
            "command": args.command,
            "automaton": None if aut is None else aut.content_hash[:16],
            "seed": args.seed if args.command == "fpp" else None,
            "result": result,
        }
        sys.stdout.write(json.dumps(doc, sort_keys=True,
                                    separators=(",", ":")) + "\n")
    else:
        for line in text:
            print(line)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ParseError as e:
        print("ssgtree: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    except CacheError as e:
        print("ssgtree: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as e:
        print("ssgtree: %s" % e, file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError) as e:
        print("ssgtree: %s" % e, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
