"""Timing comparison of the compiled and pure-Python closure kernels.

Runs the BFS closure over the same generator tables with both backends,
verifies the outputs are bit-identical, and reports wall times. Usage:

    python3 benchmarks/bench_kernels.py [--repeat 3] [--large]
"""
import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ssgtree import _kernels_py
from ssgtree.budgets import Budgets
from ssgtree.parsing import parse_automaton
from ssgtree.quotient import quotient_generators

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load(name):
    return parse_automaton((CORPUS / (name + ".ssg")).read_text())


def workloads(large):
    out = [
        ("grigorchuk level 3", load("grigorchuk"), 3),
        ("grigorchuk level 4", load("grigorchuk"), 4),
        ("basilica level 4", load("basilica"), 4),
        ("odometer level 10", load("odometer"), 10),
    ]
    if large:
        out.append(("grigorchuk level 5", load("grigorchuk"), 5))
        out.append(("basilica level 5", load("basilica"), 5))
    return out


def best_of(fn, repeat):
    times = []
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def same(a, b):
    return (np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
            and np.array_equal(a[2], b[2]) and a[3] == b[3])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3,
                    help="timing repetitions per backend (default 3)")
    ap.add_argument("--large", action="store_true",
                    help="include the multi-million-element level-5 closures")
    args = ap.parse_args()

    try:
        from ssgtree import _kernels
    except ImportError:
        _kernels = None
        print("compiled backend not importable; timing the pure-Python "
              "kernel only", file=sys.stderr)

    budgets = Budgets(quotient_elements=10_000_000, table_leaves=1 << 20)
    header = "%-22s %12s %12s %9s %10s" % ("workload", "python", "compiled",
                                           "speedup", "elements")
    print(header)
    print("-" * len(header))
    for label, aut, n in workloads(args.large):
        gens = quotient_generators(aut, n, budgets)
        tables = np.stack([t for _, _, t in gens])
        budget = budgets.quotient_elements
        t_py, r_py = best_of(lambda: _kernels_py.bfs_closure(tables, budget),
                             args.repeat)
        if _kernels is None:
            print("%-22s %10.3fs %12s %9s %10d"
                  % (label, t_py, "-", "-", len(r_py[0])))
            continue
        t_c, r_c = best_of(lambda: _kernels.bfs_closure(tables, budget),
                           args.repeat)
        if not same(r_py, r_c):
            print("BACKEND MISMATCH on %s" % label, file=sys.stderr)
            return 1
        print("%-22s %10.3fs %11.3fs %8.1fx %10d"
              % (label, t_py, t_c, t_py / t_c, len(r_py[0])))
    print("\nbackends agree on every workload" if _kernels is not None
          else "\ninstall with the compiled extension for the comparison")
    return 0


if __name__ == "__main__":
    sys.exit(main())
