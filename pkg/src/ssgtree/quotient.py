"""Finite level quotients: the group's action on one tree level.

Every element acts on the d^n level-n vertices through its image table;
the set of distinct tables under products of generator tables is the level
quotient, enumerated breadth-first so each element carries a shortlex
witness word. Tables compose by composition of rank maps: the table of g*h
is T_g[T_h].

Level-(n+m) tables refine level-n ones. With r = rank(v)*d^m + rank(w) for
a level-n vertex v over a level-m tail w, the top table is T[::d^m] // d^m
and the section table at v is the v-th block of T modulo d^m.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .budgets import DEFAULT, Budgets
from .core import Element, leaf_dtype, rank
from .errors import BudgetExceeded, CacheError


def quotient_generators(aut, n, budgets: Budgets = DEFAULT):
    """Deduplicated signed-state tables at level n, with labels and codes."""
    tabs = aut.level_tables(n, budgets)
    gens = []
    seen = set()
    for i, name in enumerate(aut.names):
        for sign, code in ((1, 2 * i), (-1, 2 * i + 1)):
            t = tabs[code]
            key = t.tobytes()
            if key in seen:
                continue
            seen.add(key)
            label = name if sign > 0 else name + "^-1"
            gens.append((label, code, t))
    return gens


@dataclass(eq=False)
class LevelQuotient:
    automaton: object
    n: int
    gen_labels: tuple
    gen_codes: tuple
    elements: np.ndarray   # (order, d^n), read-only
    parent: np.ndarray
    gen_idx: np.ndarray
    _lookup: dict | None = field(default=None, repr=False)

    @property
    def order(self):
        return len(self.elements)

    @property
    def identity_index(self):
        return 0

    def _index(self):
        if self._lookup is None:
            self._lookup = {row.tobytes(): i
                            for i, row in enumerate(self.elements)}
        return self._lookup

    def index_of(self, table):
        """Index of a table in the quotient, or None."""
        t = np.ascontiguousarray(table, dtype=self.elements.dtype)
        return self._index().get(t.tobytes())

    def witness(self, i) -> Element:
        """Shortlex generator word mapping to element i."""
        codes = []
        while i != 0:
            codes.append(self.gen_codes[self.gen_idx[i]])
            i = int(self.parent[i])
        codes.reverse()
        return Element(self.automaton, tuple(codes))

    def compose(self, i, j):
        """Index of element i * j."""
        row = self.elements[i][self.elements[j]]
        k = self._index().get(row.tobytes())
        if k is None:
            raise AssertionError("quotient not closed under composition")
        return k

    def inverse_of(self, i):
        row = np.argsort(self.elements[i]).astype(self.elements.dtype)
        k = self._index().get(row.tobytes())
        if k is None:
            raise AssertionError("quotient not closed under inversion")
        return k

    def index_of_element(self, g: Element):
        from .core import level_perm
        return self.index_of(level_perm(g, self.n))

    def fixed_counts(self):
        """Per element, the number of fixed level-n vertices."""
        ar = np.arange(self.elements.shape[1], dtype=self.elements.dtype)
        return (self.elements == ar).sum(axis=1)


_memory_cache: dict = {}


def level_quotient(aut, n, budgets: Budgets = DEFAULT,
                   cache_dir=None) -> LevelQuotient:
    """Enumerate the level-n quotient, with optional on-disk caching."""
    key = (aut.content_hash, n)
    q = _memory_cache.get(key)
    if q is None and cache_dir is not None:
        q = _load_cached(aut, n, cache_dir)
        if q is not None:
            _memory_cache[key] = q
    if q is None:
        gens = quotient_generators(aut, n, budgets)
        tables = np.stack([t for _, _, t in gens])
        elems, parent, gen_idx, complete = kernels.bfs_closure(
            tables, budgets.quotient_elements)
        if not complete:
            raise BudgetExceeded("quotient", budgets.quotient_elements,
                                 len(elems) + 1,
                                 "level %d quotient is larger" % n)
        elems.setflags(write=False)
        q = LevelQuotient(aut, n,
                          tuple(lb for lb, _, _ in gens),
                          tuple(c for _, c, _ in gens),
                          elems, parent, gen_idx)
        _memory_cache[key] = q
        if cache_dir is not None:
            _store_cached(q, cache_dir)
    if q.order > budgets.quotient_elements:
        raise BudgetExceeded("quotient", budgets.quotient_elements, q.order,
                             "level %d quotient is larger" % n)
    return q


# -- disk cache -------------------------------------------------------------

_MAGIC = b"SSGQ"
_VERSION = 1


def _cache_path(aut, n, cache_dir):
    return os.path.join(cache_dir, "%s-n%d.ssgq" % (aut.content_hash[:16], n))


def _store_cached(q: LevelQuotient, cache_dir):
    os.makedirs(cache_dir, exist_ok=True)
    header = json.dumps({
        "automaton": q.automaton.content_hash,
        "n": q.n,
        "order": q.order,
        "leaves": int(q.elements.shape[1]),
        "dtype": q.elements.dtype.name,
        "gen_labels": list(q.gen_labels),
        "gen_codes": list(q.gen_codes),
    }, sort_keys=True).encode()
    payload = b"".join([
        _MAGIC, _VERSION.to_bytes(2, "little"),
        len(header).to_bytes(8, "little"), header,
        q.elements.tobytes(),
        q.parent.astype(np.int64).tobytes(),
        q.gen_idx.astype(np.int16).tobytes(),
    ])
    digest = hashlib.sha256(payload).digest()
    path = _cache_path(q.automaton, q.n, cache_dir)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
            f.write(digest)
        os.replace(tmp, path)
    except OSError:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise CacheError("could not write cache file %s" % path)


def _load_cached(aut, n, cache_dir):
    """Read a cached quotient; any corruption is silently a miss."""
    path = _cache_path(aut, n, cache_dir)
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError:
        return None
    try:
        if len(blob) < 46 or blob[:4] != _MAGIC:
            return None
        if int.from_bytes(blob[4:6], "little") != _VERSION:
            return None
        payload, digest = blob[:-32], blob[-32:]
        if hashlib.sha256(payload).digest() != digest:
            return None
        hlen = int.from_bytes(blob[6:14], "little")
        header = json.loads(blob[14:14 + hlen].decode())
        if header["automaton"] != aut.content_hash or header["n"] != n:
            return None
        order, leaves = header["order"], header["leaves"]
        dt = np.dtype(header["dtype"])
        off = 14 + hlen
        nbytes = order * leaves * dt.itemsize
        elems = np.frombuffer(payload[off:off + nbytes], dtype=dt)
        elems = elems.reshape(order, leaves).copy()
        off += nbytes
        parent = np.frombuffer(payload[off:off + 8 * order], np.int64).copy()
        off += 8 * order
        gen_idx = np.frombuffer(payload[off:off + 2 * order], np.int16).copy()
        off += 2 * order
        if off != len(payload):
            return None
        elems.setflags(write=False)
        return LevelQuotient(aut, n, tuple(header["gen_labels"]),
                             tuple(header["gen_codes"]),
                             elems, parent, gen_idx)
    except (ValueError, KeyError, TypeError):
        return None


# -- measures and sampling ---------------------------------------------------

def cone_measure(aut, n, budgets: Budgets = DEFAULT) -> Fraction:
    """Haar measure of one level-n cone set C_a (the same for every a)."""
    q = level_quotient(aut, n, budgets)
    return Fraction(1, q.order)


def uniform_sample(aut, n, count, seed, budgets: Budgets = DEFAULT):
    """Haar-uniform sample of level-n classes; (indices, witness elements)."""
    q = level_quotient(aut, n, budgets)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, q.order, size=count)
    return idx, [q.witness(int(i)) for i in idx]


# -- splitting a level-(n+m) table ------------------------------------------

def top_tables(q: LevelQuotient, n):
    """Level-n tables of all elements of a level-(n+m) quotient."""
    m = q.n - n
    step = q.automaton.d ** m
    return (q.elements[:, ::step] // step).astype(leaf_dtype(q.automaton.d ** n))


def section_tables(q: LevelQuotient, v):
    """Level-m section tables at the level-n vertex v, for m = q.n - len(v)."""
    n = len(v)
    m = q.n - n
    step = q.automaton.d ** m
    rv = rank(q.automaton.d, v)
    block = q.elements[:, rv * step:(rv + 1) * step]
    return (block % step).astype(leaf_dtype(step))


def stabilizer_section_subgroup(aut, n, m, v, budgets: Budgets = DEFAULT):
    """Image in the level-m quotient of level-n stabilizer sections at v.

    Returns (sorted index tuple into the level-m quotient, that quotient).
    The image is a subgroup: sections at a fixed vertex restrict to a
    homomorphism on the stabilizer.
    """
    if len(v) != n:
        raise ValueError("vertex must have length n")
    qm = level_quotient(aut, m, budgets)
    qnm = level_quotient(aut, n + m, budgets)
    tops = top_tables(qnm, n)
    ar = np.arange(aut.d ** n, dtype=tops.dtype)
    stab = np.nonzero((tops == ar).all(axis=1))[0]
    secs = section_tables(qnm, v)[stab]
    ids = {qm.index_of(row) for row in secs}
    if None in ids:
        raise AssertionError("section escaped the level quotient")
    return tuple(sorted(ids)), qm


# -- subindependence ---------------------------------------------------------

@dataclass(frozen=True)
class SubindependenceReport:
    automaton_names: tuple
    n: int
    m: int
    order_n: int
    order_m: int
    order_nm: int
    triples_checked: int
    nonempty_triples: int
    violations: tuple
    row_sums_ok: bool
    note: str = ""

    @property
    def holds(self):
        return not self.violations


def subindependence_check(aut, n, m, budgets: Budgets = DEFAULT) -> SubindependenceReport:
    """Exact check of the cone pair-correlation lower bound.

    For every level-n vertex v and classes a, b: the measure of
    {g : g acts as a on level n and g's section at v acts as b on level m}
    is at least mu(C_a) * mu(C_b) whenever the set is nonempty. All
    comparisons cross-multiplied in integers; empty triples are skipped.
    Also verifies the row-sum identity: summing over b recovers mu(C_a).
    """
    qn = level_quotient(aut, n, budgets)
    qm = level_quotient(aut, m, budgets)
    qnm = level_quotient(aut, n + m, budgets)
    N, Mo, NM = qn.order, qm.order, qnm.order

    tops = top_tables(qnm, n)
    top_ids = np.fromiter((qn.index_of(r) for r in tops), dtype=np.int64,
                          count=NM)
    d = aut.d
    violations = []
    row_sums_ok = True
    checked = 0
    nonempty = 0
    for rv in range(d ** n):
        v = tuple((rv // d ** k) % d for k in range(n - 1, -1, -1))
        secs = section_tables(qnm, v)
        sec_ids = np.fromiter((qm.index_of(r) for r in secs), dtype=np.int64,
                              count=NM)
        counts = np.bincount(top_ids * Mo + sec_ids,
                             minlength=N * Mo).reshape(N, Mo)
        if not (counts.sum(axis=1) == NM // N).all():
            row_sums_ok = False
        checked += N * Mo
        nz = np.nonzero(counts)
        nonempty += len(nz[0])
        # count/NM >= (1/N)(1/Mo)  <=>  count*N*Mo >= NM
        bad = counts[nz] * (N * Mo) < NM
        for a, b in zip(nz[0][bad], nz[1][bad]):
            violations.append({
                "vertex": v,
                "top": str(qn.witness(int(a))),
                "section": str(qm.witness(int(b))),
                "count": int(counts[a, b]),
                "lhs": "%d/%d" % (counts[a, b], NM),
                "rhs": "1/%d" % (N * Mo),
            })
    note = ""
    if N == 1 and Mo == 1:
        note = ("trivial quotients: every cone is the whole group and the "
                "bound holds with equality")
    return SubindependenceReport(
        tuple(aut.names), n, m, N, Mo, NM, checked, nonempty,
        tuple(violations), row_sums_ok, note)
