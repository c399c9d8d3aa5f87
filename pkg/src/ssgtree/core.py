"""Exact arithmetic for finite-state automorphisms of the d-ary rooted tree.

Conventions, fixed globally and relied on by every other module:

* Composition order: (gh)(v) = g(h(v)). Products act right-to-left, like
  function composition. Consequently sections multiply as
  (gh)|_v = g|_{h(v)} * h|_v, and image tables compose as T_gh = T_g[T_h].
* Inverse states are virtual: a^-1 has permutation perm_a^-1 and sections
  a^-1|_x = (a|_{perm_a^-1(x)})^-1. They are computed on demand and never
  stored in the Automaton.
* Leaf ranking (big-endian): a leaf word x1..xn has rank sum(x_k * d^(n-k)).
  The first letter is the most significant digit. Golden files, caches and
  every permutation table in the package depend on this choice.

Elements are freely reduced words over state letters and their inverses,
encoded as tuples of integer letter codes: state i positively is code 2i,
its inverse is 2i+1, so code ^ 1 is the inverse letter.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .budgets import DEFAULT, Budgets
from .errors import BudgetExceeded, LetterOutOfRange, MismatchedAutomata

IDENTITY_NAME = "1"


def leaf_dtype(size):
    """Smallest unsigned dtype indexing a table of the given size."""
    if size <= 1 << 8:
        return np.uint8
    if size <= 1 << 16:
        return np.uint16
    if size <= 1 << 32:
        return np.uint32
    return np.uint64


def free_reduce(codes):
    """Stack-reduce a letter-code sequence, cancelling adjacent c, c^1 pairs."""
    out = []
    for c in codes:
        if out and out[-1] == c ^ 1:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class Automaton:
    """A wreath recursion: named states with alphabet permutations and sections.

    ``perms[i][x]`` is the image of letter x under state i; ``sections[i][x]``
    is the state index of state i's section at x, or -1 for the implicit
    identity state. The identity state is never declared.
    """

    d: int
    names: tuple[str, ...]
    perms: tuple[tuple[int, ...], ...]
    sections: tuple[tuple[int, ...], ...]
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"alphabet size must be >= 2, got {self.d}")
        if len(self.names) != len(set(self.names)):
            raise ValueError("duplicate state names")
        for nm in self.names:
            if nm == IDENTITY_NAME:
                raise ValueError("state name '1' is reserved for the identity")
        if not (len(self.names) == len(self.perms) == len(self.sections)):
            raise ValueError("names/perms/sections length mismatch")
        for i, p in enumerate(self.perms):
            if sorted(p) != list(range(self.d)):
                raise ValueError(f"state {self.names[i]}: not a permutation of 0..{self.d - 1}")
        for i, row in enumerate(self.sections):
            if len(row) != self.d:
                raise ValueError(f"state {self.names[i]}: expected {self.d} sections")
            for s in row:
                if not (-1 <= s < len(self.names)):
                    raise ValueError(f"state {self.names[i]}: bad section index {s}")

    @classmethod
    def build(cls, d, states):
        """states: iterable of (name, perm_images, section_names)."""
        names = tuple(nm for nm, _, _ in states)
        index = {nm: i for i, nm in enumerate(names)}
        perms = []
        sections = []
        for nm, perm, secs in states:
            perms.append(tuple(perm))
            row = []
            for s in secs:
                if s == IDENTITY_NAME:
                    row.append(-1)
                elif s in index:
                    row.append(index[s])
                else:
                    raise ValueError(f"state {nm}: unknown section state {s!r}")
            sections.append(tuple(row))
        return cls(d, names, tuple(perms), tuple(sections))

    @cached_property
    def state_count(self):
        return len(self.names)

    @cached_property
    def index(self):
        return {nm: i for i, nm in enumerate(self.names)}

    @cached_property
    def inv_perms(self):
        out = []
        for p in self.perms:
            q = [0] * self.d
            for x, y in enumerate(p):
                q[y] = x
            out.append(tuple(q))
        return tuple(out)

    @cached_property
    def content_hash(self):
        h = hashlib.sha256()
        h.update(f"ssg:d={self.d}".encode())
        for nm, p, s in zip(self.names, self.perms, self.sections):
            h.update(f";{nm}:{p}:{s}".encode())
        return h.hexdigest()

    def same_as(self, other):
        return self is other or self.content_hash == other.content_hash

    def __hash__(self):
        return hash((self.d, self.names, self.perms, self.sections))

    def __eq__(self, other):
        if not isinstance(other, Automaton):
            return NotImplemented
        return (self.d, self.names, self.perms, self.sections) == (
            other.d, other.names, other.perms, other.sections)

    # -- elements ----------------------------------------------------------

    def identity(self):
        return Element(self, ())

    def generator(self, name, sign=1):
        i = self.index.get(name)
        if i is None:
            raise ValueError(f"unknown state {name!r}")
        return Element(self, (2 * i + (0 if sign > 0 else 1),))

    def generators(self):
        return [self.generator(nm) for nm in self.names]

    def element_from_codes(self, codes):
        return Element(self, free_reduce(codes))

    # -- level image tables ------------------------------------------------

    def level_tables(self, n, budgets: Budgets = DEFAULT):
        """Image tables of all signed states at level n.

        Returns an array of shape (2S+1, d^n); row 2i is state i, row 2i+1
        its inverse, the last row the identity. Cached per level; rows are
        read-only views.
        """
        size = self.d ** n
        if size > budgets.table_leaves:
            raise BudgetExceeded("table", budgets.table_leaves, size,
                                 f"d^{n} leaves")
        tab = self._tables.get(n)
        if tab is None:
            tab = self._build_tables(n)
            tab.setflags(write=False)
            self._tables[n] = tab
        return tab

    def _build_tables(self, n):
        d, S = self.d, self.state_count
        dt = leaf_dtype(d ** n)
        cur = np.zeros((2 * S + 1, 1), dtype=dt)
        for k in range(1, n + 1):
            blk = d ** (k - 1)
            nxt = np.empty((2 * S + 1, d * blk), dtype=dt)
            for i in range(S):
                parts = []
                for x in range(d):
                    s = self.sections[i][x]
                    row = cur[2 * S] if s < 0 else cur[2 * s]
                    parts.append(self.perms[i][x] * blk + row)
                nxt[2 * i] = np.concatenate(parts)
                nxt[2 * i + 1][nxt[2 * i]] = np.arange(d * blk, dtype=dt)
            nxt[2 * S] = np.arange(d * blk, dtype=dt)
            cur = nxt
        return cur

    def code_table(self, code, n, budgets: Budgets = DEFAULT):
        return self.level_tables(n, budgets)[code]


@dataclass(frozen=True, eq=False)
class Element:
    """A freely reduced word over automaton states and their inverses."""

    automaton: Automaton
    word: tuple[int, ...]

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return self.word == other.word and self.automaton.same_as(other.automaton)

    def __hash__(self):
        return hash(self.word)

    def __mul__(self, other):
        return multiply(self, other)

    def __invert__(self):
        return invert(self)

    def __pow__(self, k):
        if k == 0:
            return self.automaton.identity()
        base = self if k > 0 else invert(self)
        out = base
        for _ in range(abs(k) - 1):
            out = multiply(out, base)
        return out

    @property
    def is_identity_word(self):
        return not self.word

    def __len__(self):
        return len(self.word)

    def __str__(self):
        if not self.word:
            return IDENTITY_NAME
        parts = []
        for c in self.word:
            nm = self.automaton.names[c >> 1]
            parts.append(nm if not c & 1 else nm + "^-1")
        return "*".join(parts)

    def __repr__(self):
        return f"<Element {self}>"


def _check_same(g, h):
    if not g.automaton.same_as(h.automaton):
        raise MismatchedAutomata("elements over different automata")


def multiply(g: Element, h: Element) -> Element:
    """Product gh under the convention (gh)(v) = g(h(v))."""
    _check_same(g, h)
    return Element(g.automaton, free_reduce(g.word + h.word))


def invert(g: Element) -> Element:
    return Element(g.automaton, tuple(c ^ 1 for c in reversed(g.word)))


def _step_letter(aut, code, x):
    """Image of letter x under one signed state, plus its section code (or None)."""
    i = code >> 1
    if not code & 1:
        s = aut.sections[i][x]
        return aut.perms[i][x], (None if s < 0 else 2 * s)
    y = aut.inv_perms[i][x]
    s = aut.sections[i][y]
    return y, (None if s < 0 else 2 * s + 1)


def _act_word(aut, codes, x):
    """Image of letter x under a word, and the (reduced) section word at x."""
    y = x
    rev = []
    for c in reversed(codes):
        y, s = _step_letter(aut, c, y)
        if s is not None:
            rev.append(s)
    return y, free_reduce(reversed(rev))


def check_vertex(aut, v):
    for x in v:
        if not (0 <= x < aut.d):
            raise LetterOutOfRange(f"letter {x} outside alphabet of size {aut.d}")


def apply(g: Element, v) -> tuple:
    """Image vertex g(v); same level, prefix-compatible."""
    aut = g.automaton
    v = tuple(v)
    check_vertex(aut, v)
    codes = g.word
    out = []
    for x in v:
        y, codes = _act_word(aut, codes, x)
        out.append(y)
    return tuple(out)


def section(g: Element, v) -> Element:
    """The section g|_v with g(vw) = g(v) * (g|_v)(w)."""
    aut = g.automaton
    v = tuple(v)
    check_vertex(aut, v)
    codes = g.word
    for x in v:
        _, codes = _act_word(aut, codes, x)
    return Element(aut, codes)


def level_perm(g: Element, n, budgets: Budgets = DEFAULT) -> np.ndarray:
    """Image table of g on the d^n leaves, indexed by big-endian rank."""
    aut = g.automaton
    tabs = aut.level_tables(n, budgets)
    acc = np.arange(aut.d ** n, dtype=tabs.dtype)
    for c in g.word:
        acc = acc[tabs[c]]
    return acc


def rank(d, v):
    r = 0
    for x in v:
        r = r * d + x
    return r


def unrank(d, r, n):
    out = []
    for k in range(n - 1, -1, -1):
        out.append((r // d ** k) % d)
    return tuple(out)


def format_vertex(v):
    return "".join(str(x) for x in v) if v else "(root)"


def parse_vertex(text, d):
    """Vertex from a digit string, or dot-separated letters for d > 10."""
    text = text.strip()
    if text in ("", "(root)"):
        return ()
    parts = text.split(".") if "." in text else list(text)
    try:
        v = tuple(int(p) for p in parts)
    except ValueError:
        raise LetterOutOfRange(f"bad vertex {text!r}")
    for x in v:
        if not (0 <= x < d):
            raise LetterOutOfRange(f"letter {x} outside alphabet of size {d}")
    return v
