"""Text formats: .ssg automaton files and element expressions.

An automaton file declares the alphabet once, then one state per line:

    alphabet 2
    a = (0 1) (1, a)          # cycles, or `e`, or `perm [1 0]`
    b = e (a, c)

Sections are state names or `1` for the identity. `#` starts a comment.
Elements are written over state names with `*`, `^k`, `^-1`, parentheses.
"""
from __future__ import annotations

import re

from .core import Automaton, Element, free_reduce
from .errors import ParseError


def _strip_comment(line):
    i = line.find("#")
    return line if i < 0 else line[:i]


_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")


def _parse_perm(text, d, lineno, col0):
    """A permutation in `e`, cycle, or `perm [..]` notation; image tuple."""
    text = text.strip()
    if text == "e":
        return tuple(range(d))
    if text.startswith("perm"):
        body = text[4:].strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ParseError("perm form needs [i0 i1 ...]", lineno, col0)
        try:
            images = tuple(int(t) for t in body[1:-1].split())
        except ValueError:
            raise ParseError("malformed perm image list", lineno, col0)
        if sorted(images) != list(range(d)):
            raise ParseError("perm image list is not a bijection on 0..%d"
                             % (d - 1), lineno, col0)
        return images
    if not text.startswith("("):
        raise ParseError("malformed permutation %r" % text, lineno, col0)
    images = list(range(d))
    seen = set()
    for mcyc in re.finditer(r"\(([^()]*)\)", text):
        try:
            cyc = [int(t) for t in mcyc.group(1).split()]
        except ValueError:
            raise ParseError("malformed cycle %r" % mcyc.group(0), lineno,
                             col0 + mcyc.start())
        if len(cyc) < 2:
            raise ParseError("cycles need at least two points", lineno,
                             col0 + mcyc.start())
        for x in cyc:
            if not 0 <= x < d:
                raise ParseError("letter %d outside alphabet" % x, lineno,
                                 col0 + mcyc.start())
            if x in seen:
                raise ParseError("letter %d repeated across cycles" % x,
                                 lineno, col0 + mcyc.start())
            seen.add(x)
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            images[a] = b
    rest = re.sub(r"\([^()]*\)", "", text).strip()
    if rest:
        raise ParseError("unexpected text %r in permutation" % rest, lineno,
                         col0)
    return tuple(images)


_STATE_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(.*)$")


def parse_automaton(text) -> Automaton:
    """Parse .ssg text; raises ParseError with line/column on bad input."""
    lines = text.splitlines()
    d = None
    entries = []  # (lineno, name, perm text, section names)
    for lineno, raw in enumerate(lines, start=1):
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        if d is None:
            m = re.match(r"^\s*alphabet\s+(\S+)\s*$", line)
            if not m:
                raise ParseError("expected `alphabet <d>` first", lineno, 1)
            try:
                d = int(m.group(1))
            except ValueError:
                raise ParseError("alphabet size must be an integer", lineno,
                                 line.index(m.group(1)) + 1)
            if d < 2:
                raise ParseError("alphabet size must be at least 2", lineno, 1)
            continue
        m = _STATE_LINE.match(line)
        if not m:
            raise ParseError("expected `<name> = <perm> (<sections>)`",
                             lineno, 1)
        name, rhs = m.group(1), m.group(2)
        if name == "1":
            raise ParseError("`1` names the identity and cannot be declared",
                             lineno, 1)
        open_idx = rhs.rfind("(")
        if open_idx < 0 or not rhs.rstrip().endswith(")"):
            raise ParseError("missing section list `(s0, ..., s%d)`"
                             % (d - 1), lineno, len(line))
        sec_text = rhs.rstrip()[open_idx + 1:-1]
        perm_text = rhs[:open_idx].strip()
        # `e (a, b)` leaves perm_text "e"; cycle forms keep their own parens:
        # rfind picks the LAST open paren, which belongs to the sections only
        # if cycles close before it. Guard: unbalanced perm_text means the
        # sections paren was inside the permutation.
        if perm_text.count("(") != perm_text.count(")"):
            raise ParseError("could not split permutation from sections",
                             lineno, m.start(2) + 1)
        secs = [s.strip() for s in sec_text.split(",")]
        if len(secs) != d or any(not s for s in secs):
            raise ParseError("expected exactly %d comma-separated sections"
                             % d, lineno, m.start(2) + open_idx + 2)
        entries.append((lineno, m.start(2) + 1, name, perm_text, secs))

    if d is None:
        raise ParseError("empty input: expected `alphabet <d>`", 1, 1)
    names = []
    for lineno, col, name, _, _ in entries:
        if name in names:
            raise ParseError("duplicate state %r" % name, lineno, 1)
        names.append(name)

    states = []
    for lineno, col, name, perm_text, secs in entries:
        perm = _parse_perm(perm_text, d, lineno, col)
        for s in secs:
            if s != "1" and s not in names:
                raise ParseError("unknown state %r" % s, lineno, col)
        states.append((name, perm, tuple(secs)))
    return Automaton.build(d, states)


def _cycles_of(perm):
    seen = set()
    out = []
    for x in range(len(perm)):
        if x in seen or perm[x] == x:
            continue
        cyc = [x]
        seen.add(x)
        y = perm[x]
        while y != x:
            cyc.append(y)
            seen.add(y)
            y = perm[y]
        out.append(tuple(cyc))
    return out


def serialize_permutation(perm):
    cycles = _cycles_of(perm)
    if not cycles:
        return "e"
    parts = []
    for cyc in sorted(cycles, key=min):
        k = cyc.index(min(cyc))
        rot = cyc[k:] + cyc[:k]
        parts.append("(" + " ".join(str(x) for x in rot) + ")")
    return "".join(parts)


def serialize_automaton(aut: Automaton) -> str:
    lines = ["alphabet %d" % aut.d]
    for i, name in enumerate(aut.names):
        secs = []
        for s in aut.sections[i]:
            secs.append("1" if s < 0 else aut.names[s])
        lines.append("%s = %s (%s)" % (name,
                                       serialize_permutation(aut.perms[i]),
                                       ", ".join(secs)))
    return "\n".join(lines) + "\n"


_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*|\^|\*|\(|\)|-?\d+)")


def _tokenize_expr(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ParseError("unexpected character %r" % text[pos],
                                 None, pos + 1)
            break
        tokens.append((m.group(1), m.start(1) + 1))
        pos = m.end()
    return tokens


def parse_element(expr, aut: Automaton) -> Element:
    """Element expression over state names; power binds tighter than `*`."""
    tokens = _tokenize_expr(expr)
    k = [0]

    def peek():
        return tokens[k[0]][0] if k[0] < len(tokens) else None

    def take():
        t = tokens[k[0]]
        k[0] += 1
        return t

    def parse_atom():
        t = peek()
        if t == "(":
            take()
            codes = parse_product()
            if peek() != ")":
                col = tokens[k[0] - 1][1] if k[0] <= len(tokens) else 1
                raise ParseError("missing closing parenthesis", None, col)
            take()
            return codes
        if t is None or not (t == "1" or _NAME.match(t)):
            tok, col = tokens[k[0]] if k[0] < len(tokens) else ("end", 1)
            raise ParseError("expected a state name, got %r" % tok, None, col)
        tok, col = take()
        if tok == "1":
            return ()
        i = aut.index.get(tok)
        if i is None:
            raise ParseError("unknown state %r" % tok, None, col)
        return (2 * i,)

    def parse_factor():
        codes = parse_atom()
        while peek() == "^":
            take()
            t = peek()
            if t is None or not re.fullmatch(r"-?\d+", t):
                tok, col = tokens[k[0]] if k[0] < len(tokens) else ("end", 1)
                raise ParseError("expected an integer exponent, got %r" % tok,
                                 None, col)
            e_tok, _ = take()
            e = int(e_tok)
            if e == 0:
                codes = ()
            else:
                base = codes if e > 0 else tuple(c ^ 1 for c in reversed(codes))
                codes = tuple(free_reduce(base * abs(e)))
        return codes

    def parse_product():
        codes = parse_factor()
        while peek() == "*":
            take()
            codes = tuple(free_reduce(codes + parse_factor()))
        return codes

    codes = parse_product()
    if k[0] != len(tokens):
        tok, col = tokens[k[0]]
        raise ParseError("unexpected token %r" % tok, None, col)
    return Element(aut, tuple(free_reduce(codes)))
