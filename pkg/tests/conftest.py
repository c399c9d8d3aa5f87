import pytest

from ssgtree.core import Automaton


def odometer():
    return Automaton.build(2, [("a", (1, 0), ("1", "a"))])


def grigorchuk():
    return Automaton.build(2, [
        ("a", (1, 0), ("1", "1")),
        ("b", (0, 1), ("a", "c")),
        ("c", (0, 1), ("a", "d")),
        ("d", (0, 1), ("1", "b")),
    ])


def basilica():
    return Automaton.build(2, [
        ("a", (1, 0), ("b", "1")),
        ("b", (0, 1), ("a", "1")),
    ])


def trivial():
    return Automaton.build(2, [("t", (0, 1), ("1", "1"))])


def finite_ends():
    # s fixes exactly the end 000...; dichotomy violator
    return Automaton.build(2, [
        ("s", (0, 1), ("s", "t")),
        ("t", (1, 0), ("1", "1")),
    ])


def prop4_violator():
    # kneading on d=3 where both condition-(1) candidates fail condition (2)
    return Automaton.build(3, [
        ("a", (1, 0, 2), ("1", "1", "b")),
        ("b", (0, 2, 1), ("a", "1", "1")),
    ])


CORPUS = {
    "odometer": odometer(),
    "grigorchuk": grigorchuk(),
    "basilica": basilica(),
    "trivial": trivial(),
}


@pytest.fixture
def odo():
    return odometer()


@pytest.fixture
def grig():
    return grigorchuk()


@pytest.fixture
def bas():
    return basilica()


def random_word(aut, rng, max_len):
    """Random freely reduced word of length <= max_len (possibly empty).

    rng is a numpy Generator; draws avoid adjacent cancellations only, so
    the word may still represent the identity of the group.
    """
    codes = []
    length = int(rng.integers(0, max_len + 1))
    n = 2 * aut.state_count
    while len(codes) < length:
        c = int(rng.integers(0, n))
        if codes and codes[-1] == c ^ 1:
            continue
        codes.append(c)
    return aut.element_from_codes(codes)


def random_vertex(aut, rng, max_len):
    length = int(rng.integers(0, max_len + 1))
    return tuple(int(rng.integers(0, aut.d)) for _ in range(length))
