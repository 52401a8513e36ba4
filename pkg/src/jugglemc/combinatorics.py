"""Scalars, words and combinatorial primitives shared by all chain models.

Exact arithmetic uses fractions.Fraction (or int); the float backend uses
plain floats with a fixed comparison tolerance. All position arguments follow
the 1-based convention of the transition formulas; the virtual sentinel
w_{n+1} = +infinity is handled by the operations and never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterator, Optional, Sequence

FLOAT_TOL = 1e-12


def is_exact(x) -> bool:
    return not isinstance(x, float)


@dataclass(frozen=True)
class Word:
    """A state of the word-based chains: letters over {1..T}."""

    letters: tuple[int, ...]
    T: int

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("alphabet size must be >= 1")
        for x in self.letters:
            if not 1 <= x <= self.T:
                raise ValueError(f"letter {x} outside 1..{self.T}")

    @property
    def n(self) -> int:
        return len(self.letters)

    def letter(self, i: int) -> int:
        """1-based access."""
        if not 1 <= i <= self.n:
            raise ValueError(f"position {i} outside 1..{self.n}")
        return self.letters[i - 1]

    def drop_first(self) -> tuple[int, ...]:
        return self.letters[1:]

    def __str__(self):
        if self.T <= 9:
            return "".join(str(x) for x in self.letters)
        return ".".join(str(x) for x in self.letters)


@dataclass(frozen=True)
class TypeCounts:
    """Ball counts (n_1, ..., n_T), all positive."""

    counts: tuple[int, ...]

    def __post_init__(self):
        if not self.counts or any(c < 1 for c in self.counts):
            raise ValueError("counts must be a nonempty tuple of positive ints")

    @property
    def T(self) -> int:
        return len(self.counts)

    @property
    def n(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class ParamSet:
    """Throw weights z_1..z_m with prefix sums y, plus optional activities c.

    The chain on n balls needs exactly m = n+1 weights (the deepest reachable
    index is n+1); constructors of model matrices enforce that arity.
    """

    z: tuple
    c: Optional[tuple] = None
    y: tuple = field(init=False, compare=False)
    normalized: bool = field(init=False, compare=False)

    def __post_init__(self):
        z = tuple(self.z)
        if not z:
            raise ValueError("z must be nonempty")
        if any(x < 0 for x in z):
            raise ValueError("throw weights must be nonnegative")
        object.__setattr__(self, "z", z)
        ys = []
        acc = z[0] * 0
        for x in z:
            acc = acc + x
            ys.append(acc)
        object.__setattr__(self, "y", tuple(ys))
        total = ys[-1]
        if is_exact(total):
            norm = total == 1
        else:
            norm = abs(total - 1) <= FLOAT_TOL
        object.__setattr__(self, "normalized", norm)
        if self.c is not None:
            c = tuple(self.c)
            if any(x <= 0 for x in c):
                raise ValueError("activities must be strictly positive")
            object.__setattr__(self, "c", c)

    def z_at(self, i: int):
        if not 1 <= i <= len(self.z):
            raise ValueError(f"z index {i} outside 1..{len(self.z)}")
        return self.z[i - 1]

    def y_at(self, i: int):
        # y_0 = 0 by convention
        if i == 0:
            return self.z[0] * 0
        if not 1 <= i <= len(self.y):
            raise ValueError(f"y index {i} outside 0..{len(self.y)}")
        return self.y[i - 1]

    def c_at(self, t: int):
        if self.c is None:
            raise ValueError("no activities in this parameter set")
        if not 1 <= t <= len(self.c):
            raise ValueError(f"c index {t} outside 1..{len(self.c)}")
        return self.c[t - 1]

    def require_arity(self, n: int) -> "ParamSet":
        if len(self.z) != n + 1:
            raise ValueError(
                f"need exactly {n + 1} throw weights for {n} balls, got {len(self.z)}"
            )
        return self


def enumerate_multiset_words(counts: TypeCounts) -> list[Word]:
    """All words with letter multiplicities `counts`, in lexicographic order."""
    T = counts.T
    remaining = list(counts.counts)
    out: list[Word] = []
    prefix: list[int] = []

    def rec(depth: int):
        if depth == counts.n:
            out.append(Word(tuple(prefix), T))
            return
        for letter in range(1, T + 1):
            if remaining[letter - 1] > 0:
                remaining[letter - 1] -= 1
                prefix.append(letter)
                rec(depth + 1)
                prefix.pop()
                remaining[letter - 1] += 1

    rec(0)
    return out


def enumerate_alphabet_words(n: int, T: int) -> list[Word]:
    """All T^n words of length n, position 1 varying fastest."""
    if n < 1 or T < 1:
        raise ValueError("need n >= 1 and T >= 1")
    return [
        Word(tuple(reversed(tail)), T) for tail in product(range(1, T + 1), repeat=n)
    ]


def stat_J(w: Word, m: int, t: int) -> int:
    """J_w(m, t) = 1 + #{l : m <= l <= n, w_l > t}."""
    n = w.n
    if not 1 <= m <= n + 1:
        raise ValueError(f"m={m} outside 1..{n + 1}")
    if not 1 <= t <= w.T:
        raise ValueError(f"t={t} outside 1..{w.T}")
    return 1 + sum(1 for x in w.letters[m - 1 :] if x > t)


def stat_E(w: Word, i: int) -> int:
    """E_w(i) = J_w(i, w_i): 1 + number of strictly heavier balls above i."""
    return stat_J(w, i, w.letter(i))


def complete_homogeneous(degree: int, values: Sequence):
    """h_degree(values) via the one-variable-at-a-time recurrence."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    values = list(values)
    if not values:
        raise ValueError("values must be nonempty")
    one = values[0] ** 0
    h = [one] + [one * 0] * degree
    for v in values:
        for k in range(1, degree + 1):
            h[k] = h[k] + v * h[k - 1]
    return h[degree]


def falling_factorial(x, k: int):
    """(x)_k = x (x-1) ... (x-k+1); (x)_0 = 1."""
    if k < 0:
        raise ValueError("k must be >= 0")
    acc = x ** 0 if not isinstance(x, int) else 1
    for i in range(k):
        acc = acc * (x - i)
    return acc


def rational(text) -> Fraction:
    """Parse 'p/q' or decimal strings to an exact Fraction."""
    return Fraction(text)


def format_scalar(x) -> str:
    """Canonical serialization: 'p/q' for exact values, repr for floats."""
    if isinstance(x, float):
        return repr(x)
    f = Fraction(x)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"
