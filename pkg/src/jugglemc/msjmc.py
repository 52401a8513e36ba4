"""The multispecies juggling chain: bumping dynamics, closed-form stationary
law, partition function, and the enriched chain on (word, auxiliary word)
pairs, including exact predecessor reconstruction.

States are words with fixed letter counts. A transition throws the ball at
position 1 and bumps a chain of strictly heavier balls recorded by a bumping
sequence a = (1 = a(1) < ... < a(k) = n+1).
"""

from __future__ import annotations

from itertools import product
from typing import NamedTuple

from .chain import ChainMatrix, build_matrix
from .combinatorics import ParamSet, TypeCounts, Word, enumerate_multiset_words, \
    complete_homogeneous, stat_E, stat_J
from .errors import DegenerateParams, InconsistentState


class EnrichedState(NamedTuple):
    w: Word
    v: tuple[int, ...]

    def __str__(self):
        return f"{self.w}|{''.join(str(x) for x in self.v)}"


def bumping_sequences(w: Word) -> list[tuple[int, ...]]:
    """All bumping sequences for w, lexicographically ordered.

    Entries are positions; letters along the sequence strictly increase, with
    the sentinel w_{n+1} = +infinity closing every sequence.
    """
    n = w.n
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], letter: int):
        for nxt in range(prefix[-1] + 1, n + 2):
            if nxt == n + 1:
                out.append(tuple(prefix) + (n + 1,))
            elif w.letter(nxt) > letter:
                prefix.append(nxt)
                rec(prefix, w.letter(nxt))
                prefix.pop()

    rec([1], w.letter(1) if n else 0)
    return out


def _check_bump(w: Word, a: tuple[int, ...]):
    n = w.n
    if len(a) < 2 or a[0] != 1 or a[-1] != n + 1:
        raise ValueError(f"bumping sequence must run from 1 to {n + 1}: {a}")
    for prev, cur in zip(a, a[1:]):
        if cur <= prev:
            raise ValueError(f"positions must increase: {a}")
        if cur <= n and w.letter(cur) <= w.letter(prev):
            raise ValueError(f"letters must increase along {a}")


def apply_bump(w: Word, a: tuple[int, ...]) -> Word:
    """The word w^a: each bumped position a(l)-1 receives the previous
    ball of the sequence, everything else shifts one slot left."""
    _check_bump(w, a)
    n = w.n
    res: list = [None] * n
    for prev, cur in zip(a, a[1:]):
        res[cur - 2] = w.letter(prev)
    for i in range(1, n + 1):
        if res[i - 1] is None:
            res[i - 1] = w.letter(i + 1)
    return Word(tuple(res), w.T)


def transition_prob(w: Word, a: tuple[int, ...], p: ParamSet):
    """prod_{i=2..k} z_{J(a(i), w_{a(i-1)})} / y_{J(a(i-1), w_{a(i-1)})}."""
    _check_bump(w, a)
    acc = p.z_at(1) ** 0
    for prev, cur in zip(a, a[1:]):
        t = w.letter(prev)
        den = p.y_at(stat_J(w, prev, t))
        if den == 0:
            raise DegenerateParams(
                f"y_{stat_J(w, prev, t)} = 0 in a transition denominator"
            )
        acc = acc * p.z_at(stat_J(w, cur, t)) / den
    return acc


def stationary_weight(w: Word, p: ParamSet):
    """Unnormalized stationary mass: prod_i y_{E_w(i)}."""
    acc = p.z_at(1) ** 0
    for i in range(1, w.n + 1):
        acc = acc * p.y_at(stat_E(w, i))
    return acc


def partition_function(counts: TypeCounts, p: ParamSet):
    """Z = prod_i h_{n_i}(y_1, ..., y_{n - n_1 - ... - n_i + 1})."""
    n = counts.n
    acc = p.z_at(1) ** 0
    prefix = 0
    for ni in counts.counts:
        prefix += ni
        upper = n - prefix + 1
        acc = acc * complete_homogeneous(ni, [p.y_at(j) for j in range(1, upper + 1)])
    return acc


def build_chain(counts: TypeCounts, p: ParamSet) -> ChainMatrix:
    """Transition matrix on all words with the given letter counts."""
    p.require_arity(counts.n)
    states = enumerate_multiset_words(counts)

    def row(w: Word):
        out: dict[Word, object] = {}
        for a in bumping_sequences(w):
            succ = apply_bump(w, a)
            out[succ] = out.get(succ, 0) + transition_prob(w, a, p)
        return out

    return build_matrix(states, row)


def enumerate_enriched(counts: TypeCounts) -> list[EnrichedState]:
    """All (w, v) with 1 <= v_i <= E_w(i), lexicographic on (w, v)."""
    out = []
    for w in enumerate_multiset_words(counts):
        bounds = [stat_E(w, i) for i in range(1, w.n + 1)]
        for v in product(*(range(1, b + 1) for b in bounds)):
            out.append(EnrichedState(w, v))
    return out


def _check_enriched(s: EnrichedState):
    w, v = s
    if len(v) != w.n:
        raise ValueError("auxiliary word length mismatch")
    for i in range(1, w.n + 1):
        if not 1 <= v[i - 1] <= stat_E(w, i):
            raise ValueError(f"v_{i} = {v[i - 1]} outside 1..E_w({i}) = {stat_E(w, i)}")


def enriched_step(s: EnrichedState, a: tuple[int, ...]) -> EnrichedState:
    """Deterministic enriched update: bumped slots restart at E_{w'}, the
    rest of the auxiliary word shifts left with the balls."""
    _check_enriched(s)
    w, v = s
    w2 = apply_bump(w, a)
    n = w.n
    filled = {cur - 1 for cur in a[1:]}
    v2 = []
    for i in range(1, n + 1):
        if i in filled:
            v2.append(stat_E(w2, i))
        else:
            v2.append(v[i])
    return EnrichedState(w2, tuple(v2))


def enriched_stationary_weight(s: EnrichedState, p: ParamSet):
    """Unnormalized enriched mass: prod_i z_{v_i}."""
    acc = p.z_at(1) ** 0
    for x in s.v:
        acc = acc * p.z_at(x)
    return acc


def build_enriched_chain(counts: TypeCounts, p: ParamSet) -> ChainMatrix:
    p.require_arity(counts.n)
    states = enumerate_enriched(counts)

    def row(s: EnrichedState):
        out: dict[EnrichedState, object] = {}
        for a in bumping_sequences(s.w):
            succ = enriched_step(s, a)
            out[succ] = out.get(succ, 0) + transition_prob(s.w, a, p)
        return out

    return build_matrix(states, row)


def reconstruct_predecessor(s_next: EnrichedState):
    """Invert an enriched step: the unique bump positions A and source word w
    such that every predecessor of s_next has this shape.

    Scanning right to left, position j joins A iff the auxiliary entry at
    j-1 was freshly set (v'_{j-1} = E_{w'}(j-1)) and the letters placed by the
    bump keep increasing toward the next element of A. Returns (A, w, free)
    where free lists the positions of w whose auxiliary value is arbitrary.
    """
    _check_enriched(s_next)
    w2, v2 = s_next
    n = w2.n
    rev = [n + 1]
    last_val = w2.letter(n)
    for j in range(n, 1, -1):
        if v2[j - 2] == stat_E(w2, j - 1) and w2.letter(j - 1) < last_val:
            rev.append(j)
            last_val = w2.letter(j - 1)
    rev.append(1)
    A = tuple(reversed(rev))
    src: list = [None] * n
    for l in range(len(A) - 1):
        src[A[l] - 1] = w2.letter(A[l + 1] - 1)
    in_A = set(A)
    for i in range(2, n + 1):
        if i not in in_A:
            src[i - 1] = w2.letter(i - 1)
    w = Word(tuple(src), w2.T)
    free = A[:-1]
    # one forward step must land back on s_next; anything else is a bug
    probe = tuple(1 if i + 1 in in_A else v2[i - 1] for i in range(n))
    try:
        check = enriched_step(EnrichedState(w, probe), A)
    except ValueError as exc:
        raise InconsistentState(
            f"reconstruction of {s_next} fails forward check: {exc}"
        ) from exc
    if check != s_next:
        raise InconsistentState(f"reconstruction of {s_next} fails forward check")
    return A, w, free


def enumerate_predecessors(s_next: EnrichedState) -> list[tuple[EnrichedState, tuple[int, ...]]]:
    """All enriched states mapping to s_next, each with its bump sequence."""
    A, w, free = reconstruct_predecessor(s_next)
    n = w.n
    v2 = s_next.v
    base: list = [None] * n
    filled = {a - 1 for a in A[1:]}
    for i in range(1, n + 1):
        if i not in filled:
            base[i] = v2[i - 1]  # v_{i+1} = v'_i; i = n is always filled
    ranges = [range(1, stat_E(w, pos) + 1) for pos in free]
    out = []
    for combo in product(*ranges):
        v = list(base)
        for pos, val in zip(free, combo):
            v[pos - 1] = val
        out.append((EnrichedState(w, tuple(v)), A))
    return out
