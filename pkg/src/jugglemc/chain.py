"""Generic finite-Markov-chain machinery.

Matrices are stored sparsely (one dict per row, successor index -> probability)
with a fixed state order, so model matrices are reproducible entry for entry.
The exact stationary solver runs Gaussian elimination over rationals on the
balance equations of P transposed, with the normalization row appended; it
refuses chains whose nonzero pattern is not strongly connected. Internally the
elimination works on gmpy2 rationals when available, Fractions otherwise; the
returned distribution always holds Fractions.
"""

from __future__ import annotations

import random
from bisect import bisect_left
from collections import deque
from fractions import Fraction
from math import gcd
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .combinatorics import FLOAT_TOL, is_exact
from .errors import ReducibleChain, RowSumError, UnknownSuccessor

try:
    from gmpy2 import mpq as _mpq
except ImportError:  # pragma: no cover
    _mpq = None


class ChainMatrix:
    """An enumerated finite Markov chain with a row-stochastic matrix."""

    def __init__(self, states: Sequence, rows: Sequence[Mapping[int, object]]):
        self.states = tuple(states)
        if len(rows) != len(self.states):
            raise ValueError("one row per state required")
        self.index = {s: i for i, s in enumerate(self.states)}
        if len(self.index) != len(self.states):
            raise ValueError("duplicate states")
        clean = []
        exact = True
        for i, row in enumerate(rows):
            r = {}
            total = 0
            for j, v in row.items():
                if not 0 <= j < len(self.states):
                    raise UnknownSuccessor(f"row {i}: successor index {j}")
                if isinstance(v, float):
                    exact = False
                if v < 0:
                    raise RowSumError(f"row {i}: negative probability {v}")
                if v != 0:
                    r[j] = v
                    total = total + v
            if is_exact(total):
                ok = total == 1
            else:
                ok = abs(total - 1) <= FLOAT_TOL
            if not ok:
                raise RowSumError(f"row {i} ({self.states[i]}) sums to {total}")
            clean.append(r)
        self.rows = tuple(clean)
        self.exact = exact

    @property
    def size(self) -> int:
        return len(self.states)

    def entry(self, i: int, j: int):
        return self.rows[i].get(j, 0)

    def dense(self) -> list[list]:
        n = self.size
        return [[self.rows[i].get(j, 0) for j in range(n)] for i in range(n)]

    def __eq__(self, other):
        if not isinstance(other, ChainMatrix):
            return NotImplemented
        return self.states == other.states and all(
            a == b for a, b in zip(self.rows, other.rows)
        )

    def __repr__(self):
        return f"ChainMatrix({self.size} states)"


class Distribution:
    """Weights aligned with a chain's state order."""

    def __init__(self, states: Sequence, weights: Sequence):
        self.states = tuple(states)
        self.weights = tuple(weights)
        if len(self.states) != len(self.weights):
            raise ValueError("one weight per state required")

    @property
    def total(self):
        return sum(self.weights)

    def normalize(self) -> "Distribution":
        t = self.total
        if t == 0:
            raise ValueError("cannot normalize a zero distribution")
        if isinstance(t, float):
            return Distribution(self.states, tuple(w / t for w in self.weights))
        # integer weights must not fall into float division
        t = Fraction(t)
        return Distribution(self.states, tuple(Fraction(w) / t for w in self.weights))

    def as_dict(self) -> dict:
        return dict(zip(self.states, self.weights))

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.states == other.states and self.weights == other.weights

    def __repr__(self):
        return f"Distribution({len(self.states)} states, total={self.total})"


class LumpingMap:
    """A total map from enriched state keys to base state keys."""

    def __init__(self, mapping: Mapping, base_states: Sequence):
        self.mapping = dict(mapping)
        self.base_states = tuple(base_states)
        missing = set(self.base_states) - set(self.mapping.values())
        if missing:
            raise ValueError(f"lumping map not surjective; misses {missing}")

    @classmethod
    def from_function(cls, fn: Callable, states: Iterable, base_states: Sequence):
        return cls({s: fn(s) for s in states}, base_states)

    def __call__(self, state):
        return self.mapping[state]


def build_matrix(states: Sequence, transition_fn: Callable) -> ChainMatrix:
    """Assemble a ChainMatrix from a per-state sparse transition function.

    transition_fn(state) must return a mapping successor-state -> probability;
    successors outside `states` raise UnknownSuccessor, bad row sums RowSumError.
    """
    index = {s: i for i, s in enumerate(states)}
    rows = []
    for s in states:
        row = {}
        for succ, v in transition_fn(s).items():
            j = index.get(succ)
            if j is None:
                raise UnknownSuccessor(f"transition {s} -> {succ} leaves the state list")
            row[j] = row.get(j, 0) + v
        rows.append(row)
    return ChainMatrix(states, rows)


def _strongly_connected(rows: Sequence[Mapping[int, object]]) -> bool:
    n = len(rows)
    if n == 0:
        return False
    radj: list[list[int]] = [[] for _ in range(n)]
    for i, row in enumerate(rows):
        for j in row:
            radj[j].append(i)

    def reach(adj_of) -> int:
        seen = bytearray(n)
        seen[0] = 1
        queue = deque([0])
        count = 1
        while queue:
            u = queue.popleft()
            for v in adj_of(u):
                if not seen[v]:
                    seen[v] = 1
                    count += 1
                    queue.append(v)
        return count

    return reach(lambda u: rows[u].keys()) == n and reach(lambda u: radj[u]) == n


def is_irreducible(P: ChainMatrix) -> bool:
    """True iff the nonzero pattern is strongly connected."""
    return _strongly_connected(P.rows)


def chain_period(P: ChainMatrix) -> int:
    """gcd of cycle lengths; 1 means aperiodic. Needs an irreducible chain."""
    if not is_irreducible(P):
        raise ReducibleChain("period is defined for irreducible chains only")
    level = [-1] * P.size
    level[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in P.rows[u]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u, row in enumerate(P.rows):
        for v in row:
            g = gcd(g, level[u] + 1 - level[v])
    return g


def _to_internal(x):
    if _mpq is not None:
        f = Fraction(x)
        return _mpq(f.numerator, f.denominator)
    return Fraction(x)


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(int(x.numerator), int(x.denominator))


def _solve_sparse(equations: list[dict], rhs: list, nvars: int):
    """Exact sparse Gaussian elimination; returns the unique solution.

    equations: dicts var -> coefficient. The system may contain one redundant
    equation; it must reduce to 0 = 0. Pivots are chosen to limit fill-in
    (fewest occupied rows for the variable, shortest row as tiebreak).
    """
    col_rows: list[set[int]] = [set() for _ in range(nvars)]
    for r, eq in enumerate(equations):
        for v in eq:
            col_rows[v].add(r)
    used = [False] * len(equations)
    order: list[tuple[int, int]] = []
    for _ in range(nvars):
        pv = -1
        pv_count = 0
        for v in range(nvars):
            live = len(col_rows[v])
            if live and (pv < 0 or live < pv_count):
                pv, pv_count = v, live
        if pv < 0:
            raise ReducibleChain("singular system; no pivot available")
        pr = min(col_rows[pv], key=lambda r: len(equations[r]))
        used[pr] = True
        order.append((pr, pv))
        peq = equations[pr]
        pcoef = peq[pv]
        for r in list(col_rows[pv]):
            if r == pr or used[r]:
                continue
            eq = equations[r]
            factor = eq[pv] / pcoef
            for v, c in peq.items():
                nv = eq.get(v, 0) - factor * c
                if nv == 0:
                    if v in eq:
                        del eq[v]
                        col_rows[v].discard(r)
                else:
                    if v not in eq:
                        col_rows[v].add(r)
                    eq[v] = nv
            rhs[r] = rhs[r] - factor * rhs[pr]
        # the pivot row leaves the working set
        for v in peq:
            col_rows[v].discard(pr)
    for r, eq in enumerate(equations):
        if not used[r] and (eq or rhs[r] != 0):
            raise ReducibleChain("inconsistent balance equations")
    solution = [None] * nvars
    for pr, pv in reversed(order):
        eq = equations[pr]
        acc = rhs[pr]
        for v, c in eq.items():
            if v != pv:
                acc = acc - c * solution[v]
        solution[pv] = acc / eq[pv]
    return solution


def stationary_exact(P: ChainMatrix) -> Distribution:
    """The unique normalized solution of pi P = pi, by exact elimination."""
    if not P.exact:
        raise ValueError("stationary_exact needs exact (rational) probabilities")
    if not _strongly_connected(P.rows):
        raise ReducibleChain(
            "transition pattern is not strongly connected; "
            "stationary distribution would not be unique"
        )
    n = P.size
    one = _to_internal(1)
    zero = one * 0
    # balance equations (columns of P^T - I), then the normalization row
    equations: list[dict] = [{j: -one} for j in range(n)]
    for i, row in enumerate(P.rows):
        for j, v in row.items():
            eq = equations[j]
            eq[i] = eq.get(i, zero) + _to_internal(v)
            if eq[i] == 0:
                del eq[i]
    rhs = [zero] * n
    equations.append({j: one for j in range(n)})
    rhs.append(one)
    sol = _solve_sparse(equations, rhs, n)
    return Distribution(P.states, tuple(_to_fraction(x) for x in sol))


def stationary_power(P: ChainMatrix, tol: float = 1e-13, max_iter: int = 100000) -> Distribution:
    """Float-backend cross-check: power iteration until the step moves < tol."""
    n = P.size
    vec = [1.0 / n] * n
    rows = [{j: float(v) for j, v in row.items()} for row in P.rows]
    for _ in range(max_iter):
        nxt = [0.0] * n
        for i, w in enumerate(vec):
            if w:
                for j, v in rows[i].items():
                    nxt[j] += w * v
        delta = sum(abs(a - b) for a, b in zip(vec, nxt)) / 2
        vec = nxt
        if delta < tol:
            break
    return Distribution(P.states, tuple(vec))


def step_distribution(dist: Distribution, P: ChainMatrix) -> Distribution:
    """One exact step: the row vector dist . P."""
    if dist.states != P.states:
        raise ValueError("distribution not aligned with the chain")
    out = [0] * P.size
    for i, w in enumerate(dist.weights):
        if w != 0:
            for j, v in P.rows[i].items():
                out[j] = out[j] + w * v
    return Distribution(P.states, tuple(out))


def verify_lumping(Pt: ChainMatrix, f: LumpingMap, P: ChainMatrix):
    """Check sum_{y in class b} Pt[x][y] = P[f(x)][b] for all x, b.

    Returns (True, None) or (False, counterexample) where the counterexample
    is (enriched state, base state, class sum, expected entry).
    """
    for s in Pt.states:
        if s not in f.mapping:
            raise ValueError(f"lumping map undefined on {s}")
    if tuple(f.base_states) != P.states:
        raise ValueError("lumping map targets a different base state order")
    base_of = [P.index[f.mapping[s]] for s in Pt.states]
    for x in range(Pt.size):
        sums: dict[int, object] = {}
        for y, v in Pt.rows[x].items():
            b = base_of[y]
            sums[b] = sums.get(b, 0) + v
        brow = P.rows[base_of[x]]
        for b in set(sums) | set(brow):
            got = sums.get(b, 0)
            want = brow.get(b, 0)
            if got != want:
                return False, (Pt.states[x], P.states[b], got, want)
    return True, None


def project_distribution(pi_t: Distribution, f: LumpingMap) -> Distribution:
    """Sum fiber weights: the lumped distribution on f's base states."""
    acc = {b: 0 for b in f.base_states}
    for s, w in zip(pi_t.states, pi_t.weights):
        acc[f.mapping[s]] = acc[f.mapping[s]] + w
    return Distribution(f.base_states, tuple(acc[b] for b in f.base_states))


def _internal_rows(P: ChainMatrix) -> list[dict]:
    # rationals converted once so repeated row products stay cheap
    return [{k: _to_internal(v) for k, v in row.items()} for row in P.rows]


def _row_power(rows: Sequence[Mapping[int, object]], i: int, m: int) -> dict:
    vec = {i: _to_internal(1)}
    for _ in range(m):
        nxt: dict[int, object] = {}
        for j, w in vec.items():
            for k, v in rows[j].items():
                nxt[k] = nxt.get(k, 0) + w * v
        vec = {k: v for k, v in nxt.items() if v != 0}
    return vec


def _frozen(vec: dict) -> tuple:
    return tuple(sorted(vec.items()))


def ultrafast_check(P: ChainMatrix, m: int):
    """True iff all rows of P^m coincide; returns (flag, common row or None)."""
    if not P.exact:
        raise ValueError("ultrafast_check needs exact probabilities")
    rows = _internal_rows(P)
    first = _frozen(_row_power(rows, 0, m))
    for i in range(1, P.size):
        if _frozen(_row_power(rows, i, m)) != first:
            return False, None
    common = dict(first)
    weights = tuple(_to_fraction(common.get(j, 0)) for j in range(P.size))
    return True, Distribution(P.states, weights)


def nilpotency_check(P: ChainMatrix, n: int) -> bool:
    """True iff P^(n+1) = P^n exactly (spectrum contained in {1, 0})."""
    if not P.exact:
        raise ValueError("nilpotency_check needs exact probabilities")
    rows = _internal_rows(P)
    distinct: set[tuple] = set()
    for i in range(P.size):
        distinct.add(_frozen(_row_power(rows, i, n)))
    for row in distinct:
        vec = dict(row)
        nxt: dict[int, object] = {}
        for j, w in vec.items():
            for k, v in rows[j].items():
                nxt[k] = nxt.get(k, 0) + w * v
        nxt = {k: v for k, v in nxt.items() if v != 0}
        if nxt != vec:
            return False
    return True


def total_variation(p: Distribution, q: Distribution):
    """(1/2) sum |p_i - q_i| over a shared state order."""
    if p.states != q.states:
        raise ValueError("distributions not aligned")
    diff = sum(abs(a - b) for a, b in zip(p.weights, q.weights))
    return diff / 2


def _mix64(x: int) -> int:
    """splitmix64 finalizer; derives independent per-replica seeds."""
    mask = (1 << 64) - 1
    x = (x + 0x9E3779B97F4A7C15) & mask
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & mask
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & mask
    return x ^ (x >> 31)


class _RowSampler:
    def __init__(self, P: ChainMatrix):
        self.P = P
        self._tables = {}

    def __call__(self, i: int, rng: random.Random) -> int:
        tab = self._tables.get(i)
        if tab is None:
            items = sorted(self.P.rows[i].items())
            cum = []
            acc = 0.0
            for _, v in items:
                acc += float(v)
                cum.append(acc)
            tab = ([j for j, _ in items], cum)
            self._tables[i] = tab
        succ, cum = tab
        return succ[bisect_left(cum, rng.random() * cum[-1])]


def simulate(
    chain,
    start,
    steps: int,
    seed: int,
    burn_in: Optional[int] = None,
):
    """Run one trajectory; returns (trajectory, empirical Distribution).

    `chain` is a ChainMatrix or a callable sampler(state, rng) -> next state.
    The empirical distribution counts visits from `burn_in` on (default
    steps // 10). Deterministic for a fixed seed.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if burn_in is None:
        burn_in = steps // 10
    rng = random.Random(seed)
    if isinstance(chain, ChainMatrix):
        sampler = _RowSampler(chain)
        pos = chain.index[start]
        path_idx = [pos]
        for _ in range(steps):
            pos = sampler(pos, rng)
            path_idx.append(pos)
        trajectory = [chain.states[i] for i in path_idx]
        counts = [0] * chain.size
        tail = path_idx[burn_in:]
        for i in tail:
            counts[i] += 1
        weights = tuple(Fraction(c, len(tail)) for c in counts)
        return trajectory, Distribution(chain.states, weights)
    trajectory = [start]
    state = start
    for _ in range(steps):
        state = chain(state, rng)
        trajectory.append(state)
    tail = trajectory[burn_in:]
    counts: dict = {}
    seen_order = []
    for s in tail:
        if s not in counts:
            counts[s] = 0
            seen_order.append(s)
        counts[s] += 1
    weights = tuple(Fraction(counts[s], len(tail)) for s in seen_order)
    return trajectory, Distribution(seen_order, weights)


def simulate_replicas(P: ChainMatrix, start, horizon: int, replicas: int, seed: int) -> Distribution:
    """Empirical law of the state at time `horizon` over independent replicas.

    Replica r uses seed mix64(seed + r), so replicas are independent and the
    whole run is reproducible.
    """
    sampler = _RowSampler(P)
    start_idx = P.index[start]
    counts = [0] * P.size
    for r in range(replicas):
        rng = random.Random(_mix64(seed + r))
        pos = start_idx
        for _ in range(horizon):
            pos = sampler(pos, rng)
        counts[pos] += 1
    weights = tuple(Fraction(c, replicas) for c in counts)
    return Distribution(P.states, weights)
