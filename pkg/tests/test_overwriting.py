"""Overwriting chain and its two enrichments (staircase tableaux, shift
matrices), the lumping tower between them, and the last-site marginals."""

import random
from fractions import Fraction
from itertools import product

import pytest

from jugglemc.chain import (
    LumpingMap,
    build_matrix,
    stationary_exact,
    total_variation,
    verify_lumping,
)
from jugglemc.combinatorics import ParamSet, Word, enumerate_alphabet_words
from jugglemc.errors import NotNormalized
from jugglemc.overwriting import (
    MatrixState,
    Tableau,
    apply_overwrite,
    build_matrix_chain,
    build_tableau_chain,
    build_word_chain,
    enumerate_matrix_states,
    enumerate_tableaux,
    joint_last_two_marginal,
    last_site_marginal,
    lump_matrix,
    lump_tableau,
    matrix_stationary_weight,
    matrix_step,
    overwrite_prob,
    overwrite_sequences,
    overwriting_stationary,
    overwriting_stationary_distribution,
    tableau_stationary,
    tableau_step_prob,
    tableau_successors,
)

F = Fraction


def random_normalized_params(rng: random.Random, n: int) -> ParamSet:
    raw = [F(rng.randint(1, 9)) for _ in range(n + 1)]
    total = sum(raw)
    return ParamSet(tuple(x / total for x in raw))


def test_overwrite_sequences_blocked_sites():
    # sites holding a 1 can never be overwritten, so only the virtual top
    # site accepts a new letter
    seqs = overwrite_sequences(Word((1, 1), 3))
    assert seqs == [((3, 1),), ((3, 2),), ((3, 3),)]


def test_overwrite_sequences_general_count():
    # brute-force the defining constraints
    w = Word((2, 3, 1), 3)
    n, T = w.n, w.T

    def valid(B):
        if not B or B[-1][0] != n + 1:
            return False
        bs = [b for b, _ in B]
        ts = [t for _, t in B]
        if any(not 2 <= b <= n + 1 for b in bs):
            return False
        if sorted(set(bs)) != bs or sorted(set(ts)) != ts:
            return False
        if any(t > T for t in ts):
            return False
        for b, t in B[:-1]:
            if t >= w.letter(b):
                return False
        return True

    brute = set()
    for k in range(1, n + 2):
        for bs in product(range(2, n + 2), repeat=k):
            for ts in product(range(1, T + 1), repeat=k):
                B = tuple(zip(bs, ts))
                if valid(B):
                    brute.add(B)
    assert set(overwrite_sequences(w)) == brute


def test_worked_transition():
    w = Word((3, 1, 4, 6, 2, 5, 3), 6)
    B = ((3, 2), (6, 4), (8, 6))
    assert B in set(overwrite_sequences(w))
    w2 = apply_overwrite(w, B)
    assert w2.letters == (1, 2, 6, 2, 4, 3, 6)
    rng = random.Random(50)
    for _ in range(3):
        p = random_normalized_params(rng, 7)
        y = p.y_at
        z = p.z_at
        want = (1 - y(6)) * z(5) * (1 - y(3)) * z(2) * (1 - y(1))
        assert overwrite_prob(w, B, p) == want


def test_overwrite_prob_requires_normalized():
    w = Word((1, 2), 2)
    with pytest.raises(NotNormalized):
        overwrite_prob(w, ((3, 1),), ParamSet((F(1), F(1), F(1))))


def test_word_chain_rows():
    rng = random.Random(51)
    p = random_normalized_params(rng, 2)
    P = build_word_chain(2, 3, p)
    assert [str(w) for w in P.states] == [
        "11", "21", "31", "12", "22", "32", "13", "23", "33",
    ]
    rows = {str(w): P.rows[i] for i, w in enumerate(P.states)}
    for w in P.states:
        assert rows[str(w)] == rows["1" + str(w)[1:]]


def test_tableau_validation():
    Tableau(((1, 2), (2,)), 3)
    with pytest.raises(ValueError):
        Tableau(((2, 1), (0,)), 3)  # column must increase upward
    with pytest.raises(ValueError):
        Tableau(((2, 0), (1,)), 3)  # row must increase to the right
    with pytest.raises(ValueError):
        Tableau(((3, 0), (0,)), 3)  # entries live in 1..T-1
    with pytest.raises(ValueError):
        Tableau(((0, 0),), 3)  # wrong column count for its height


def test_tableau_cell_and_str():
    V = Tableau(((1, 2), (2,)), 3)
    assert V.cell(1, 1) == 1 and V.cell(1, 2) == 2 and V.cell(2, 1) == 2
    assert str(V) == "2/12"
    assert str(Tableau(((0, 0), (0,)), 3)) == "0/00"


def test_enumerate_tableaux_matches_brute_force():
    for n, T in ((1, 2), (2, 2), (2, 3), (3, 2)):
        brute = set()
        shapes = [n + 1 - k for k in range(1, n + 1)]
        cells = sum(shapes)
        for fill in product(range(T), repeat=cells):
            cols, idx = [], 0
            for length in shapes:
                cols.append(tuple(fill[idx : idx + length]))
                idx += length
            try:
                brute.add(Tableau(tuple(cols), T))
            except ValueError:
                continue
        got = enumerate_tableaux(n, T)
        assert len(got) == len(set(got))
        assert set(got) == brute


def test_tableau_rows_are_stochastic():
    rng = random.Random(52)
    p = random_normalized_params(rng, 2)
    for V in enumerate_tableaux(2, 3):
        succ = tableau_successors(V)
        assert len(succ) == len(set(succ))
        total = sum(tableau_step_prob(V, W, p) for W in succ)
        assert total == 1
        # anything outside the successor list carries no mass
        for W in enumerate_tableaux(2, 3):
            if W not in set(succ):
                assert tableau_step_prob(V, W, p) == 0


def test_tableau_stationary_mass_and_fixed_vector():
    rng = random.Random(53)
    for n, T in ((2, 2), (2, 3), (3, 2)):
        p = random_normalized_params(rng, n)
        tabs = enumerate_tableaux(n, T)
        weights = {V: tableau_stationary(V, p) for V in tabs}
        assert sum(weights.values()) == 1
        Pt = build_tableau_chain(n, T, p)
        pi = stationary_exact(Pt).normalize()
        assert pi.weights == tuple(weights[V] for V in Pt.states)


def test_lump_tableau():
    assert lump_tableau(Tableau(((0, 0), (0,)), 3)) == Word((3, 3), 3)
    assert lump_tableau(Tableau(((1, 2), (2,)), 3)) == Word((1, 2), 3)
    # letters come from the leftmost filled cell at each height
    assert lump_tableau(Tableau(((0, 1), (2,)), 3)) == Word((2, 1), 3)


def test_tableau_lumps_to_word_chain():
    rng = random.Random(54)
    p = random_normalized_params(rng, 2)
    Pt = build_tableau_chain(2, 3, p)
    P = build_word_chain(2, 3, p)
    f = LumpingMap.from_function(lump_tableau, Pt.states, P.states)
    ok, witness = verify_lumping(Pt, f, P)
    assert ok, witness


def test_matrix_state_str_and_step():
    M = MatrixState(((1, 2), (3, 1)))
    assert str(M) == "12/31"
    assert matrix_step(M, (2, 2)) == MatrixState(((2, 1), (2, 3)))
    with pytest.raises(ValueError):
        matrix_step(M, (4, 1))  # entries live in 1..n+1


def test_enumerate_matrix_states():
    states = enumerate_matrix_states(2, 2)
    assert len(states) == 9
    assert len(set(states)) == 9
    assert len(enumerate_matrix_states(2, 3)) == 81
    with pytest.raises(ValueError):
        enumerate_matrix_states(4, 4)  # 5^12 grids blow the cap


def test_matrix_chain_product_stationary():
    rng = random.Random(55)
    p = random_normalized_params(rng, 2)
    P = build_matrix_chain(2, 3, p)
    pi = stationary_exact(P).normalize()
    assert pi.weights == tuple(matrix_stationary_weight(M, p) for M in P.states)


def test_lump_matrix_edges():
    # insertions at depth n+1 always fail, leaving the tableau empty
    M = MatrixState(((3, 3), (3, 3)))
    assert lump_matrix(M) == Tableau(((0, 0), (0,)), 3)
    assert lump_tableau(lump_matrix(M)) == Word((3, 3), 3)


def test_matrix_lumps_to_tableau_chain():
    rng = random.Random(56)
    for n, T in ((2, 2), (2, 3)):
        p = random_normalized_params(rng, n)
        Pm = build_matrix_chain(n, T, p)
        Pt = build_tableau_chain(n, T, p)
        f = LumpingMap.from_function(lump_matrix, Pm.states, Pt.states)
        ok, witness = verify_lumping(Pm, f, Pt)
        assert ok, witness


def test_fiber_weight_identity():
    rng = random.Random(57)
    for n, T in ((2, 2), (2, 3)):
        p = random_normalized_params(rng, n)
        fibers: dict = {}
        for M in enumerate_matrix_states(n, T):
            V = lump_matrix(M)
            fibers[V] = fibers.get(V, F(0)) + matrix_stationary_weight(M, p)
        for V in enumerate_tableaux(n, T):
            assert fibers.get(V, F(0)) == tableau_stationary(V, p)


def test_overwriting_stationary_matches_solver():
    rng = random.Random(58)
    p = random_normalized_params(rng, 2)
    P = build_word_chain(2, 3, p)
    pi = stationary_exact(P).normalize()
    assert pi.weights == tuple(overwriting_stationary(w, p) for w in P.states)
    dist = overwriting_stationary_distribution(2, 3, p)
    assert tuple(dist.states) == tuple(P.states)
    assert dist.weights == pi.weights
    assert dist.total == 1


def test_last_site_marginal_closed_form():
    p = ParamSet((F(1, 2), F(1, 4), F(1, 4)))
    z1 = F(1, 2)
    for j in (1, 2):
        assert last_site_marginal(j, 2, 3, p) == z1 * (1 - z1) ** (j - 1)
    assert last_site_marginal(3, 2, 3, p) == (1 - z1) ** 2
    assert sum(last_site_marginal(j, 2, 3, p) for j in (1, 2, 3)) == 1


def test_marginals_match_exact_stationary():
    rng = random.Random(59)
    for n, T in ((2, 2), (2, 3), (3, 2)):
        p = random_normalized_params(rng, n)
        pi = overwriting_stationary_distribution(n, T, p).as_dict()
        for j in range(1, T + 1):
            want = sum(m for w, m in pi.items() if w.letter(n) == j)
            assert last_site_marginal(j, n, T, p) == want
        for i in range(1, T + 1):
            for j in range(1, T + 1):
                want = sum(
                    m
                    for w, m in pi.items()
                    if w.letter(n - 1) == i and w.letter(n) == j
                )
                assert joint_last_two_marginal(i, j, n, T, p) == want


def test_joint_marginal_row_sums():
    rng = random.Random(60)
    p = random_normalized_params(rng, 3)
    for j in range(1, 4):
        total = sum(joint_last_two_marginal(i, j, 3, 3, p) for i in range(1, 4))
        assert total == last_site_marginal(j, 3, 3, p)


def test_ultrafast_horizon_small():
    # one fresh column per step forgets the whole grid after n steps
    rng = random.Random(61)
    p = random_normalized_params(rng, 2)
    P = build_matrix_chain(2, 2, p)
    from jugglemc.chain import nilpotency_check, ultrafast_check

    ok, common = ultrafast_check(P, 2)
    assert ok
    assert common.weights == tuple(matrix_stationary_weight(M, p) for M in P.states)
    assert nilpotency_check(P, 2)
