"""Cartan coordinates by pivoting, cross-checked against minor profiles."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from building_ramsey.errors import InputError
from building_ramsey.padic import (
    cartan_coordinates,
    cartan_from_minors,
    check_star_chain_hypotheses,
    determinant,
    gl_cartan_to_coweight,
    invert,
    is_probable_prime,
    matrix_to_json,
    minors_min_valuations,
    parse_matrix,
    valuation,
    vector_distance_cosets,
)
from building_ramsey.root_system import Coweight, build_root_datum


def frac_matrix(rows):
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def random_invertible(rng: random.Random, n: int, p: int):
    """Random integer matrix with p-power column scaling, retried until nonsingular."""
    while True:
        base = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)]
        for j in range(n):
            power = p ** rng.randint(0, 3)
            for i in range(n):
                base[i][j] *= power
        m = frac_matrix(base)
        if determinant(m) != 0:
            return m


def random_unimodular(rng: random.Random, n: int, p: int):
    """Product of elementary matrices with p-integral entries, det a unit at p."""
    m = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for _ in range(3 * n):
        i, j = rng.randrange(n), rng.randrange(n)
        if i == j:
            continue
        c = Fraction(rng.randint(-4, 4))
        if c.denominator % p == 0:
            continue
        for k in range(n):
            m[i][k] += c * m[j][k]
    return tuple(tuple(row) for row in m)


def mat_mul(a, b):
    n = len(a)
    return tuple(
        tuple(sum((a[i][k] * b[k][j] for k in range(n)), Fraction(0)) for j in range(n))
        for i in range(n)
    )


def test_valuation_basics():
    assert valuation(0, 5) is None
    assert valuation(1, 2) == 0
    assert valuation(8, 2) == 3
    assert valuation(Fraction(3, 4), 2) == -2
    assert valuation(Fraction(9, 5), 3) == 2


def test_is_probable_prime():
    primes = [2, 3, 5, 7, 97, 101, (1 << 61) - 1]
    composites = [0, 1, 4, 91, 561, 1105, 25326001, (1 << 61) - 2]
    assert all(is_probable_prime(p) for p in primes)
    assert not any(is_probable_prime(c) for c in composites)


def test_cartan_goldens():
    m = frac_matrix([[4, 2], [2, 3]])
    assert cartan_coordinates(m, 2) == (3, 0)
    assert cartan_from_minors(m, 2) == (3, 0)
    identity = frac_matrix([[1, 0], [0, 1]])
    assert cartan_coordinates(identity, 7) == (0, 0)
    diag = frac_matrix([[1, 0], [0, 8]])
    assert cartan_coordinates(diag, 2) == (3, 0)
    assert cartan_coordinates(frac_matrix([[Fraction(1, 2), 0], [0, 4]]), 2) == (2, -1)


def test_cartan_of_diagonal_recovers_exponents():
    rng = random.Random(0)
    for p in (2, 3, 5):
        for _ in range(10):
            exponents = sorted((rng.randint(-3, 4) for _ in range(3)), reverse=True)
            m = frac_matrix(
                [
                    [Fraction(p) ** exponents[i] if i == j else 0 for j in range(3)]
                    for i in range(3)
                ]
            )
            assert cartan_coordinates(m, p) == tuple(exponents)


def test_cartan_sums_to_det_valuation_and_matches_minors():
    rng = random.Random(7)
    for _ in range(40):
        n = rng.randint(1, 4)
        p = rng.choice([2, 3, 5])
        m = random_invertible(rng, n, p)
        coords = cartan_coordinates(m, p)
        assert coords == cartan_from_minors(m, p)
        assert sum(coords) == valuation(determinant(m), p)
        assert all(coords[i] >= coords[i + 1] for i in range(n - 1))


def test_cartan_inverse_negates_and_reverses():
    rng = random.Random(11)
    for _ in range(20):
        n = rng.randint(1, 4)
        p = rng.choice([2, 3])
        m = random_invertible(rng, n, p)
        coords = cartan_coordinates(m, p)
        inv_coords = cartan_coordinates(invert(m), p)
        assert inv_coords == tuple(-c for c in reversed(coords))


def test_cartan_unimodular_invariance():
    rng = random.Random(13)
    for _ in range(20):
        n = rng.randint(2, 4)
        p = rng.choice([2, 3, 5])
        m = random_invertible(rng, n, p)
        u = random_unimodular(rng, n, p)
        v = random_unimodular(rng, n, p)
        assert cartan_coordinates(mat_mul(mat_mul(u, m), v), p) == cartan_coordinates(m, p)


def test_minors_min_valuations_diagonal():
    m = frac_matrix([[1, 0], [0, 8]])
    assert minors_min_valuations(m, 2) == (0, 3)


def test_vector_distance_cosets():
    g = frac_matrix([[1, 0], [0, 1]])
    h = frac_matrix([[4, 2], [2, 3]])
    assert vector_distance_cosets(g, h, 2) == (3, 0)
    assert vector_distance_cosets(h, h, 2) == (0, 0)
    with pytest.raises(InputError, match="equal size"):
        vector_distance_cosets(g, frac_matrix([[1]]), 2)


def test_invert_round_trips():
    rng = random.Random(3)
    for _ in range(10):
        n = rng.randint(1, 4)
        m = random_invertible(rng, n, 2)
        identity = frac_matrix(
            [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        )
        assert mat_mul(m, invert(m)) == identity
    with pytest.raises(InputError, match="singular"):
        invert(frac_matrix([[1, 1], [1, 1]]))


def test_parse_matrix_accepts_fractions_and_wrapper():
    payload = {"matrix": [[1, "1/2"], ["-3", 4]]}
    m = parse_matrix(payload)
    assert m == frac_matrix([[1, Fraction(1, 2)], [-3, 4]])
    assert parse_matrix([[2]]) == frac_matrix([[2]])
    assert matrix_to_json(m) == [["1", "1/2"], ["-3", "4"]]


def test_parse_matrix_errors_name_fields():
    with pytest.raises(InputError, match="missing field 'matrix'"):
        parse_matrix({"rows": [[1]]})
    with pytest.raises(InputError, match="square"):
        parse_matrix([[1, 2], [3]])
    with pytest.raises(InputError, match="not a rational"):
        parse_matrix([["x"]])
    with pytest.raises(InputError, match="int or"):
        parse_matrix([[True]])
    with pytest.raises(InputError, match="nonempty"):
        parse_matrix([])


def test_cartan_validation():
    m = frac_matrix([[1, 0], [0, 1]])
    with pytest.raises(InputError, match="not prime"):
        cartan_coordinates(m, 6)
    with pytest.raises(InputError, match="singular"):
        cartan_coordinates(frac_matrix([[1, 2], [2, 4]]), 2)


def test_gl_cartan_to_coweight():
    a2 = build_root_datum("A2")
    assert gl_cartan_to_coweight(a2, (3, 1, 0)) == Coweight((2, 1))
    with pytest.raises(InputError, match="family A"):
        gl_cartan_to_coweight(build_root_datum("C2"), (1, 0))
    with pytest.raises(InputError, match="expected 3"):
        gl_cartan_to_coweight(a2, (1, 0))


def test_check_star_chain_hypotheses_valid_chain():
    c2 = build_root_datum("C2")
    chain = (Coweight((4, 4)), Coweight((6, 6)))
    check = check_star_chain_hypotheses(c2, chain, floor_scale=2, multiplicities=(1, 2))
    assert check.valid and check.chain_ok and check.floor_ok
    assert check.even_ok == (True, True)
    assert check.halved == (Coweight((2, 2)), Coweight((3, 3)))
    assert check.induced_valid and not check.messages


def test_check_star_chain_hypotheses_diagnostics():
    c2 = build_root_datum("C2")
    odd = check_star_chain_hypotheses(c2, (Coweight((1, 2)),))
    assert not odd.valid and odd.even_ok == (False,)
    assert any("doubled coweight lattice" in m for m in odd.messages)
    floor = check_star_chain_hypotheses(c2, (Coweight((2, 2)),), floor_scale=4)
    assert not floor.valid and not floor.floor_ok
    assert any("strongly dominate 4 rho" in m for m in floor.messages)
    broken = check_star_chain_hypotheses(c2, (Coweight((4, 4)), Coweight((4, 6))))
    assert not broken.valid and not broken.chain_ok
    with pytest.raises(InputError):
        check_star_chain_hypotheses(c2, ())
    with pytest.raises(InputError):
        check_star_chain_hypotheses(c2, (Coweight((2, 2)),), floor_scale=0)


@given(st.integers(1, 3), st.sampled_from([2, 3, 5]), st.integers(0, 2**32))
@settings(max_examples=40)
def test_cartan_pivot_matches_minors_hypothesis(n, p, seed):
    rng = random.Random(seed)
    m = random_invertible(rng, n, p)
    assert cartan_coordinates(m, p) == cartan_from_minors(m, p)
