"""Atom counts, the noise constant, density bounds, and lattice witnesses."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from building_ramsey.building_calc import (
    BuildingStarSpec,
    atom_cardinalities,
    atom_partition_identity,
    conjecture_witness,
    density_bound_rhs,
    kappa,
    sphere_size_thickness_vector,
    validate_building_star_spec,
)
from building_ramsey.errors import InputError
from building_ramsey.root_system import (
    Coweight,
    build_root_datum,
    rho_coweight,
    sphere_size,
)
from building_ramsey.tree_lab import (
    StarSpec,
    TreeBall,
    check_density_bound,
    one_child_filter_set,
)

SMALL_TYPES = ("A1", "A2", "B2", "C2", "G2")


def small_strongly_dominant(rank):
    return st.tuples(*[st.integers(1, 3)] * rank).map(Coweight)


def test_atom_cardinalities_goldens():
    c2 = build_root_datum("C2")
    lam = Coweight((2, 2))
    for q, opposite, atom in ((2, 16, 1024), (3, 81, 59049)):
        counts = atom_cardinalities(c2, q, lam)
        assert counts.opposite_exponent == 4
        assert counts.atom_exponent == 10
        assert counts.opposite == opposite
        assert counts.atom == atom


def test_atom_cardinalities_rank_one_matches_tree():
    """Opposite count q, atom size q^{t-1}, read off an actual tree ball."""
    a1 = build_root_datum("A1")
    for q in (2, 3):
        ball = TreeBall(q=q, depth=6)
        z = ball.sphere(2)[0]
        for t in range(1, 5):
            counts = atom_cardinalities(a1, q, Coweight((t,)))
            assert counts.opposite == len(ball.children(z, 1)) == q
            child = ball.children(z, 1)[0]
            assert counts.atom == len(ball.children(child, t - 1)) == q ** (t - 1)


def test_atom_cardinalities_validation():
    c2 = build_root_datum("C2")
    with pytest.raises(InputError):
        atom_cardinalities(c2, 1, Coweight((1, 1)))
    with pytest.raises(InputError, match="strongly dominant"):
        atom_cardinalities(c2, 2, Coweight((0, 1)))


@pytest.mark.parametrize("label", SMALL_TYPES)
@pytest.mark.parametrize("q", [2, 3])
def test_atom_partition_identity_small_grid(label, q):
    datum = build_root_datum(label)
    rho = rho_coweight(datum.rank)
    for lam in (rho, rho.scale(2)):
        for mu in (rho, rho + rho):
            assert atom_partition_identity(datum, q, lam, mu)


@given(st.sampled_from(SMALL_TYPES), st.integers(2, 5), st.data())
def test_atom_partition_identity_random(label, q, data):
    datum = build_root_datum(label)
    lam = data.draw(small_strongly_dominant(datum.rank))
    mu = data.draw(small_strongly_dominant(datum.rank))
    assert atom_partition_identity(datum, q, lam, mu)


def test_atom_partition_identity_needs_strongly_dominant_mu():
    c2 = build_root_datum("C2")
    with pytest.raises(InputError, match="strongly dominant"):
        atom_partition_identity(c2, 2, Coweight((1, 1)), Coweight((1, 0)))


def test_kappa_goldens():
    assert kappa(build_root_datum("A1"), 2).kappa == Fraction(1, 2)
    assert kappa(build_root_datum("A1"), 2).end_chamber_bound == 1
    assert kappa(build_root_datum("C2"), 2).kappa == Fraction(1, 16)
    assert kappa(build_root_datum("C2"), 2).end_chamber_bound == 1
    assert kappa(build_root_datum("A2"), 3).kappa == Fraction(8, 27)
    assert kappa(build_root_datum("A2"), 3).end_chamber_bound == 8
    with pytest.raises(InputError):
        kappa(build_root_datum("A1"), 1)


def test_density_bound_rhs_c2_golden():
    c2 = build_root_datum("C2")
    value = density_bound_rhs(c2, 2, 4, 1, Coweight((3, 3)))
    assert value == (Fraction(15, 16)) ** 4 + Fraction(1, 2) ** 17
    assert value == Fraction(101251, 131072)


@given(st.integers(2, 5), st.integers(1, 6), st.integers(1, 4), st.integers(1, 8))
def test_density_bound_rhs_rank_one_closed_form(q, ell, r, t11):
    a1 = build_root_datum("A1")
    expected = Fraction(1, q) ** ell + r * Fraction(q) ** (1 - t11)
    assert density_bound_rhs(a1, q, ell, r, Coweight((t11,))) == expected


def test_density_bound_rhs_agrees_with_tree_report():
    ball = TreeBall(q=2, depth=10)
    xs = one_child_filter_set(ball, 10, [2, 3, 5, 6], seed=3)
    chains = [StarSpec(t=(2, 3), r=(1, 1)), StarSpec(t=(5, 6), r=(1, 1))]
    rep = check_density_bound(ball, xs, chains, 10)
    a1 = build_root_datum("A1")
    assert rep.rhs == density_bound_rhs(a1, 2, 2, 1, Coweight((2,)))


def test_density_bound_rhs_monotone_and_limited():
    c2 = build_root_datum("C2")
    lam = Coweight((2, 2))
    correction = Fraction(2) ** (4 - 14)
    previous = None
    for ell in range(1, 30):
        value = density_bound_rhs(c2, 2, ell, 1, lam)
        assert value > correction
        if previous is not None:
            assert value < previous
        previous = value
    assert previous - correction < Fraction(1, 2) ** 2  # (15/16)^29 is tiny


def test_density_bound_rhs_validation():
    c2 = build_root_datum("C2")
    with pytest.raises(InputError):
        density_bound_rhs(c2, 2, 0, 1, Coweight((1, 1)))
    with pytest.raises(InputError):
        density_bound_rhs(c2, 2, 1, 0, Coweight((1, 1)))
    with pytest.raises(InputError, match="strongly dominant"):
        density_bound_rhs(c2, 2, 1, 1, Coweight((1, 0)))


def test_building_star_spec_validation():
    with pytest.raises(InputError):
        BuildingStarSpec(lambdas=(), multiplicities=())
    with pytest.raises(InputError):
        BuildingStarSpec(lambdas=(Coweight((1, 1)),), multiplicities=(0,))
    with pytest.raises(InputError):
        BuildingStarSpec(lambdas=(Coweight((1, 1)),), multiplicities=(1, 2))


def test_validate_building_star_spec_accepts_rho_chain():
    c2 = build_root_datum("C2")
    spec = BuildingStarSpec(
        lambdas=(Coweight((1, 1)), Coweight((3, 3))), multiplicities=(1, 2)
    )
    diag = validate_building_star_spec(c2, spec)
    assert diag.valid and diag.minus_one_type and diag.star_fixed == (True, True)


def test_validate_building_star_spec_reports_chain_break():
    c2 = build_root_datum("C2")
    spec = BuildingStarSpec(
        lambdas=(Coweight((1, 1)), Coweight((2, 1))), multiplicities=(1, 1)
    )
    diag = validate_building_star_spec(c2, spec)
    assert not diag.valid
    assert any("lambda_2 - lambda_1" in m for m in diag.messages)


def test_validate_building_star_spec_flags_non_strongly_dominant():
    c2 = build_root_datum("C2")
    spec = BuildingStarSpec(lambdas=(Coweight((1, 0)),), multiplicities=(1,))
    diag = validate_building_star_spec(c2, spec)
    assert not diag.valid
    assert any("lambda_1" in m for m in diag.messages)


def test_validate_building_star_spec_a2_star_motion():
    a2 = build_root_datum("A2")
    moved = BuildingStarSpec(lambdas=(Coweight((1, 2)),), multiplicities=(1,))
    diag = validate_building_star_spec(a2, moved)
    assert not diag.minus_one_type and diag.star_fixed == (False,)
    symmetric = BuildingStarSpec(lambdas=(Coweight((2, 2)),), multiplicities=(1,))
    assert validate_building_star_spec(a2, symmetric).star_fixed == (True,)


def test_validate_building_star_spec_rank_mismatch():
    a2 = build_root_datum("A2")
    spec = BuildingStarSpec(lambdas=(Coweight((1,)),), multiplicities=(1,))
    with pytest.raises(InputError, match="rank"):
        validate_building_star_spec(a2, spec)


def test_conjecture_witness_family_a_residue():
    for rank in (2, 3, 4, 5):
        report = conjecture_witness(build_root_datum(f"A{rank}"), 20)
        assert report.all_outside
        assert report.control_two_rho_inside
        assert len(report.entries) == 21
        if rank == 2:
            assert report.residue == 2
        assert all(
            any(Fraction(c).denominator != 1 for c in e.coords) or not e.in_coroot_lattice
            for e in report.entries
        )


def test_conjecture_witness_a1_degenerates():
    report = conjecture_witness(build_root_datum("A1"), 10)
    assert not report.all_outside
    assert all(e.in_coroot_lattice for e in report.entries)


def test_conjecture_witness_validation():
    with pytest.raises(InputError):
        conjecture_witness(build_root_datum("A2"), -1)


def test_thickness_vector_uniform_matches_closed_form():
    cases = [
        ("A1", (3,), Coweight((4,))),
        ("A2", (2, 2), Coweight((2, 1))),
        ("C2", (2, 2), Coweight((2, 2))),
        ("G2", (3, 3), Coweight((1, 1))),
    ]
    for label, qs, lam in cases:
        datum = build_root_datum(label)
        assert sphere_size_thickness_vector(datum, qs, lam) == sphere_size(
            datum, lam, qs[0]
        )


def test_thickness_vector_mixed_goldens():
    c2 = build_root_datum("C2")
    assert sphere_size_thickness_vector(c2, (2, 2), Coweight((2, 2))) == 46080
    assert sphere_size_thickness_vector(c2, (3, 3), Coweight((2, 2))) == 9447840
    assert sphere_size_thickness_vector(c2, (2, 3), Coweight((2, 2))) == 979776
    assert sphere_size_thickness_vector(c2, (2, 3), Coweight((0, 1))) == 28
    assert sphere_size_thickness_vector(c2, (2, 2), Coweight((0, 1))) == 15
    g2 = build_root_datum("G2")
    assert sphere_size_thickness_vector(g2, (2, 2), Coweight((1, 1))) == 193536
    assert sphere_size_thickness_vector(g2, (2, 3), Coweight((1, 1))) == 9027936


def test_thickness_vector_generalized_quadrangle_vertex_count():
    """C2 fundamental spheres factor as (1 + q_long)(1 + q_short * q_long)."""
    c2 = build_root_datum("C2")
    for qs in ((2, 2), (2, 3), (3, 3), (4, 2)):
        value = sphere_size_thickness_vector(c2, qs, Coweight((0, 1)))
        assert value == (1 + qs[1]) * (1 + qs[0] * qs[1])


def test_thickness_vector_rejects_mixed_equal_lengths():
    a2 = build_root_datum("A2")
    with pytest.raises(InputError, match="equal length"):
        sphere_size_thickness_vector(a2, (2, 3), Coweight((1, 1)))


def test_thickness_vector_validation():
    c2 = build_root_datum("C2")
    with pytest.raises(InputError, match="thickness entries"):
        sphere_size_thickness_vector(c2, (2,), Coweight((1, 1)))
    with pytest.raises(InputError, match="at least 2"):
        sphere_size_thickness_vector(c2, (2, 1), Coweight((1, 1)))
    with pytest.raises(InputError, match="dominant"):
        sphere_size_thickness_vector(c2, (2, 2), Coweight((-1, 1)))


@given(st.integers(2, 4), st.integers(2, 4), st.data())
def test_thickness_vector_ratio_identity_c2(q_short, q_long, data):
    """|S_{lam+mu}| / |S_mu| depends only on lam, mirroring the uniform case."""
    c2 = build_root_datum("C2")
    lam = data.draw(small_strongly_dominant(2))
    mu = data.draw(small_strongly_dominant(2))
    nu = data.draw(small_strongly_dominant(2))
    qs = (q_short, q_long)
    s = lambda w: sphere_size_thickness_vector(c2, qs, w)
    lhs = Fraction(s(lam + mu), s(mu))
    rhs = Fraction(s(lam + nu), s(nu))
    assert lhs == rhs
