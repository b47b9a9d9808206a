"""Courant structure data: axioms, twists, connections, combinations."""

from fractions import Fraction

import pytest

from algebroids.courant import (
    Connection,
    CourantData,
    associated_lie_algebroid,
    baer_combination,
    baer_sum,
    check_courant,
    check_courant_morphism,
    connection_shift,
    coordinate_connection,
    curvature,
    direct_sum,
    opposite,
    scalar_multiple,
    standard_exact,
    twist,
)
from algebroids.errors import ValidationError
from algebroids.lie_algebroid import tangent_algebroid
from algebroids.linalg import unit_vec, zero_vec
from algebroids.symcalc import KForm, Poly, coordinate_chart, parse_poly

R1 = coordinate_chart("L", 1)
R2 = coordinate_chart("P", 2)
R3 = coordinate_chart("X", 3)
R4 = coordinate_chart("W", 4)

CHECK_NAMES = [
    "eq1_anchor_coanchor",
    "eq2_leibniz_rule",
    "eq3_pairing_invariance",
    "eq4_coanchor_ideal",
    "eq5_adjunction",
    "eq6_symmetrization",
    "leibniz_identity",
]


def sec(chart, *exprs):
    return tuple(parse_poly(e, chart) for e in exprs)


def vol3(scale="1"):
    return KForm(R3, 3, {(0, 1, 2): parse_poly(scale, R3)})


def test_standard_passes_small_dims():
    for chart in (R1, R2, R3):
        rep = check_courant(standard_exact(chart), samples=8, seed=3)
        assert rep.ok, str(rep)
        assert rep.check_names() == CHECK_NAMES


def test_twisted_standard_passes():
    for h in (vol3(), vol3("x1 + x2")):
        rep = check_courant(standard_exact(R3, h), samples=6, seed=5)
        assert rep.ok, str(rep)


def test_nonclosed_twist_fails_leibniz_only():
    h = KForm(R4, 3, {(1, 2, 3): Poly.coord(R4, 0)})
    assert not h.d().is_zero
    rep = check_courant(standard_exact(R4, h), samples=4, seed=7)
    assert [c.name for c in rep.failures()] == ["leibniz_identity"]
    assert "defect" in rep["leibniz_identity"].counterexample


def test_twist_matches_twisted_standard():
    for h in (vol3(), vol3("x1*x3")):
        assert twist(standard_exact(R3), h) == standard_exact(R3, h)


def test_twists_compose_additively():
    h1, h2 = vol3("x1"), vol3("x2 - 2*x3")
    assert twist(twist(standard_exact(R3), h1), h2) == standard_exact(
        R3, h1 + h2
    )


def test_section_bracket_values():
    q = standard_exact(R2)
    # {x2 d1, d2} = -d1 and {x1 d1, dx1} picks up the coanchor correction.
    u = sec(R2, "x2", "0", "0", "0")
    assert q.bracket(u, q.gen(1)) == sec(R2, "-1", "0", "0", "0")
    v = sec(R2, "x1", "0", "0", "0")
    assert q.bracket(v, q.gen(2)) == sec(R2, "0", "0", "1", "0")


def test_opposite_is_involutive_and_valid():
    q = standard_exact(R2)
    assert opposite(opposite(q)) == q
    assert check_courant(opposite(q), samples=6, seed=11).ok


def test_direct_sum_valid():
    q = direct_sum(standard_exact(R2), opposite(standard_exact(R2)))
    assert q.rank == 8
    rep = check_courant(q, samples=4, seed=13)
    assert rep.ok, str(rep)


def test_nonsymmetric_pairing_rejected():
    q = standard_exact(R1)
    bad = (sec(R1, "0", "1"), sec(R1, "0", "0"))
    with pytest.raises(ValidationError):
        CourantData(R1, 2, q.anchor, q.coanchor, bad, {})


def test_connection_validation():
    q = standard_exact(R2)
    coordinate_connection(q)
    # Wrong anchor image.
    with pytest.raises(ValidationError):
        Connection(q, (q.gen(0), q.gen(0)))
    # Anchored correctly but not isotropic.
    cols = (
        sec(R2, "1", "0", "1", "0"),
        q.gen(1),
    )
    with pytest.raises(ValidationError):
        Connection(q, cols)


def test_curvature_recovers_twist():
    for h in (vol3(), vol3("x1 + x2"), vol3("x2*x3")):
        q = standard_exact(R3, h)
        assert curvature(coordinate_connection(q)) == h


def test_curvature_shift_is_torsor_action():
    h = vol3("x1")
    q = standard_exact(R3, h)
    conn = coordinate_connection(q)
    b = KForm(R3, 2, {(0, 1): Poly.coord(R3, 2)})
    shifted = connection_shift(conn, b)
    assert shifted.columns[0] == sec(R3, "1", "0", "0", "0", "x3", "0")
    assert curvature(shifted) == h + b.d()


def test_curvature_shift_seeded_two_forms():
    from algebroids.sampling import sample_kform
    import random

    rng = random.Random(20)
    q = standard_exact(R3, vol3("x1*x2"))
    conn = coordinate_connection(q)
    base = curvature(conn)
    for _ in range(5):
        b = sample_kform(rng, R3, 2)
        assert curvature(connection_shift(conn, b)) == base + b.d()


def test_associated_lie_algebroid_of_standard():
    q = standard_exact(R2)
    lie, projection = associated_lie_algebroid(q)
    assert lie == tangent_algebroid(R2)
    assert projection[0] == unit_vec(R2, 2, 0)
    assert projection[3] == zero_vec(R2, 2)


def test_associated_lie_algebroid_drops_twist():
    q = standard_exact(R3, vol3("x1"))
    lie, _ = associated_lie_algebroid(q)
    assert lie == tangent_algebroid(R3)


def test_baer_sum_of_standards_is_standard():
    h1, h2 = vol3(), vol3("x1 + x2")
    q1, q2 = standard_exact(R3, h1), standard_exact(R3, h2)
    comb = baer_sum(q1, q2, coordinate_connection(q1), coordinate_connection(q2))
    assert comb.result == standard_exact(R3, h1 + h2)
    identity = tuple(comb.result.gen(a) for a in range(comb.result.rank))
    rep = check_courant_morphism(
        comb.result, standard_exact(R3, h1 + h2), identity
    )
    assert rep.ok, str(rep)


def test_weighted_combination_scales_curvatures():
    h1, h2 = vol3("x3"), vol3("x1*x1")
    q1, q2 = standard_exact(R3, h1), standard_exact(R3, h2)
    comb = baer_combination(
        [q1, q2],
        [3, -2],
        [coordinate_connection(q1), coordinate_connection(q2)],
    )
    expected = KForm(
        R3, 3, {(0, 1, 2): parse_poly("3*x3 - 2*x1*x1", R3)}
    )
    assert comb.result == standard_exact(R3, expected)
    assert check_courant(comb.result, samples=4, seed=17).ok


def test_combination_lift_reduce_round_trip():
    h1, h2 = vol3("x2"), vol3()
    q1, q2 = standard_exact(R3, h1), standard_exact(R3, h2)
    comb = baer_combination(
        [q1, q2],
        [2, 1],
        [coordinate_connection(q1), coordinate_connection(q2)],
    )
    cls = sec(R3, "x1", "0", "1", "x2*x3", "0", "2")
    lifted = comb.lift(cls)
    assert q1.anchor_of(lifted[0]) == q2.anchor_of(lifted[1])
    assert comb.reduce_tuple(lifted) == cls


def test_combination_input_validation():
    q = standard_exact(R2)
    conn = coordinate_connection(q)
    with pytest.raises(ValidationError):
        baer_combination([q, q], [0, 0], [conn, conn])
    fat = direct_sum(q, opposite(q))
    with pytest.raises(ValidationError):
        baer_combination([fat], [1], [coordinate_connection(fat)])


def test_scalar_multiple_matches_combination():
    h = vol3("x1 + 2*x2")
    q = standard_exact(R3, h)
    comb = baer_combination([q], [5], [coordinate_connection(q)])
    assert comb.result == standard_exact(R3, KForm(R3, 3, {(0, 1, 2): 5 * h.component((0, 1, 2))}))
    sm = scalar_multiple(5, q)
    assert check_courant(sm, samples=4, seed=19).ok
    # sm is the same object presented on unscaled generators; the diagonal
    # rescaling of the coanchor directions maps it onto the combination.
    matrix = tuple(sm.gen(a) for a in range(3)) + tuple(
        tuple(Fraction(5) * p for p in sm.gen(a)) for a in range(3, 6)
    )
    rep = check_courant_morphism(sm, comb.result, matrix)
    assert rep.ok, str(rep)
    with pytest.raises(ValidationError):
        scalar_multiple(0, q)


def test_morphism_check_flags_wrong_twist():
    h1, h2 = vol3(), vol3("x3")
    q1, q2 = standard_exact(R3, h1), standard_exact(R3, h2)
    identity = tuple(q1.gen(a) for a in range(q1.rank))
    rep = check_courant_morphism(q1, q2, identity)
    assert [c.name for c in rep.failures()] == ["morphism_bracket"]
