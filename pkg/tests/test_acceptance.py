"""Acceptance battery: one test per release gate, all equality exact.

Every contract here is zero-tolerance symbolic equality; the timing
assertions pin the indicative budgets (per instance, and under ten
minutes for the full battery). Run with ``pytest -v`` to get one
pass/fail line per gate.
"""

import json
import random
import time

from algebroids import jsonio, linalg, sampling
from algebroids.cli import main
from algebroids.courant import (
    baer_sum,
    check_courant,
    check_courant_morphism,
    connection_shift,
    coordinate_connection,
    curvature,
    opposite,
    standard_exact,
)
from algebroids.descent import (
    CoverData,
    DescentDatum,
    check_cocycle,
    mat_mul,
    tautological_datum,
    two_form_transform,
)
from algebroids.dirac import (
    DiracData,
    check_dirac,
    graph_of_two_form,
    restricted_chart,
)
from algebroids.lie_algebroid import (
    LieData,
    MarkedLieData,
    OExtensionData,
    canonical_splitting,
    check_compose_associative,
    check_extension_pullback_linear,
    compose_pullback,
    pullback_marked,
    tangent_algebroid,
    trivial_extension,
)
from algebroids.pullback import (
    check_curvature_pullback,
    check_twist_commute,
    dirac_pushdown,
    pullback_courant,
)
from algebroids.symcalc import (
    ChartMap,
    KForm,
    Poly,
    VField,
    coordinate_chart,
    parse_poly,
)
from algebroids.transgression import (
    check_tau_rules,
    check_transgression_linear,
    courant_from_transgression,
    transgress,
)

A1 = coordinate_chart("A1", 1)
A2 = coordinate_chart("A2", 2)
R3 = coordinate_chart("X", 3)
R4 = coordinate_chart("B", 4)
L1 = coordinate_chart("L", 1, prefix="y")
P2 = coordinate_chart("P", 2)

VOL = KForm(R3, 3, {(0, 1, 2): Poly.const(R3, 1)})
SCALED = KForm(R3, 3, {(0, 1, 2): parse_poly("x1 + x2", R3)})

AXIOM_NAMES = [
    "eq1_anchor_coanchor",
    "eq2_leibniz_rule",
    "eq3_pairing_invariance",
    "eq4_coanchor_ideal",
    "eq5_adjunction",
    "eq6_symmetrization",
    "leibniz_identity",
]
RULE_NAMES = [
    "rule_c_central",
    "rule_one_form_rewrite",
    "rule_interior_action",
    "rule_lie_action",
    "rule_odd_pairing",
    "rule_mixed_bracket",
]


def structure_family():
    """Six pairwise-distinct structures: flat, twisted, opposite, summed."""
    qa = standard_exact(R3, VOL)
    qb = standard_exact(R3, SCALED)
    summed = baer_sum(
        qa, qb, coordinate_connection(qa), coordinate_connection(qb)
    ).result
    return [
        standard_exact(A1),
        standard_exact(A2),
        qa,
        qb,
        opposite(qa),
        summed,
    ]


def shear_map():
    return ChartMap(
        R3,
        R3,
        (Poly.coord(R3, 0), Poly.coord(R3, 1), parse_poly("x3 + x1*x2", R3)),
    )


def test_axiom_suite_exact_on_standard_family():
    cases = [
        standard_exact(A1),
        standard_exact(A2),
        standard_exact(R3),
        standard_exact(R3, VOL),
        standard_exact(R3, SCALED),
    ]
    for q in cases:
        start = time.monotonic()
        rep = check_courant(q)
        assert time.monotonic() - start < 10.0
        assert rep.check_names() == AXIOM_NAMES
        assert rep.ok, str(rep)
    # a twist with nonzero differential must break exactly the last identity
    sloped = standard_exact(R4, KForm(R4, 3, {(0, 1, 2): Poly.coord(R4, 3)}))
    rep = check_courant(sloped)
    assert [c.name for c in rep.failures()] == ["leibniz_identity"]


def test_transgression_round_trip_on_family():
    family = structure_family()
    blobs = {
        jsonio.dump_json(jsonio.courant_to_json(q)) for q in family
    }
    assert len(blobs) == len(family) == 6
    for q in family:
        start = time.monotonic()
        assert courant_from_transgression(transgress(q)) == q
        assert time.monotonic() - start < 5.0


def test_bracket_rules_and_centrality_on_family():
    for q in structure_family():
        rep = check_tau_rules(q, samples=6, seed=3)
        assert rep.ok, str(rep)
        names = rep.check_names()
        for rule in RULE_NAMES:
            assert rule in names


def test_twist_and_pullback_commute_for_three_pairs():
    flat = standard_exact(R3)
    inclusion = ChartMap(
        P2, R3, (Poly.coord(P2, 0), Poly.coord(P2, 1), Poly.zero(P2))
    )
    slanted = ChartMap(
        R4,
        R3,
        (Poly.coord(R4, 0), Poly.coord(R4, 1), parse_poly("x3 + x1*x4", R4)),
    )
    pairs = [
        (shear_map(), None, None),
        (inclusion, None, None),
        (slanted, "exact-split", coordinate_connection(flat)),
    ]
    # the shear and the slanted graph keep the pulled twist nonzero; the
    # plane inclusion kills it outright
    assert shear_map().pullback_form(VOL) != KForm.zero(R3, 3)
    assert slanted.pullback_form(VOL) != KForm.zero(R4, 3)
    assert inclusion.pullback_form(VOL) == KForm.zero(P2, 3)
    for f, mode, conn in pairs:
        start = time.monotonic()
        rep = check_twist_commute(f, flat, VOL, mode, conn)
        assert time.monotonic() - start < 30.0
        assert rep.check_names() == [
            "twist_commute_frame",
            "twist_commute_structure",
        ]
        assert rep.ok, str(rep)


def test_curvature_normalisation_torsor_law_and_pullback():
    # the coordinate lift of a standard structure reads back its twist
    for h in (KForm.zero(R3, 3), VOL, SCALED):
        q = standard_exact(R3, h)
        assert curvature(coordinate_connection(q)) == h

    # shifting the lift by a two-form moves the curvature by its differential
    q = standard_exact(R3, VOL)
    conn = coordinate_connection(q)
    rng = random.Random(2026)
    for _ in range(20):
        b = sampling.sample_kform(rng, R3, 2)
        assert curvature(connection_shift(conn, b)) == VOL + b.d()

    # pulled lift of a pulled structure has the pulled curvature
    nonlinear = [
        shear_map(),
        ChartMap(
            P2, R3, (Poly.coord(P2, 0), Poly.coord(P2, 1), parse_poly("x1*x2", P2))
        ),
        ChartMap(
            L1,
            R3,
            (
                Poly.coord(L1, 0),
                parse_poly("y1^2", L1),
                parse_poly("y1^3", L1),
            ),
        ),
    ]
    for f in nonlinear:
        pb = pullback_courant(f, q, "exact-split", conn)
        rep = check_curvature_pullback(pb, conn)
        assert rep.check_names() == ["curvature_pullback_matches"]
        assert rep.ok, str(rep)


def test_composition_coherence_on_a_four_step_chain():
    phi = ChartMap(
        R3,
        R4,
        (
            Poly.coord(R3, 0),
            Poly.coord(R3, 1),
            Poly.coord(R3, 2),
            parse_poly("x1*x2 + x3^2", R3),
        ),
    )
    psi = ChartMap(
        P2, R3, (Poly.coord(P2, 0), Poly.coord(P2, 1), parse_poly("x1*x2", P2))
    )
    xi = ChartMap(L1, P2, (Poly.coord(L1, 0), parse_poly("y1^2", L1)))

    tangent = tangent_algebroid(R4)
    extended = trivial_extension(tangent).total
    for a, rank in ((tangent, 4), (extended.lie, 5)):
        split = tuple(linalg.unit_vec(R4, rank, j) for j in range(4))
        rep = check_compose_associative(
            a, (phi, psi, xi), split, samples=50, seed=17
        )
        assert rep.check_names() == [
            "composition_associative",
            "comparison_anchor",
            "comparison_bracket",
        ]
        assert rep.ok, str(rep)

    # the comparison also carries the marking of the extended algebroid
    split = tuple(linalg.unit_vec(R4, 5, j) for j in range(4))
    mp_phi = pullback_marked(phi, extended, "transitive-split", split)
    mp_psi = pullback_marked(
        psi, mp_phi.marked, "transitive-split", canonical_splitting(mp_phi.pullback)
    )
    mp_both = pullback_marked(phi.compose(psi), extended, "transitive-split", split)
    r_mid = mp_psi.pullback.algebroid.rank
    r_out = mp_both.pullback.algebroid.rank
    cmatrix = [
        compose_pullback(
            mp_psi.pullback,
            mp_phi.pullback,
            mp_both.pullback,
            linalg.unit_vec(P2, r_mid, g),
        )
        for g in range(r_mid)
    ]
    image = list(linalg.zero_vec(P2, r_out))
    for alpha, c in enumerate(mp_psi.marked.marking):
        if not c.is_zero:
            for k in range(r_out):
                if not cmatrix[alpha][k].is_zero:
                    image[k] = image[k] + c * cmatrix[alpha][k]
    assert linalg.vec_eq(tuple(image), mp_both.marked.marking)


def _axis_inclusion(sub, chart, support):
    comps = []
    for name in chart.coords:
        if name in support:
            comps.append(Poly.zero(sub))
        else:
            comps.append(Poly.coord(sub, sub.index(name)))
    return ChartMap(sub, chart, tuple(comps))


def test_dirac_graphs_and_supported_round_trips():
    q = standard_exact(R3)
    conn = coordinate_connection(q)

    closed = KForm(R3, 2, {(0, 1): Poly.coord(R3, 0)})
    assert closed.d() == KForm.zero(R3, 3)
    assert check_dirac(graph_of_two_form(conn, closed)).ok

    sloped = KForm(R3, 2, {(0, 1): Poly.coord(R3, 2)})
    rep = check_dirac(graph_of_two_form(conn, sloped))
    assert [c.name for c in rep.failures()] == ["closure"]
    # the recorded defect is the double contraction of the differential
    defect = (
        sloped.d()
        .iota(VField.basis(R3, 0))
        .iota(VField.basis(R3, 1))
        .component((2,))
    )
    assert rep["closure"].counterexample == (
        f"generators (0,1) against 2: pairing {defect}"
    )

    examples = [
        (
            R3,
            ("x3",),
            [
                ["1", "0", "0", "0", "x1", "0"],
                ["0", "1", "0", "-x1", "0", "0"],
                ["0", "0", "0", "0", "0", "1"],
            ],
        ),
        (
            R3,
            ("x2",),
            [
                ["1", "0", "0", "0", "0", "x1"],
                ["0", "0", "1", "-x1", "0", "0"],
                ["0", "0", "0", "0", "1", "0"],
            ],
        ),
        (
            R4,
            ("x3", "x4"),
            [
                ["1", "0", "0", "0", "0", "x1", "0", "0"],
                ["0", "1", "0", "0", "-x1", "0", "0", "0"],
                ["0", "0", "0", "0", "0", "0", "1", "0"],
                ["0", "0", "0", "0", "0", "0", "0", "1"],
            ],
        ),
    ]
    for chart, support, rows in examples:
        ambient = standard_exact(chart)
        sub = restricted_chart(chart, support)
        gens = tuple(tuple(parse_poly(s, sub) for s in row) for row in rows)
        supported = DiracData(ambient, gens, support)
        assert check_dirac(supported).ok

        pb = pullback_courant(_axis_inclusion(sub, chart, support), ambient)
        down = dirac_pushdown(pb, supported)
        assert check_dirac(down).ok
        # the push-down recovers the graph of the restricted two-form,
        # compared as spans of generator rows
        graph = graph_of_two_form(
            coordinate_connection(pb.result),
            KForm(sub, 2, {(0, 1): Poly.coord(sub, 0)}),
        )
        rows_down = list(down.generators)
        rows_graph = list(graph.generators)
        rank_down = linalg.poly_rows_rank(rows_down)
        assert rank_down == len(rows_down)
        assert rank_down == linalg.poly_rows_rank(rows_graph)
        assert rank_down == linalg.poly_rows_rank(rows_down + rows_graph)


def test_combination_isomorphism_and_linearity():
    qa = standard_exact(R3, VOL)
    qb = standard_exact(R3, SCALED)
    conns = [coordinate_connection(qa), coordinate_connection(qb)]

    # unit-weight sum of two standard structures is standard on the nose
    plain = baer_sum(qa, qb, *conns)
    assert plain.result == standard_exact(R3, VOL + SCALED)

    # with a shifted lift the sum lands a differential away, and the
    # two-form transform provides the verified isomorphism back
    b = KForm(R3, 2, {(0, 1): Poly.coord(R3, 2)})
    shifted = baer_sum(qa, qb, connection_shift(conns[0], b), conns[1])
    assert shifted.result == standard_exact(R3, VOL + SCALED + b.d())
    iso = two_form_transform(shifted.result, b)
    assert linalg.poly_inverse_unit_det(iso) is not None
    assert check_courant_morphism(
        shifted.result, standard_exact(R3, VOL + SCALED), iso
    ).ok

    rep = check_transgression_linear(
        [qa, qb], [1, 1], conns, samples=4, seed=5
    )
    assert rep.check_names() == [
        "tau_pairing_combines",
        "tau_bracket_combines",
        "tau_function_action_matches",
    ]
    assert rep.ok, str(rep)

    # the same combination law holds for line extensions of the plane's
    # tangent algebroid pulled back along a curve
    def line_extension(expr):
        base = tangent_algebroid(P2)
        z = Poly.zero(P2)
        anchor = tuple(base.anchor[a] for a in range(2)) + ((z, z),)
        total = LieData(P2, 3, anchor, {(0, 1): (z, z, parse_poly(expr, P2))})
        return OExtensionData(
            MarkedLieData(total, linalg.unit_vec(P2, 3, 2)),
            base,
            tuple(linalg.unit_vec(P2, 2, a) for a in range(2))
            + (linalg.zero_vec(P2, 2),),
            tuple(linalg.unit_vec(P2, 3, a) for a in range(2)),
        )

    curve = ChartMap(L1, P2, (Poly.coord(L1, 0), parse_poly("y1^2", L1)))
    rep = check_extension_pullback_linear(
        curve,
        [line_extension("x1"), line_extension("x2")],
        [1, 1],
        tuple(linalg.unit_vec(P2, 2, j) for j in range(2)),
    )
    assert rep.ok, str(rep)
    assert rep["isomorphism_found"].passed


def test_descent_cocycle_passes_and_names_the_broken_triple():
    chart = coordinate_chart("G", 2)
    maps = {
        "one": ChartMap.identity(chart),
        "s": ChartMap(
            chart,
            chart,
            (Poly.coord(chart, 0), parse_poly("x2 + x1^2", chart)),
        ),
        "s2": ChartMap(
            chart,
            chart,
            (Poly.coord(chart, 0), parse_poly("x2 + 2*x1^2", chart)),
        ),
    }
    cover = CoverData(
        chart, maps, {("s", "s"): "s2", ("one", "s"): "s", ("s", "one"): "s"}
    )
    q = standard_exact(chart)
    datum = tautological_datum(cover, q)
    rep = check_cocycle(datum)
    assert rep.check_names() == [
        "cover_composition",
        "element_preservation",
        "triple_identity",
    ]
    assert rep.ok, str(rep)

    shear = two_form_transform(q, KForm(chart, 2, {(0, 1): Poly.coord(chart, 0)}))
    matrices = dict(datum.matrices)
    matrices["s2"] = mat_mul(matrices["s2"], shear, chart)
    broken = check_cocycle(DescentDatum(cover, q, matrices))
    assert [c.name for c in broken.failures()] == ["triple_identity"]
    assert "triple (s,s) -> s2" in broken["triple_identity"].counterexample


def _battery_jobs():
    flat = standard_exact(R3)
    twisted = standard_exact(R3, VOL)
    q2 = standard_exact(P2)
    shear = shear_map()
    supported = {
        "support": ["x3"],
        "generators": [
            ["1", "0", "0", "0", "x1", "0"],
            ["0", "1", "0", "-x1", "0", "0"],
            ["0", "0", "0", "0", "0", "1"],
        ],
    }
    conn2 = jsonio.matrix_to_json(coordinate_connection(q2).columns)
    t_chart = coordinate_chart("T", 1)
    ext = trivial_extension(tangent_algebroid(R3)).total.lie
    return {
        "check-lie": {"algebroid": jsonio.lie_to_json(tangent_algebroid(P2))},
        "check-courant": {"structure": jsonio.courant_to_json(twisted)},
        "check-dirac": {
            "structure": jsonio.courant_to_json(flat),
            "dirac": supported,
        },
        "pullback": {
            "structure": jsonio.courant_to_json(twisted),
            "map": jsonio.map_to_json(shear),
        },
        "twist": {
            "structure": jsonio.courant_to_json(flat),
            "form": jsonio.kform_to_json(VOL),
        },
        "curvature": {
            "structure": jsonio.courant_to_json(twisted),
            "expect": jsonio.kform_to_json(VOL),
        },
        "tau-roundtrip": {"structure": jsonio.courant_to_json(q2)},
        "tau-linear": {
            "parts": [jsonio.courant_to_json(q2), jsonio.courant_to_json(q2)],
            "weights": ["1", "-1"],
            "connections": [conn2, conn2],
        },
        "cocycle": {
            "structure": jsonio.courant_to_json(q2),
            "cover": {
                "maps": {
                    "one": ["x1", "x2"],
                    "s": ["x1", "x2 + x1^2"],
                    "s2": ["x1", "x2 + 2*x1^2"],
                },
                "table": {"s,s": "s2", "one,s": "s", "s,one": "s"},
            },
        },
        "twist-commute": {
            "structure": jsonio.courant_to_json(flat),
            "map": jsonio.map_to_json(shear),
            "form": jsonio.kform_to_json(VOL),
        },
        "curvature-pullback": {
            "structure": jsonio.courant_to_json(twisted),
            "map": jsonio.map_to_json(shear),
        },
        "dirac-pushdown": {
            "structure": jsonio.courant_to_json(flat),
            "dirac": supported,
        },
        "morphism-graph": {
            "structure": jsonio.courant_to_json(
                standard_exact(t_chart)
            ),
            "map": jsonio.map_to_json(
                ChartMap(L1, t_chart, (parse_poly("y1^2", L1),))
            ),
        },
        "assoc-c-plus": {
            "algebroid": jsonio.lie_to_json(ext),
            "maps": [
                jsonio.map_to_json(
                    ChartMap(
                        P2,
                        R3,
                        (
                            Poly.coord(P2, 0),
                            Poly.coord(P2, 1),
                            parse_poly("x1*x2", P2),
                        ),
                    )
                ),
                jsonio.map_to_json(
                    ChartMap(L1, P2, (Poly.coord(L1, 0), parse_poly("y1^2", L1)))
                ),
                jsonio.map_to_json(
                    ChartMap(
                        coordinate_chart("W", 1, prefix="w"),
                        L1,
                        (parse_poly("w1^2", coordinate_chart("W", 1, prefix="w")),),
                    )
                ),
            ],
            "splitting": [
                ["1", "0", "0", "0"],
                ["0", "1", "0", "0"],
                ["0", "0", "1", "0"],
            ],
        },
    }


def test_full_battery_is_deterministic_and_fast(tmp_path):
    jobs = _battery_jobs()
    start = time.monotonic()
    outputs = []
    for round_name in ("a", "b"):
        outdir = tmp_path / round_name
        outdir.mkdir()
        produced = {}
        for verb, spec in jobs.items():
            spec_path = tmp_path / f"{verb}.json"
            spec_path.write_text(jsonio.dump_json(spec), encoding="utf-8")
            out_path = outdir / f"{verb}.json"
            rc = main(
                [
                    verb,
                    "--spec",
                    str(spec_path),
                    "--out",
                    str(out_path),
                    "--seed",
                    "7",
                    "--samples",
                    "10",
                ]
            )
            assert rc == 0, f"{verb} exited {rc}"
            produced[verb] = out_path.read_bytes()
        outputs.append(produced)
    assert outputs[0] == outputs[1]
    # every report parses and passed all its checks
    for verb, blob in outputs[0].items():
        payload = json.loads(blob)
        assert payload["job"]["seed"] == 7
        assert all(c["status"] == "pass" for c in payload["checks"]), verb
    assert time.monotonic() - start < 600.0
