"""Gluing data for Courant structures over a self-cover.

A cover here is a family of invertible coordinate endomorphisms of one
chart, together with a composition table for the pairs whose composites are
also in the family. A descent datum assigns to each map an isomorphism from
the pulled-back structure onto the structure itself; check_cocycle verifies
three layers:

  * the table is honest (the named composites really compose),
  * every matrix preserves the four structure maps,
  * the triple identity c_t . t(c_s) . comparison == c_{st} for every
    table entry, where the comparison isomorphism between the iterated and
    the one-step inverse image is computed by re-reducing basis
    representatives (and is therefore verified exactly along the way).

tautological_datum builds the canonical matrices for a standard-form
structure whose twist the cover preserves; two_form_transform produces the
shear automorphisms used to perturb such a datum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from algebroids import linalg
from algebroids.courant import (
    Connection,
    CourantData,
    check_courant_morphism,
    coordinate_connection,
)
from algebroids.errors import ChartMismatchError, ValidationError
from algebroids.linalg import Vec, vec_eq
from algebroids.pullback import (
    CourantPullback,
    pullback_connection,
    pullback_courant,
)
from algebroids.report import Report
from algebroids.symcalc import Chart, ChartMap, KForm, Poly

Matrix = tuple[Vec, ...]


def mat_mul(first: Matrix, then: Matrix, chart: Chart) -> Matrix:
    """Row-convention composite: apply `first`, then `then`."""
    cols = len(then[0])
    out = []
    for row in first:
        acc = [Poly.zero(chart)] * cols
        for b, coeff in enumerate(row):
            if coeff.is_zero:
                continue
            for c in range(cols):
                if not then[b][c].is_zero:
                    acc[c] = acc[c] + coeff * then[b][c]
        out.append(tuple(acc))
    return tuple(out)


def pullback_matrix(f: ChartMap, matrix: Matrix) -> Matrix:
    return tuple(tuple(f.pull(p) for p in row) for row in matrix)


def two_form_transform(q: CourantData, b: KForm) -> Matrix:
    """The shear e |-> e + coanchor(i_{anchor(e)} b).

    An automorphism of an exact structure exactly when b is closed; with db
    nonzero the bracket rows detect the failure.
    """
    if b.chart != q.chart or b.degree != 2:
        raise ValidationError("transform needs a two-form on the chart")
    rows = []
    for a in range(q.rank):
        alpha = b.iota(q.anchor_of(q.gen(a)))
        shift = q.coanchor_of(alpha)
        rows.append(tuple(p + s for p, s in zip(q.gen(a), shift)))
    return tuple(rows)


def frame_matrix(conn: Connection) -> Matrix:
    """Rows: the connection columns, then the coanchor images.

    As a map this sends the standard-form generators for the connection's
    curvature onto the given structure; it is invertible for any exact
    structure presented over a polynomially invertible frame.
    """
    q = conn.courant
    return tuple(conn.columns) + tuple(tuple(row) for row in q.coanchor)


@dataclass
class CoverData:
    """Named invertible endomorphisms of one chart plus a composition table.

    table[(s, t)] = u declares maps[u] == maps[s] after maps[t]; the
    declaration itself is verified by check_cocycle, not here.
    """

    chart: Chart
    maps: dict[str, ChartMap]
    table: dict[tuple[str, str], str] = field(default_factory=dict)

    def __post_init__(self):
        for name, f in self.maps.items():
            if f.source != self.chart or f.target != self.chart:
                raise ChartMismatchError(
                    f"cover map {name!r} is not an endomorphism of the chart"
                )
        for (s, t), u in self.table.items():
            for name in (s, t, u):
                if name not in self.maps:
                    raise ValidationError(
                        f"composition table mentions unknown map {name!r}"
                    )


@dataclass
class DescentDatum:
    cover: CoverData
    structure: CourantData
    matrices: dict[str, Matrix]

    def __post_init__(self):
        if self.structure.chart != self.cover.chart:
            raise ChartMismatchError("structure must live on the cover chart")
        if set(self.matrices) != set(self.cover.maps):
            raise ValidationError("need exactly one matrix per cover map")
        for name, m in self.matrices.items():
            if len(m) != self.structure.rank:
                raise ValidationError(
                    f"matrix {name!r} must have one row per generator"
                )


def tautological_datum(
    cover: CoverData,
    structure: CourantData,
    connection: Connection | None = None,
) -> DescentDatum:
    """The canonical matrices c_s = (pulled frame)^(-1) for each cover map.

    Each pulled connection frames the inverse image over the standard form
    of the pulled twist; inverting it lands back on the structure whenever
    the cover preserves the twist (check_cocycle reports it if not).
    """
    conn = connection if connection is not None else coordinate_connection(
        structure
    )
    matrices = {}
    for name, f in cover.maps.items():
        pb = pullback_courant(f, structure)
        pulled = pullback_connection(pb, conn)
        matrices[name] = tuple(
            tuple(row) for row in linalg.poly_inverse_unit_det(
                frame_matrix(pulled)
            )
        )
    return DescentDatum(cover, structure, matrices)


def _comparison_matrix(
    total: CourantPullback, inner: CourantPullback
) -> Matrix:
    """Re-reduce the one-step basis triples through the iterated pullback.

    The coefficient slots of a triple for the composite map reread verbatim
    as coefficients against the outer inverse image's generators; reduce
    verifies the fiber-product identity exactly, so a wrong comparison
    cannot be produced silently.
    """
    return tuple(inner.reduce(t) for t in total.basis)


def check_cocycle(datum: DescentDatum) -> Report:
    rep = Report()
    cover = datum.cover
    q = datum.structure

    bad = None
    for (s, t), u in sorted(cover.table.items()):
        got = cover.maps[s].compose(cover.maps[t])
        if got.comps != cover.maps[u].comps:
            bad = f"({s},{t}) -> {u}"
            break
    rep.add("cover_composition", bad is None, bad)
    composition_ok = bad is None

    pulls: dict[str, CourantPullback] = {}
    bad = None
    for name in sorted(cover.maps):
        pulls[name] = pullback_courant(cover.maps[name], q)
        sub = check_courant_morphism(
            pulls[name].result, q, datum.matrices[name]
        )
        for failure in sub.failures():
            bad = f"element {name}: {failure.name}"
            break
        if bad:
            break
    rep.add("element_preservation", bad is None, bad)

    if not composition_ok:
        rep.add(
            "triple_identity",
            False,
            "not checked: the composition table is dishonest",
        )
        return rep

    bad = None
    for (s, t), u in sorted(cover.table.items()):
        inner = pullback_courant(cover.maps[t], pulls[s].result)
        psi = _comparison_matrix(pulls[u], inner)
        route = mat_mul(
            mat_mul(
                psi,
                pullback_matrix(cover.maps[t], datum.matrices[s]),
                cover.chart,
            ),
            datum.matrices[t],
            cover.chart,
        )
        for a in range(q.rank):
            if not vec_eq(route[a], datum.matrices[u][a]):
                bad = f"triple ({s},{t}) -> {u}: generator {a}"
                break
        if bad:
            break
    rep.add("triple_identity", bad is None, bad)
    return rep
