"""Dirac structures: isotropic involutive subbundles, possibly supported on
a coordinate subspace.

A Dirac datum lists generators over the functions of the support locus (the
chart with some coordinates set to zero, materialized as its own chart).
check_dirac verifies isotropy, maximality, tangency of the anchor images to
the support, and bracket closure. Closure uses one of two routes:

* with a nondegenerate restricted pairing ("full" mode) the defect brackets
  only need to be orthogonal to the generators, since a maximal isotropic
  is its own orthogonal complement;
* otherwise ("rank-only") membership of the defects in the generator span
  is solved degree-bounded, and a failure reports the bound that was tried.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from algebroids import linalg
from algebroids.courant import (
    Connection,
    CourantData,
    connection_shift,
    direct_sum,
    opposite,
)
from algebroids.errors import ValidationError
from algebroids.lie_algebroid import fmt_section
from algebroids.linalg import Vec, vec_is_zero
from algebroids.report import Report
from algebroids.symcalc import Chart, KForm, Poly


def restricted_chart(chart: Chart, support: tuple[str, ...]) -> Chart:
    """The chart with the named coordinates removed (set to zero)."""
    for name in support:
        if name not in chart.coords:
            raise ValidationError(f"{name!r} is not a coordinate of {chart.name}")
    if not support:
        return chart
    kept = tuple(c for c in chart.coords if c not in support)
    return Chart(f"{chart.name}|{','.join(sorted(support))}", kept)


def restrict_poly(p: Poly, chart: Chart, support: tuple[str, ...], sub: Chart) -> Poly:
    """Set the support coordinates to zero and re-express on the subchart."""
    if not support:
        return p
    support_idx = [chart.index(name) for name in support]
    kept_idx = [i for i in range(chart.dim) if chart.coords[i] not in support]
    terms = {}
    for exps, c in p.terms.items():
        if any(exps[i] for i in support_idx):
            continue
        key = tuple(exps[i] for i in kept_idx)
        terms[key] = c
    return Poly(sub, terms)


def unrestrict_poly(p: Poly, chart: Chart, support: tuple[str, ...], sub: Chart) -> Poly:
    """Canonical lift: reinterpret a subchart polynomial on the full chart."""
    if not support:
        return p
    kept_idx = [i for i in range(chart.dim) if chart.coords[i] not in support]
    terms = {}
    for exps, c in p.terms.items():
        full = [0] * chart.dim
        for pos, e in zip(kept_idx, exps):
            full[pos] = e
        terms[tuple(full)] = c
    return Poly(chart, terms)


@dataclass
class DiracData:
    """Generators of a candidate Dirac structure.

    support names the coordinates that cut out the locus (empty tuple:
    everything); generator entries are polynomials on the restricted chart.
    """

    courant: CourantData
    generators: tuple[Vec, ...]
    support: tuple[str, ...] = ()
    sub_chart: Chart = field(init=False)

    def __post_init__(self):
        self.support = tuple(self.support)
        self.sub_chart = restricted_chart(self.courant.chart, self.support)
        self.generators = tuple(tuple(g) for g in self.generators)
        for g in self.generators:
            if len(g) != self.courant.rank:
                raise ValidationError("generator has wrong length")
            for p in g:
                if p.chart != self.sub_chart:
                    raise ValidationError(
                        "generator entries must live on the restricted chart"
                    )

    def restrict(self, p: Poly) -> Poly:
        return restrict_poly(p, self.courant.chart, self.support, self.sub_chart)

    def unrestrict(self, p: Poly) -> Poly:
        return unrestrict_poly(p, self.courant.chart, self.support, self.sub_chart)

    def lift_generator(self, idx: int) -> Vec:
        return tuple(self.unrestrict(p) for p in self.generators[idx])

    def restricted_pairing(self) -> list[list[Poly]]:
        q = self.courant
        g = [[self.restrict(q.pairing[a][b]) for b in range(q.rank)] for a in range(q.rank)]
        return g

    def pair_restricted(self, u: Vec, v: Vec, g=None) -> Poly:
        if g is None:
            g = self.restricted_pairing()
        acc = Poly.zero(self.sub_chart)
        for a in range(self.courant.rank):
            if u[a].is_zero:
                continue
            for b in range(self.courant.rank):
                if not v[b].is_zero and not g[a][b].is_zero:
                    acc = acc + u[a] * v[b] * g[a][b]
        return acc


def check_dirac(d: DiracData, maximality: str = "full") -> Report:
    """Isotropy, maximality, anchor tangency, and closure.

    maximality="full" requires the restricted pairing to be nondegenerate
    at the generic point and uses the orthogonality route for closure;
    "rank-only" drops that requirement and falls back to degree-bounded
    span membership for the closure check.
    """
    if maximality not in ("full", "rank-only"):
        raise ValidationError(f"unknown maximality mode {maximality!r}")
    rep = Report()
    q = d.courant
    sub = d.sub_chart
    g = d.restricted_pairing()
    m = len(d.generators)

    bad = None
    for i in range(m):
        for j in range(i, m):
            got = d.pair_restricted(d.generators[i], d.generators[j], g)
            if not got.is_zero:
                bad = f"generators ({i},{j}): pairing {got}"
                break
        if bad:
            break
    rep.add("isotropy", bad is None, bad)

    bad = None
    if q.rank % 2 or m != q.rank // 2:
        bad = f"{m} generators for rank {q.rank}"
    elif linalg.poly_rows_rank(d.generators) != m:
        bad = "generators are generically dependent"
    elif maximality == "full" and linalg.poly_rows_rank(g) != q.rank:
        bad = "restricted pairing is degenerate; use rank-only mode"
    rep.add("maximality", bad is None, bad)

    bad = None
    if d.support:
        support_idx = [q.chart.index(name) for name in d.support]
        for i in range(m):
            for j in support_idx:
                acc = Poly.zero(sub)
                for a in range(q.rank):
                    if not d.generators[i][a].is_zero:
                        acc = acc + d.generators[i][a] * d.restrict(q.anchor[a][j])
                if not acc.is_zero:
                    bad = (
                        f"generator {i} anchors across {q.chart.coords[j]}: "
                        f"{acc}"
                    )
                    break
            if bad:
                break
    rep.add("anchor_tangency", bad is None, bad)

    bad = None
    defects = {}
    for i in range(m):
        for j in range(m):
            lifted = q.bracket(d.lift_generator(i), d.lift_generator(j))
            defects[(i, j)] = tuple(d.restrict(p) for p in lifted)
    if maximality == "full":
        for (i, j), defect in sorted(defects.items()):
            for l in range(m):
                got = d.pair_restricted(defect, d.generators[l], g)
                if not got.is_zero:
                    bad = f"generators ({i},{j}) against {l}: pairing {got}"
                    break
            if bad:
                break
    else:
        bound = 2 + max(
            [p.degree() for v in defects.values() for p in v if not p.is_zero]
            + [p.degree() for v in d.generators for p in v if not p.is_zero]
            + [0]
        )
        for (i, j), defect in sorted(defects.items()):
            if vec_is_zero(defect):
                continue
            witness = linalg.membership_witness(
                d.generators, defect, sub, bound
            )
            if witness is None:
                bad = (
                    f"bracket of generators ({i},{j}) has no span witness up "
                    f"to degree {bound}: {fmt_section(defect)}"
                )
                break
    rep.add("closure", bad is None, bad)
    return rep


def graph_of_two_form(conn: Connection, b: KForm) -> DiracData:
    """Graph of a two-form over a connection: the shifted columns.

    Closed forms give Dirac structures; the closure defect of a non-closed
    form is exactly its exterior derivative evaluated on coordinate triples.
    """
    shifted = connection_shift(conn, b)
    return DiracData(conn.courant, tuple(shifted.columns), ())


def graph_of_morphism(
    matrix: tuple[Vec, ...], src: CourantData, dst: CourantData
) -> DiracData:
    """Graph generators (e_a, T e_a) inside src + opposite(dst).

    The graph is a Dirac structure exactly when the matrix defines a
    structure-preserving map, so check_dirac doubles as a morphism test."""
    total = direct_sum(src, opposite(dst))
    gens = []
    for a in range(src.rank):
        gens.append(tuple(src.gen(a)) + tuple(matrix[a]))
    return DiracData(total, tuple(gens), ())
