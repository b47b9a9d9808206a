"""Courant algebroids with polynomial coefficients.

A Courant algebroid here is a free module with an anchor (sections to vector
fields), a coanchor (one-forms to sections), a symmetric pairing, and a
non-antisymmetric bracket given by structure functions on the generators.
The bracket of general sections extends the generator table by the Leibniz
rule in the right slot and its pairing-corrected mirror in the left slot:

    {u, v} = sum_ab u_a v_b {e_a, e_b}
           + sum_b anchor(u)(v_b) e_b
           - sum_a anchor(v)(u_a) e_a
           + sum_a (sum_b g_ab v_b) coanchor(d u_a).

check_courant names its verdicts eq1_anchor_coanchor through
eq6_symmetrization plus leibniz_identity; the first six are the pointwise
compatibilities (composition, Leibniz, invariance, ideal, adjunction,
symmetrization) and the last is the Jacobi identity in Leibniz form.

The Baer-type combination is implemented for exact structures (rank twice
the chart dimension, with an isotropic connection supplied per summand): the
fiber product of the summands over the common anchor is reduced by the
weighted coanchor relations, which is where the curvature classes combine
linearly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from algebroids import linalg
from algebroids.errors import ChartMismatchError, ValidationError
from algebroids.lie_algebroid import LieData, fmt_section
from algebroids.linalg import Vec, vec_add, vec_is_zero, vec_scale, vec_sub
from algebroids.report import Report
from algebroids.sampling import sample_kform, sample_poly, sample_section
from algebroids.symcalc import Chart, KForm, Poly, VField


@dataclass
class CourantData:
    """Structure data of a Courant algebroid on a free module basis.

    anchor[a] is the vector field image of generator a; coanchor[j] is the
    section hit by the j-th coordinate differential; pairing is the full
    symmetric matrix; structure maps ordered generator pairs to bracket
    coefficient vectors (no antisymmetry is implied, so both orders are
    stored when nonzero).
    """

    chart: Chart
    rank: int
    anchor: tuple[Vec, ...]
    coanchor: tuple[Vec, ...]
    pairing: tuple[Vec, ...]
    structure: dict[tuple[int, int], Vec] = field(default_factory=dict)

    def __post_init__(self):
        self.anchor = tuple(tuple(r) for r in self.anchor)
        self.coanchor = tuple(tuple(r) for r in self.coanchor)
        self.pairing = tuple(tuple(r) for r in self.pairing)
        if len(self.anchor) != self.rank:
            raise ValidationError("anchor needs one row per generator")
        for row in self.anchor:
            if len(row) != self.chart.dim:
                raise ValidationError("anchor row has wrong length")
        if len(self.coanchor) != self.chart.dim:
            raise ValidationError("coanchor needs one row per coordinate")
        for row in self.coanchor:
            if len(row) != self.rank:
                raise ValidationError("coanchor row has wrong length")
        if len(self.pairing) != self.rank:
            raise ValidationError("pairing must be a square matrix")
        for a, row in enumerate(self.pairing):
            if len(row) != self.rank:
                raise ValidationError("pairing must be a square matrix")
        for a in range(self.rank):
            for b in range(self.rank):
                if self.pairing[a][b] != self.pairing[b][a]:
                    raise ValidationError(
                        f"pairing is not symmetric at ({a},{b})"
                    )
        for mat in (self.anchor, self.coanchor, self.pairing):
            for row in mat:
                for p in row:
                    if p.chart != self.chart:
                        raise ChartMismatchError("entry on wrong chart")
        clean = {}
        for (a, b), vec in self.structure.items():
            vec = tuple(vec)
            if not (0 <= a < self.rank and 0 <= b < self.rank):
                raise ValidationError(f"structure key {(a, b)} out of range")
            if len(vec) != self.rank:
                raise ValidationError("structure vector has wrong length")
            for p in vec:
                if p.chart != self.chart:
                    raise ChartMismatchError("structure entry on wrong chart")
            if not vec_is_zero(vec):
                clean[(a, b)] = vec
        self.structure = clean

    # -- sections ----------------------------------------------------------

    def zero_section(self) -> Vec:
        return linalg.zero_vec(self.chart, self.rank)

    def gen(self, a: int) -> Vec:
        return linalg.unit_vec(self.chart, self.rank, a)

    def anchor_of(self, u: Vec) -> VField:
        comps = []
        for i in range(self.chart.dim):
            acc = Poly.zero(self.chart)
            for a in range(self.rank):
                if not u[a].is_zero:
                    acc = acc + u[a] * self.anchor[a][i]
            comps.append(acc)
        return VField(self.chart, comps)

    def coanchor_of(self, alpha: KForm) -> Vec:
        if alpha.degree != 1:
            raise ValidationError("coanchor acts on one-forms")
        out = list(self.zero_section())
        for j in range(self.chart.dim):
            c = alpha.component((j,))
            if c.is_zero:
                continue
            for a in range(self.rank):
                if not self.coanchor[j][a].is_zero:
                    out[a] = out[a] + c * self.coanchor[j][a]
        return tuple(out)

    def pairing_of(self, u: Vec, v: Vec) -> Poly:
        acc = Poly.zero(self.chart)
        for a in range(self.rank):
            if u[a].is_zero:
                continue
            for b in range(self.rank):
                if not v[b].is_zero and not self.pairing[a][b].is_zero:
                    acc = acc + u[a] * v[b] * self.pairing[a][b]
        return acc

    def bracket_gen(self, a: int, b: int) -> Vec:
        return self.structure.get((a, b), self.zero_section())

    def bracket(self, u: Vec, v: Vec) -> Vec:
        out = list(self.zero_section())
        su = self.anchor_of(u)
        sv = self.anchor_of(v)
        for a in range(self.rank):
            if u[a].is_zero:
                continue
            for b in range(self.rank):
                if v[b].is_zero:
                    continue
                gen = self.structure.get((a, b))
                if gen is None:
                    continue
                coeff = u[a] * v[b]
                for k in range(self.rank):
                    if not gen[k].is_zero:
                        out[k] = out[k] + coeff * gen[k]
        for k in range(self.rank):
            out[k] = out[k] + su.apply(v[k]) - sv.apply(u[k])
        for a in range(self.rank):
            if u[a].is_zero or u[a].as_constant() is not None:
                continue
            weight = Poly.zero(self.chart)
            for b in range(self.rank):
                if not v[b].is_zero and not self.pairing[a][b].is_zero:
                    weight = weight + self.pairing[a][b] * v[b]
            if weight.is_zero:
                continue
            du = KForm(
                self.chart,
                1,
                {(j,): u[a].diff(j) for j in range(self.chart.dim)},
            )
            img = self.coanchor_of(du)
            for k in range(self.rank):
                if not img[k].is_zero:
                    out[k] = out[k] + weight * img[k]
        return tuple(out)


def standard_exact(chart: Chart, h: KForm | None = None) -> CourantData:
    """The split exact structure on tangent + cotangent directions.

    Generators 0..n-1 cover the coordinate vector fields, generators n..2n-1
    the coordinate differentials; h (a three-form) feeds the bracket of two
    vector directions. h = None means the untwisted structure.
    """
    n = chart.dim
    if h is None:
        h = KForm.zero(chart, 3)
    if h.degree != 3:
        raise ValidationError("the twisting form must be a three-form")
    if h.chart != chart:
        raise ChartMismatchError("twisting form on the wrong chart")
    r = 2 * n
    z = Poly.zero(chart)
    one = Poly.one(chart)
    anchor = tuple(
        tuple(one if j == i else z for j in range(n)) for i in range(n)
    ) + tuple(tuple(z for _ in range(n)) for _ in range(n))
    coanchor = tuple(linalg.unit_vec(chart, r, n + j) for j in range(n))
    pairing = tuple(
        tuple(
            one if abs(a - b) == n else z for b in range(r)
        )
        for a in range(r)
    )
    structure = {}
    for i in range(n):
        for j in range(n):
            vec = [z] * r
            nonzero = False
            for k in range(n):
                c = h.component((i, j, k))
                if not c.is_zero:
                    vec[n + k] = c
                    nonzero = True
            if nonzero:
                structure[(i, j)] = tuple(vec)
    return CourantData(chart, r, anchor, coanchor, pairing, structure)


def opposite(q: CourantData) -> CourantData:
    """Same bracket and anchor, pairing and coanchor negated."""
    return CourantData(
        q.chart,
        q.rank,
        q.anchor,
        tuple(linalg.vec_neg(row) for row in q.coanchor),
        tuple(linalg.vec_neg(row) for row in q.pairing),
        dict(q.structure),
    )


def twist(q: CourantData, h: KForm) -> CourantData:
    """Add the h-term coanchor(i_{anchor b} i_{anchor a} h) to each bracket.

    The added term is function-bilinear, so twisting the structure functions
    twists the bracket of arbitrary sections consistently.
    """
    if h.degree != 3:
        raise ValidationError("the twisting form must be a three-form")
    if h.chart != q.chart:
        raise ChartMismatchError("twisting form on the wrong chart")
    structure = {}
    for a in range(q.rank):
        ia = h.iota(q.anchor_of(q.gen(a)))
        for b in range(q.rank):
            omega = ia.iota(q.anchor_of(q.gen(b)))
            term = q.coanchor_of(omega)
            vec = vec_add(q.bracket_gen(a, b), term)
            if not vec_is_zero(vec):
                structure[(a, b)] = vec
    return CourantData(
        q.chart, q.rank, q.anchor, q.coanchor, q.pairing, structure
    )


def direct_sum(q1: CourantData, q2: CourantData) -> CourantData:
    """Block sum of two structures on one chart (anchors add, coanchors
    stack, pairing is block diagonal)."""
    if q1.chart != q2.chart:
        raise ChartMismatchError("direct sum needs a common chart")
    chart = q1.chart
    r1, r2 = q1.rank, q2.rank
    z = Poly.zero(chart)

    def pad1(v: Vec) -> Vec:
        return tuple(v) + tuple(z for _ in range(r2))

    def pad2(v: Vec) -> Vec:
        return tuple(z for _ in range(r1)) + tuple(v)

    anchor = tuple(q1.anchor[a] for a in range(r1)) + tuple(
        q2.anchor[b] for b in range(r2)
    )
    coanchor = tuple(
        tuple(q1.coanchor[j]) + tuple(q2.coanchor[j])
        for j in range(chart.dim)
    )
    pairing = tuple(
        tuple(q1.pairing[a]) + tuple(z for _ in range(r2)) for a in range(r1)
    ) + tuple(
        tuple(z for _ in range(r1)) + tuple(q2.pairing[b]) for b in range(r2)
    )
    structure = {}
    for (a, b), vec in q1.structure.items():
        structure[(a, b)] = pad1(vec)
    for (a, b), vec in q2.structure.items():
        structure[(r1 + a, r1 + b)] = pad2(vec)
    return CourantData(chart, r1 + r2, anchor, coanchor, pairing, structure)


# ---------------------------------------------------------------------------
# Axiom checking
# ---------------------------------------------------------------------------


def _one_form(chart: Chart, coeffs: Sequence[Poly]) -> KForm:
    return KForm(chart, 1, {(j,): coeffs[j] for j in range(chart.dim)})


def check_courant(q: CourantData, samples: int = 100, seed: int = 0) -> Report:
    """Verify the Courant axioms: six pointwise compatibilities and the
    Jacobi identity in Leibniz form. Generator identities are exact; section
    identities are sampled with the seeded generator."""
    rep = Report()
    rng = random.Random(seed)
    chart = q.chart
    r = q.rank
    n = chart.dim

    bad = None
    for j in range(n):
        got = q.anchor_of(q.coanchor[j])
        if not got.is_zero:
            bad = f"coordinate {chart.coords[j]}: anchor image {got}"
            break
    rep.add("eq1_anchor_coanchor", bad is None, bad)

    bad = None
    for t in range(samples):
        u = sample_section(rng, chart, r)
        v = sample_section(rng, chart, r)
        f = sample_poly(rng, chart)
        lhs = q.bracket(u, vec_scale(f, v))
        rhs = vec_add(
            vec_scale(f, q.bracket(u, v)),
            vec_scale(q.anchor_of(u).apply(f), v),
        )
        if not vec_is_zero(vec_sub(lhs, rhs)):
            bad = f"sampled sections (trial {t})"
            break
    rep.add("eq2_leibniz_rule", bad is None, bad)

    bad = None
    for c in range(r):
        for a in range(r):
            for b in range(r):
                lhs = q.anchor_of(q.gen(c)).apply(q.pairing[a][b])
                rhs = q.pairing_of(q.bracket_gen(c, a), q.gen(b)) + q.pairing_of(
                    q.gen(a), q.bracket_gen(c, b)
                )
                if lhs != rhs:
                    bad = f"generators ({c},{a},{b})"
                    break
            if bad:
                break
        if bad:
            break
    if bad is None:
        for t in range(samples // 4):
            u = sample_section(rng, chart, r)
            v = sample_section(rng, chart, r)
            w = sample_section(rng, chart, r)
            lhs = q.anchor_of(u).apply(q.pairing_of(v, w))
            rhs = q.pairing_of(q.bracket(u, v), w) + q.pairing_of(
                v, q.bracket(u, w)
            )
            if lhs != rhs:
                bad = f"sampled sections (trial {t})"
                break
    rep.add("eq3_pairing_invariance", bad is None, bad)

    bad = None
    for a in range(r):
        for j in range(n):
            alpha = KForm.dx(chart, j)
            lhs = q.bracket(q.gen(a), q.coanchor[j])
            rhs = q.coanchor_of(alpha.lie(q.anchor_of(q.gen(a))))
            if not vec_is_zero(vec_sub(lhs, tuple(rhs))):
                bad = f"generator {a}, coordinate {chart.coords[j]}"
                break
        if bad:
            break
    if bad is None:
        for t in range(samples // 4):
            u = sample_section(rng, chart, r)
            alpha = sample_kform(rng, chart, 1)
            lhs = q.bracket(u, q.coanchor_of(alpha))
            rhs = q.coanchor_of(alpha.lie(q.anchor_of(u)))
            if not vec_is_zero(vec_sub(lhs, tuple(rhs))):
                bad = f"sampled sections (trial {t})"
                break
    rep.add("eq4_coanchor_ideal", bad is None, bad)

    bad = None
    for a in range(r):
        for j in range(n):
            lhs = q.pairing_of(q.gen(a), q.coanchor[j])
            rhs = q.anchor[a][j]
            if lhs != rhs:
                bad = f"generator {a}, coordinate {chart.coords[j]}"
                break
        if bad:
            break
    if bad is None:
        for t in range(samples // 4):
            u = sample_section(rng, chart, r)
            alpha = sample_kform(rng, chart, 1)
            lhs = q.pairing_of(u, q.coanchor_of(alpha))
            rhs = alpha.iota(q.anchor_of(u)).as_poly()
            if lhs != rhs:
                bad = f"sampled sections (trial {t})"
                break
    rep.add("eq5_adjunction", bad is None, bad)

    bad = None
    for a in range(r):
        for b in range(r):
            lhs = vec_add(q.bracket_gen(a, b), q.bracket_gen(b, a))
            rhs = q.coanchor_of(KForm.from_poly(q.pairing[a][b]).d())
            if not vec_is_zero(vec_sub(lhs, tuple(rhs))):
                bad = f"generators ({a},{b})"
                break
        if bad:
            break
    if bad is None:
        for t in range(samples // 4):
            u = sample_section(rng, chart, r)
            v = sample_section(rng, chart, r)
            lhs = vec_add(q.bracket(u, v), q.bracket(v, u))
            rhs = q.coanchor_of(KForm.from_poly(q.pairing_of(u, v)).d())
            if not vec_is_zero(vec_sub(lhs, tuple(rhs))):
                bad = f"sampled sections (trial {t})"
                break
    rep.add("eq6_symmetrization", bad is None, bad)

    bad = None
    for a in range(r):
        for b in range(r):
            for c in range(r):
                lhs = q.bracket(q.gen(a), q.bracket_gen(b, c))
                rhs = vec_add(
                    q.bracket(q.bracket_gen(a, b), q.gen(c)),
                    q.bracket(q.gen(b), q.bracket_gen(a, c)),
                )
                if not vec_is_zero(vec_sub(lhs, rhs)):
                    defect = vec_sub(lhs, rhs)
                    bad = (
                        f"generators ({a},{b},{c}): defect "
                        f"{fmt_section(defect)}"
                    )
                    break
            if bad:
                break
        if bad:
            break
    if bad is None:
        for t in range(samples // 4):
            u = sample_section(rng, chart, r)
            v = sample_section(rng, chart, r)
            w = sample_section(rng, chart, r)
            lhs = q.bracket(u, q.bracket(v, w))
            rhs = vec_add(
                q.bracket(q.bracket(u, v), w), q.bracket(v, q.bracket(u, w))
            )
            if not vec_is_zero(vec_sub(lhs, rhs)):
                bad = f"sampled sections (trial {t})"
                break
    rep.add("leibniz_identity", bad is None, bad)
    return rep


def apply_matrix(matrix: Sequence[Vec], u: Vec, rank_out: int, chart: Chart) -> Vec:
    out = list(linalg.zero_vec(chart, rank_out))
    for a, coeff in enumerate(u):
        if coeff.is_zero:
            continue
        for k in range(rank_out):
            img = matrix[a][k]
            if not img.is_zero:
                out[k] = out[k] + coeff * img
    return tuple(out)


def check_courant_morphism(
    src: CourantData, dst: CourantData, matrix: Sequence[Vec]
) -> Report:
    """matrix[a] is the image of the a-th source generator; the checks are
    exact on generators (the four structure maps are all O-bilinear or
    handled by the section bracket)."""
    rep = Report()
    if src.chart != dst.chart:
        raise ChartMismatchError("morphism checks need a common chart")
    chart = src.chart

    bad = None
    for a in range(src.rank):
        if src.anchor_of(src.gen(a)) != dst.anchor_of(matrix[a]):
            bad = f"generator {a}"
            break
    rep.add("morphism_anchor", bad is None, bad)

    bad = None
    for j in range(chart.dim):
        got = apply_matrix(matrix, src.coanchor[j], dst.rank, chart)
        if not linalg.vec_eq(got, dst.coanchor[j]):
            bad = f"coordinate {chart.coords[j]}"
            break
    rep.add("morphism_coanchor", bad is None, bad)

    bad = None
    for a in range(src.rank):
        for b in range(src.rank):
            if dst.pairing_of(matrix[a], matrix[b]) != src.pairing[a][b]:
                bad = f"generators ({a},{b})"
                break
        if bad:
            break
    rep.add("morphism_pairing", bad is None, bad)

    bad = None
    for a in range(src.rank):
        for b in range(src.rank):
            lhs = apply_matrix(
                matrix, src.bracket_gen(a, b), dst.rank, chart
            )
            rhs = dst.bracket(matrix[a], matrix[b])
            if not linalg.vec_eq(lhs, rhs):
                bad = f"generators ({a},{b})"
                break
        if bad:
            break
    rep.add("morphism_bracket", bad is None, bad)
    return rep


# ---------------------------------------------------------------------------
# Connections and curvature
# ---------------------------------------------------------------------------


@dataclass
class Connection:
    """An isotropic right inverse of the anchor, one section per coordinate."""

    courant: CourantData
    columns: tuple[Vec, ...]

    def __post_init__(self):
        self.columns = tuple(tuple(c) for c in self.columns)
        q = self.courant
        if len(self.columns) != q.chart.dim:
            raise ValidationError("connection needs one section per coordinate")
        for i, col in enumerate(self.columns):
            if len(col) != q.rank:
                raise ValidationError("connection column has wrong length")
            if q.anchor_of(col) != VField.basis(q.chart, i):
                raise ValidationError(
                    f"connection column {i} does not anchor to the "
                    f"coordinate field"
                )
        for i in range(q.chart.dim):
            for j in range(i, q.chart.dim):
                if not q.pairing_of(self.columns[i], self.columns[j]).is_zero:
                    raise ValidationError(
                        f"connection columns ({i},{j}) are not isotropic"
                    )


def coordinate_connection(q: CourantData) -> Connection:
    """First-dim generators as the connection (valid for standard form)."""
    return Connection(
        q, tuple(q.gen(i) for i in range(q.chart.dim))
    )


def curvature(conn: Connection) -> KForm:
    """Three-form measuring the bracket defect of the connection.

    Components are read off with the pairing against the connection itself;
    the defect sections are then confirmed to be coanchor images of exactly
    those components, and the component array to be totally antisymmetric.
    """
    q = conn.courant
    chart = q.chart
    n = chart.dim
    comps: dict[tuple[int, int, int], Poly] = {}
    defects: dict[tuple[int, int], Vec] = {}
    for i in range(n):
        for j in range(n):
            defects[(i, j)] = q.bracket(conn.columns[i], conn.columns[j])
    for i in range(n):
        for j in range(n):
            for k in range(n):
                comps[(i, j, k)] = q.pairing_of(defects[(i, j)], conn.columns[k])
    for (i, j, k), c in comps.items():
        if not (c + comps[(j, i, k)]).is_zero or not (c + comps[(i, k, j)]).is_zero:
            raise ValidationError(
                "curvature components are not totally antisymmetric; the "
                "connection data is inconsistent"
            )
    for i in range(n):
        for j in range(n):
            alpha = _one_form(chart, [comps[(i, j, k)] for k in range(n)])
            if not linalg.vec_eq(q.coanchor_of(alpha), defects[(i, j)]):
                raise ValidationError(
                    f"bracket defect at ({i},{j}) is not a coanchor image "
                    f"of its pairing components"
                )
    return KForm(
        chart,
        3,
        {
            (i, j, k): comps[(i, j, k)]
            for i in range(n)
            for j in range(i + 1, n)
            for k in range(j + 1, n)
        },
    )


def connection_shift(conn: Connection, b: KForm) -> Connection:
    """Shift by a two-form: each column picks up coanchor(i_{coord} b)."""
    if b.degree != 2:
        raise ValidationError("connection shifts use two-forms")
    q = conn.courant
    cols = []
    for i in range(q.chart.dim):
        shift = q.coanchor_of(b.iota(VField.basis(q.chart, i)))
        cols.append(vec_add(conn.columns[i], shift))
    return Connection(q, tuple(cols))


# ---------------------------------------------------------------------------
# Quotient to the underlying Lie algebroid
# ---------------------------------------------------------------------------


def associated_lie_algebroid(q: CourantData) -> tuple[LieData, tuple[Vec, ...]]:
    """Quotient by the coanchor image (requires constant coanchor rows).

    Returns the quotient Lie algebroid and the projection of each generator.
    The bracket descends because both bracket ideals land in the coanchor
    image; antisymmetry of the quotient is verified on the way.
    """
    chart = q.chart
    span_rows: list[list[Fraction]] = []
    for j in range(chart.dim):
        consts = [p.as_constant() for p in q.coanchor[j]]
        if any(c is None for c in consts):
            raise ValidationError(
                "quotient needs constant coanchor rows in this basis"
            )
        if any(consts):
            cand = span_rows + [list(consts)]
            if linalg.qq_rank(cand) > len(span_rows):
                span_rows.append(list(consts))
    complement: list[int] = []
    rows = [list(r) for r in span_rows]
    for i in range(q.rank):
        cand = rows + [[Fraction(j == i) for j in range(q.rank)]]
        if linalg.qq_rank(cand) > len(rows):
            rows = cand
            complement.append(i)
    basis = span_rows + [
        [Fraction(j == i) for j in range(q.rank)] for i in complement
    ]
    inv = linalg.qq_inverse(linalg.transpose(basis))
    if inv is None:
        raise ValidationError("coanchor image has no constant complement")

    def reduce(vec: Vec) -> Vec:
        out = []
        for r in range(len(span_rows), len(basis)):
            acc = Poly.zero(chart)
            for j in range(q.rank):
                if inv[r][j]:
                    acc = acc + inv[r][j] * vec[j]
            out.append(acc)
        return tuple(out)

    anchor = tuple(tuple(q.anchor[i]) for i in complement)
    structure = {}
    for x, i in enumerate(complement):
        for y, j in enumerate(complement):
            if x > y:
                continue
            got = reduce(q.bracket_gen(i, j))
            rev = reduce(q.bracket_gen(j, i))
            if not vec_is_zero(vec_add(got, rev)):
                raise ValidationError(
                    "bracket does not descend antisymmetrically; the input "
                    "violates the symmetrization identity"
                )
            if not vec_is_zero(got):
                structure[(x, y)] = got
    lie = LieData(chart, len(complement), anchor, structure)
    projection = tuple(reduce(q.gen(i)) for i in range(q.rank))
    return lie, projection


# ---------------------------------------------------------------------------
# Baer-type combinations of exact structures
# ---------------------------------------------------------------------------


def _lift_unit(weights: Sequence[Fraction]) -> list[Fraction]:
    """A vector u with sum_i weights_i u_i = 1, concentrated on the first
    nonzero weight."""
    u = [Fraction(0)] * len(weights)
    for i, w in enumerate(weights):
        if w:
            u[i] = 1 / w
            break
    return u


def _reduce_tuple(
    parts: Sequence[CourantData],
    weights: Sequence[Fraction],
    connections: Sequence[Connection],
    components: Sequence[Vec],
) -> Vec:
    chart = parts[0].chart
    n = chart.dim
    a_field = parts[0].anchor_of(components[0])
    beta = [Poly.zero(chart) for _ in range(n)]
    for i, (qi, conn) in enumerate(zip(parts, connections)):
        if qi.anchor_of(components[i]) != a_field:
            raise ValidationError("tuple components have different anchor images")
        lifted = list(linalg.zero_vec(chart, qi.rank))
        for j in range(n):
            if not a_field.comps[j].is_zero:
                for k in range(qi.rank):
                    lifted[k] = lifted[k] + a_field.comps[j] * conn.columns[j][k]
        rem = vec_sub(components[i], tuple(lifted))
        alpha = [qi.pairing_of(rem, conn.columns[k]) for k in range(n)]
        # Defensive: rem must be exactly the coanchor image of alpha.
        if not linalg.vec_eq(qi.coanchor_of(_one_form(chart, alpha)), rem):
            raise ValidationError(
                "tuple component is not connection + coanchor image; the "
                "summand is not exact over this connection"
            )
        if weights[i]:
            for j in range(n):
                beta[j] = beta[j] + weights[i] * alpha[j]
    return tuple(a_field.comps) + tuple(beta)


@dataclass
class CourantCombination:
    """Weighted combination presented on diagonal lifts + coanchor lines.

    result generators 0..n-1 are the diagonal connection lifts of the
    coordinate fields, generators n..2n-1 the glued coanchor lines.
    reduce_tuple turns a fiber-product tuple of summand sections into
    result coordinates; lift produces one representative tuple per class.
    """

    parts: tuple[CourantData, ...]
    weights: tuple[Fraction, ...]
    connections: tuple[Connection, ...]
    result: CourantData

    def reduce_tuple(self, components: Sequence[Vec]) -> Vec:
        return _reduce_tuple(
            self.parts, self.weights, self.connections, components
        )

    def lift(self, cls: Vec) -> list[Vec]:
        """One fiber-product representative of a class vector."""
        chart = self.result.chart
        n = chart.dim
        unit = _lift_unit(self.weights)
        out = []
        for i, (qi, conn) in enumerate(zip(self.parts, self.connections)):
            vec = list(linalg.zero_vec(chart, qi.rank))
            for j in range(n):
                if not cls[j].is_zero:
                    for k in range(qi.rank):
                        vec[k] = vec[k] + cls[j] * conn.columns[j][k]
            alpha = _one_form(
                chart, [unit[i] * cls[n + j] for j in range(n)]
            )
            out.append(vec_add(tuple(vec), qi.coanchor_of(alpha)))
        return out


def baer_combination(
    parts: Sequence[CourantData],
    weights: Sequence,
    connections: Sequence[Connection],
) -> CourantCombination:
    """Weighted fiber-product combination of exact structures.

    Each summand must have rank twice the chart dimension and come with an
    isotropic connection. The result is presented on diagonal lifts and
    glued coanchor lines; its structure functions are computed by reducing
    componentwise brackets of lifted tuples, so curvature classes combine
    with the given weights.
    """
    if not parts:
        raise ValidationError("need at least one summand")
    chart = parts[0].chart
    n = chart.dim
    weights = tuple(Fraction(w) for w in weights)
    if len(weights) != len(parts) or len(connections) != len(parts):
        raise ValidationError("need one weight and one connection per summand")
    if not any(weights):
        raise ValidationError(
            "all-zero weights give a degenerate pairing; not a valid "
            "combination"
        )
    for qi, conn in zip(parts, connections):
        if qi.chart != chart:
            raise ChartMismatchError("summands must share the chart")
        if qi.rank != 2 * n:
            raise ValidationError(
                "combination is implemented for exact structures "
                "(rank = twice the chart dimension)"
            )
        if conn.courant is not qi and conn.courant != qi:
            raise ValidationError("connection does not belong to its summand")

    r = 2 * n
    z = Poly.zero(chart)
    one = Poly.one(chart)
    unit = _lift_unit(weights)

    def class_gen_tuples(idx: int) -> list[Vec]:
        """Representative tuple of the idx-th result generator."""
        out = []
        for i, (qi, conn) in enumerate(zip(parts, connections)):
            if idx < n:
                out.append(tuple(conn.columns[idx]))
            else:
                j = idx - n
                alpha = KForm(chart, 1, {(j,): Poly.const(chart, unit[i])})
                out.append(qi.coanchor_of(alpha))
        return out

    anchor = tuple(
        tuple(one if j == i else z for j in range(n)) for i in range(n)
    ) + tuple(tuple(z for _ in range(n)) for _ in range(n))
    coanchor = tuple(linalg.unit_vec(chart, r, n + j) for j in range(n))
    pairing_rows = []
    gen_tuples = [class_gen_tuples(idx) for idx in range(r)]
    for x in range(r):
        row = []
        for y in range(r):
            acc = Poly.zero(chart)
            for i, qi in enumerate(parts):
                if weights[i]:
                    acc = acc + weights[i] * qi.pairing_of(
                        gen_tuples[x][i], gen_tuples[y][i]
                    )
            row.append(acc)
        pairing_rows.append(tuple(row))
    structure = {}
    for x in range(r):
        for y in range(r):
            comp = [
                qi.bracket(gen_tuples[x][i], gen_tuples[y][i])
                for i, qi in enumerate(parts)
            ]
            got = _reduce_tuple(parts, weights, connections, comp)
            if not vec_is_zero(got):
                structure[(x, y)] = got
    result = CourantData(
        chart, r, anchor, tuple(coanchor), tuple(pairing_rows), structure
    )
    return CourantCombination(tuple(parts), weights, tuple(connections), result)


def baer_sum(
    q1: CourantData,
    q2: CourantData,
    conn1: Connection,
    conn2: Connection,
) -> CourantCombination:
    return baer_combination([q1, q2], [1, 1], [conn1, conn2])


def scalar_multiple(weight, q: CourantData) -> CourantData:
    """Scale the pairing by the weight and the coanchor by its inverse.

    This is the single-summand combination in closed form, valid for any
    structure (not just exact ones)."""
    w = Fraction(weight)
    if w == 0:
        raise ValidationError("scalar multiple needs a nonzero weight")
    w_inv = 1 / w
    pairing = tuple(
        tuple(w * p for p in row) for row in q.pairing
    )
    coanchor = tuple(
        tuple(w_inv * p for p in row) for row in q.coanchor
    )
    return CourantData(
        q.chart, q.rank, q.anchor, coanchor, pairing, dict(q.structure)
    )
