"""Inverse images of Courant structures along chart maps.

The ambient model of the inverse image along f: Y -> X holds triples
(beta, u, eta) with beta a one-form on Y, u a pulled section (coefficients
on Y against the generators of the structure on X), and eta a vector field
on Y, constrained by the fiber product f*(anchor)(u) = df(eta). The class
module divides by one relation generator per X-coordinate,

    R_k = (d f_k, -f*(coanchor dx_k), 0),

which is isotropic and bracket-closed against everything (checkable with
check_relation_absorption). Pairing and bracket of triples:

    <x1, x2>  = f*<u1, u2> + beta1(eta2) + beta2(eta1)
    {x1, x2}  = ( -i_{eta2} d beta1 + L_{eta1} beta2 + sum u2_b f*(g_ab) du1_a,
                  sum u1_a u2_b f*(structure^k_ab) + eta1(u2_k) - eta2(u1_k),
                  [eta1, eta2] )

Four presentations are supported: identity (returns the structure), an
exact split presentation over a chosen connection (basis: connection lifts
of the coordinate fields plus the coordinate one-form lines), coordinate
embeddings (constraint solve plus division by the pulled conormal
directions), and coordinate submersions including invertible coordinate
changes. Every reduction is verified by exhibiting the exact relation
combination; failures raise ValidationError.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from algebroids import linalg
from algebroids.courant import (
    Connection,
    CourantData,
    baer_combination,
    coordinate_connection,
    curvature,
    twist,
)
from algebroids.dirac import DiracData, restrict_poly, restricted_chart
from algebroids.errors import (
    ChartMismatchError,
    UnsupportedModeError,
    ValidationError,
)
from algebroids.lie_algebroid import classify_map
from algebroids.linalg import (
    Vec,
    unit_vec,
    vec_add,
    vec_eq,
    vec_is_zero,
    vec_scale,
    zero_vec,
)
from algebroids.report import Report
from algebroids.symcalc import Chart, ChartMap, KForm, Poly, VField

MODES = (
    "identity",
    "exact-split",
    "coordinate-embedding",
    "coordinate-submersion",
)

Triple = tuple[Vec, Vec, Vec]


def _one_form(chart: Chart, coeffs: Vec) -> KForm:
    return KForm(chart, 1, {(j,): coeffs[j] for j in range(chart.dim)})


def _form_vec(form: KForm) -> Vec:
    return tuple(form.component((j,)) for j in range(form.chart.dim))


@dataclass
class CourantPullback:
    """A presented inverse image; basis holds ambient representatives."""

    map: ChartMap
    source: CourantData
    result: CourantData | None
    basis: tuple[Triple, ...]
    mode: str
    _reducer: object  # callable Triple -> (class coords, relation coeffs)

    @property
    def chart(self) -> Chart:
        return self.map.source

    # -- pulled structure tables (cached) ------------------------------------

    def _pulled(self):
        if not hasattr(self, "_cache"):
            f, q = self.map, self.source
            self._cache = {
                "anchor": [
                    [f.pull(p) for p in row] for row in q.anchor
                ],
                "coanchor": [
                    [f.pull(p) for p in row] for row in q.coanchor
                ],
                "pairing": [
                    [f.pull(p) for p in row] for row in q.pairing
                ],
                "structure": {
                    key: tuple(f.pull(p) for p in vec)
                    for key, vec in q.structure.items()
                },
                "jac": f.jacobian(),
            }
        return self._cache

    # -- ambient operations ---------------------------------------------------

    def relation(self, k: int) -> Triple:
        """(d f_k, -pulled coanchor row k, 0)."""
        chart = self.chart
        tables = self._pulled()
        beta = tuple(tables["jac"][k][j] for j in range(chart.dim))
        u = tuple(-p for p in tables["coanchor"][k])
        return (beta, u, zero_vec(chart, chart.dim))

    def zero_triple(self) -> Triple:
        chart = self.chart
        return (
            zero_vec(chart, chart.dim),
            zero_vec(chart, self.source.rank),
            zero_vec(chart, chart.dim),
        )

    def triple_combine(self, *scaled: tuple[Poly, Triple]) -> Triple:
        beta, u, eta = self.zero_triple()
        for coeff, t in scaled:
            if coeff.is_zero:
                continue
            beta = vec_add(beta, vec_scale(coeff, t[0]))
            u = vec_add(u, vec_scale(coeff, t[1]))
            eta = vec_add(eta, vec_scale(coeff, t[2]))
        return (beta, u, eta)

    def in_fiber_product(self, t: Triple) -> bool:
        tables = self._pulled()
        beta, u, eta = t
        for k in range(self.source.chart.dim):
            acc = Poly.zero(self.chart)
            for a in range(self.source.rank):
                if not u[a].is_zero:
                    acc = acc + u[a] * tables["anchor"][a][k]
            for j in range(self.chart.dim):
                acc = acc - eta[j] * tables["jac"][k][j]
            if not acc.is_zero:
                return False
        return True

    def ambient_pairing(self, t1: Triple, t2: Triple) -> Poly:
        tables = self._pulled()
        beta1, u1, eta1 = t1
        beta2, u2, eta2 = t2
        acc = Poly.zero(self.chart)
        for a in range(self.source.rank):
            if u1[a].is_zero:
                continue
            for b in range(self.source.rank):
                g = tables["pairing"][a][b]
                if not u2[b].is_zero and not g.is_zero:
                    acc = acc + u1[a] * u2[b] * g
        for j in range(self.chart.dim):
            acc = acc + beta1[j] * eta2[j] + beta2[j] * eta1[j]
        return acc

    def ambient_bracket(self, t1: Triple, t2: Triple) -> Triple:
        tables = self._pulled()
        chart = self.chart
        beta1, u1, eta1 = t1
        beta2, u2, eta2 = t2
        f1, f2 = VField(chart, eta1), VField(chart, eta2)
        r = self.source.rank

        tangent = f1.bracket(f2).comps
        tensor = list(zero_vec(chart, r))
        for a in range(r):
            if u1[a].is_zero:
                continue
            for b in range(r):
                if u2[b].is_zero:
                    continue
                gen = tables["structure"].get((a, b))
                if gen is None:
                    continue
                coeff = u1[a] * u2[b]
                for k in range(r):
                    if not gen[k].is_zero:
                        tensor[k] = tensor[k] + coeff * gen[k]
        for k in range(r):
            tensor[k] = tensor[k] + f1.apply(u2[k]) - f2.apply(u1[k])

        form = _one_form(chart, beta2).lie(f1)
        db1 = _one_form(chart, beta1).d()
        form = form + KForm(
            chart, 1, {(j,): -p for (j,), p in db1.iota(f2).comps.items()}
        )
        for a in range(r):
            if u1[a].as_constant() is not None:
                continue
            weight = Poly.zero(chart)
            for b in range(r):
                g = tables["pairing"][a][b]
                if not u2[b].is_zero and not g.is_zero:
                    weight = weight + u2[b] * g
            if weight.is_zero:
                continue
            du = KForm(
                chart, 1, {(j,): u1[a].diff(j) for j in range(chart.dim)}
            )
            form = form + KForm(
                chart,
                1,
                {idx: weight * p for idx, p in du.comps.items()},
            )
        return (_form_vec(form), tuple(tensor), tuple(tangent))

    # -- class operations ------------------------------------------------------

    def expand(self, cls: Vec) -> Triple:
        return self.triple_combine(
            *[(cls[c], self.basis[c]) for c in range(len(self.basis))]
        )

    def reduce(self, t: Triple) -> Vec:
        cls, rel = self._reducer(t)
        rep = self.expand(cls)
        combo = self.triple_combine(
            *[
                (rel[k], self.relation(k))
                for k in range(self.source.chart.dim)
            ]
        )
        for slot in range(3):
            got = vec_add(rep[slot], combo[slot])
            if not vec_eq(got, t[slot]):
                raise ValidationError(
                    "triple is not in the pullback fiber product"
                )
        return cls


def _finish(
    f: ChartMap,
    q: CourantData,
    basis: list[Triple],
    reducer,
    mode: str,
) -> CourantPullback:
    pb = CourantPullback(f, q, None, tuple(basis), mode, reducer)
    chart = f.source
    r = len(basis)
    anchor = tuple(tuple(t[2]) for t in basis)
    coanchor = []
    for j in range(chart.dim):
        form = (
            unit_vec(chart, chart.dim, j),
            zero_vec(chart, q.rank),
            zero_vec(chart, chart.dim),
        )
        coanchor.append(pb.reduce(form))
    pairing = tuple(
        tuple(pb.ambient_pairing(basis[x], basis[y]) for y in range(r))
        for x in range(r)
    )
    structure = {}
    for x in range(r):
        for y in range(r):
            got = pb.reduce(pb.ambient_bracket(basis[x], basis[y]))
            if not vec_is_zero(got):
                structure[(x, y)] = got
    pb.result = CourantData(
        chart, r, anchor, tuple(coanchor), pairing, structure
    )
    return pb


# ---------------------------------------------------------------------------
# Mode constructions
# ---------------------------------------------------------------------------


def _pullback_identity(f: ChartMap, q: CourantData) -> CourantPullback:
    chart = f.source
    r = q.rank
    basis = [
        (zero_vec(chart, chart.dim), q.gen(a), tuple(q.anchor[a]))
        for a in range(r)
    ]

    def reducer(t: Triple):
        beta, u, eta = t
        cls = list(u)
        for k in range(chart.dim):
            if beta[k].is_zero:
                continue
            for a in range(r):
                row = q.coanchor[k][a]
                if not row.is_zero:
                    cls[a] = cls[a] + beta[k] * row
        return tuple(cls), tuple(beta)

    return _finish(f, q, basis, reducer, "identity")


def _coanchor_left_inverse(q: CourantData):
    matrix = [
        [q.coanchor[k][a] for k in range(q.chart.dim)]
        for a in range(q.rank)
    ]
    if q.chart.dim == 0:
        return []
    left = linalg.constant_left_inverse(matrix)
    if left is None:
        raise UnsupportedModeError(
            "the coanchor has no constant left inverse in this basis"
        )
    return left


def _pullback_exact_split(
    f: ChartMap, q: CourantData, conn: Connection
) -> CourantPullback:
    chart = f.source
    n = q.chart.dim
    m = chart.dim
    if q.rank != 2 * n:
        raise UnsupportedModeError(
            "exact-split mode needs rank twice the target dimension"
        )
    if conn.courant != q:
        raise ValidationError("connection does not belong to the structure")
    left = _coanchor_left_inverse(q)
    jac = f.jacobian()
    pulled_cols = [
        [f.pull(p) for p in conn.columns[k]] for k in range(n)
    ]

    basis: list[Triple] = []
    for i in range(m):
        u = list(zero_vec(chart, q.rank))
        for k in range(n):
            if jac[k][i].is_zero:
                continue
            for a in range(q.rank):
                if not pulled_cols[k][a].is_zero:
                    u[a] = u[a] + jac[k][i] * pulled_cols[k][a]
        basis.append(
            (zero_vec(chart, m), tuple(u), unit_vec(chart, m, i))
        )
    for j in range(m):
        basis.append(
            (
                unit_vec(chart, m, j),
                zero_vec(chart, q.rank),
                zero_vec(chart, m),
            )
        )

    def reducer(t: Triple):
        beta, u, eta = t
        vert = list(u)
        for i in range(m):
            if eta[i].is_zero:
                continue
            for a in range(q.rank):
                bu = basis[i][1][a]
                if not bu.is_zero:
                    vert[a] = vert[a] - eta[i] * bu
        alpha = []
        for k in range(n):
            acc = Poly.zero(chart)
            for a in range(q.rank):
                if left[k][a] and not vert[a].is_zero:
                    acc = acc + left[k][a] * vert[a]
            alpha.append(acc)
        omega = list(beta)
        for k in range(n):
            if alpha[k].is_zero:
                continue
            for j in range(m):
                if not jac[k][j].is_zero:
                    omega[j] = omega[j] + alpha[k] * jac[k][j]
        cls = tuple(eta) + tuple(omega)
        return cls, tuple(-a for a in alpha)

    return _finish(f, q, basis, reducer, "exact-split")


def _submersion_lifts(f: ChartMap):
    """Tangent lift of each target coordinate field, plus the beta solver.

    Returns (lifts, solver, vertical) where lifts[k] is a source tangent
    vector pushing to the k-th target field, solver(beta) gives the relation
    coefficients absorbing the horizontal part of a one-form, and vertical
    lists the source slots not hit by the map.
    """
    chart = f.source
    n = f.target.dim
    slots = []
    invertible = False
    for k in range(n):
        comp = f.comps[k]
        slot = None
        for j in range(chart.dim):
            if comp == Poly.coord(chart, j):
                slot = j
                break
        if slot is None:
            invertible = True
            break
        slots.append(slot)
    if not invertible and len(set(slots)) == len(slots):
        lifts = [unit_vec(chart, chart.dim, s) for s in slots]
        vertical = [j for j in range(chart.dim) if j not in slots]

        def solver(beta: Vec) -> Vec:
            return tuple(beta[s] for s in slots)

        return lifts, solver, vertical

    if chart.dim != n:
        raise UnsupportedModeError(
            "submersion mode needs plain coordinates or a square invertible "
            "map"
        )
    jac = f.jacobian()
    det = linalg.poly_det(jac)
    c = det.as_constant()
    if c is None or c == 0:
        raise UnsupportedModeError(
            "square map must have constant nonzero jacobian determinant"
        )
    adj = linalg.poly_adjugate(jac)
    scale = Fraction(1) / c
    inv = [[scale * p for p in row] for row in adj]
    lifts = [
        tuple(inv[j][k] for j in range(n)) for k in range(n)
    ]

    def solver(beta: Vec) -> Vec:
        out = []
        for k in range(n):
            acc = Poly.zero(chart)
            for j in range(n):
                if not beta[j].is_zero and not inv[j][k].is_zero:
                    acc = acc + inv[j][k] * beta[j]
            out.append(acc)
        return tuple(out)

    return lifts, solver, []


def _pullback_submersion(f: ChartMap, q: CourantData) -> CourantPullback:
    chart = f.source
    n = q.chart.dim
    r = q.rank
    lifts, solver, vertical = _submersion_lifts(f)
    pulled_anchor = [[f.pull(p) for p in row] for row in q.anchor]
    pulled_coanchor = [[f.pull(p) for p in row] for row in q.coanchor]

    basis: list[Triple] = []
    etas = []
    for a in range(r):
        eta = list(zero_vec(chart, chart.dim))
        for k in range(n):
            coeff = pulled_anchor[a][k]
            if coeff.is_zero:
                continue
            for j in range(chart.dim):
                if not lifts[k][j].is_zero:
                    eta[j] = eta[j] + coeff * lifts[k][j]
        etas.append(tuple(eta))
        basis.append(
            (zero_vec(chart, chart.dim), unit_vec(chart, r, a), tuple(eta))
        )
    for v in vertical:
        basis.append(
            (
                zero_vec(chart, chart.dim),
                zero_vec(chart, r),
                unit_vec(chart, chart.dim, v),
            )
        )
    for v in vertical:
        basis.append(
            (
                unit_vec(chart, chart.dim, v),
                zero_vec(chart, r),
                zero_vec(chart, chart.dim),
            )
        )

    def reducer(t: Triple):
        beta, u, eta = t
        p = solver(beta)
        prime = list(u)
        for k in range(n):
            if p[k].is_zero:
                continue
            for a in range(r):
                row = pulled_coanchor[k][a]
                if not row.is_zero:
                    prime[a] = prime[a] + p[k] * row
        rem = list(eta)
        for a in range(r):
            if prime[a].is_zero:
                continue
            for j in range(chart.dim):
                if not etas[a][j].is_zero:
                    rem[j] = rem[j] - prime[a] * etas[a][j]
        cls = (
            tuple(prime)
            + tuple(rem[v] for v in vertical)
            + tuple(beta[v] for v in vertical)
        )
        return cls, tuple(p)

    return _finish(f, q, basis, reducer, "coordinate-submersion")


def _pullback_embedding(f: ChartMap, q: CourantData) -> CourantPullback:
    chart = f.source
    n = q.chart.dim
    r = q.rank
    zeroed = [k for k in range(n) if f.comps[k].is_zero]
    kept = {}
    for k in range(n):
        if k in zeroed:
            continue
        for j in range(chart.dim):
            if f.comps[k] == Poly.coord(chart, j):
                kept[k] = j
                break
        else:
            raise UnsupportedModeError(
                "embedding mode needs zero-or-coordinate components"
            )
    z = len(zeroed)

    # Constraint: pulled anchor components along the zeroed coordinates.
    constraint = [
        [f.pull(q.anchor[a][k]) for a in range(r)] for k in zeroed
    ]
    const_rows = []
    for row in constraint:
        consts = [p.constant_term() for p in row]
        const_rows.append(consts)
    _, pivots = linalg.qq_rref(const_rows) if z else ([], [])
    if len(pivots) != z:
        raise UnsupportedModeError(
            "embedding constraints do not have full constant rank"
        )
    for s in range(z):
        for a in pivots:
            if constraint[s][a].as_constant() is None:
                raise UnsupportedModeError(
                    "embedding pivot columns must be constant"
                )
    pivot_matrix = [
        [Fraction(constraint[s][a].as_constant()) for a in pivots]
        for s in range(z)
    ]
    pivot_inv = linalg.qq_inverse(pivot_matrix) if z else []
    if z and pivot_inv is None:
        raise UnsupportedModeError("embedding pivot matrix is singular")
    free = [a for a in range(r) if a not in pivots]

    def solve_member(u_vec: Vec) -> Vec:
        """Correct the pivot slots so the constraints hold exactly."""
        vals = []
        for s in range(z):
            acc = Poly.zero(chart)
            for a in range(r):
                if not u_vec[a].is_zero and not constraint[s][a].is_zero:
                    acc = acc + u_vec[a] * constraint[s][a]
            vals.append(acc)
        out = list(u_vec)
        for t_i, a in enumerate(pivots):
            corr = Poly.zero(chart)
            for s in range(z):
                if pivot_inv[t_i][s] and not vals[s].is_zero:
                    corr = corr + pivot_inv[t_i][s] * vals[s]
            out[a] = out[a] - corr
        return tuple(out)

    members = {}
    for a in free:
        members[a] = solve_member(
            tuple(
                Poly.one(chart) if b == a else Poly.zero(chart)
                for b in range(r)
            )
        )

    pulled_coanchor = [[f.pull(p) for p in row] for row in q.coanchor]
    conormal_rows = []
    for k in zeroed:
        vec = pulled_coanchor[k]
        row = []
        for a in free:
            c = vec[a].as_constant()
            if c is None:
                raise UnsupportedModeError(
                    "pulled conormal directions must be constant in the "
                    "free coordinates"
                )
            row.append(Fraction(c))
        # The conormal must coincide with the member it determines.
        if not vec_eq(tuple(vec), _combine_members(chart, members, free, row)):
            raise UnsupportedModeError(
                "pulled conormal directions escape the constraint solve"
            )
        conormal_rows.append(row)
    if linalg.qq_rank(conormal_rows) != z:
        raise UnsupportedModeError(
            "pulled conormal directions are dependent"
        )

    complement = []
    rows = [list(rr) for rr in conormal_rows]
    for idx in range(len(free)):
        cand = rows + [[Fraction(i == idx) for i in range(len(free))]]
        if linalg.qq_rank(cand) > len(rows):
            rows = cand
            complement.append(idx)
    basis_rows = conormal_rows + [
        [Fraction(i == idx) for i in range(len(free))] for idx in complement
    ]
    inv = linalg.qq_inverse(linalg.transpose(basis_rows))
    if inv is None:
        raise UnsupportedModeError("conormal directions have no complement")

    pulled_anchor = [[f.pull(p) for p in row] for row in q.anchor]

    def eta_of(u_vec: Vec) -> Vec:
        eta = list(zero_vec(chart, chart.dim))
        for k, j in kept.items():
            acc = Poly.zero(chart)
            for a in range(r):
                if not u_vec[a].is_zero and not pulled_anchor[a][k].is_zero:
                    acc = acc + u_vec[a] * pulled_anchor[a][k]
            eta[j] = acc
        return tuple(eta)

    basis: list[Triple] = []
    for idx in complement:
        u_vec = members[free[idx]]
        basis.append((zero_vec(chart, chart.dim), u_vec, eta_of(u_vec)))

    def reducer(t: Triple):
        beta, u, eta = t
        p = [Poly.zero(chart)] * n
        prime = list(u)
        for k, j in kept.items():
            p[k] = beta[j]
            if beta[j].is_zero:
                continue
            for a in range(r):
                row = pulled_coanchor[k][a]
                if not row.is_zero:
                    prime[a] = prime[a] + beta[j] * row
        coords = [prime[a] for a in free]
        # Split into conormal span + complement through the constant inverse.
        cls = []
        for pos in range(len(basis_rows)):
            acc = Poly.zero(chart)
            for i in range(len(free)):
                if inv[pos][i]:
                    acc = acc + inv[pos][i] * coords[i]
            cls.append(acc)
        for s, k in enumerate(zeroed):
            p[k] = -cls[s]
        return tuple(cls[z:]), tuple(p)

    return _finish(f, q, basis, reducer, "coordinate-embedding")


def _combine_members(chart, members, free, row) -> Vec:
    out = None
    for idx, a in enumerate(free):
        scaled = vec_scale(Poly.const(chart, row[idx]), members[a])
        out = scaled if out is None else vec_add(out, scaled)
    if out is None:
        return ()
    return out


def pullback_courant(
    f: ChartMap,
    q: CourantData,
    mode: str | None = None,
    connection: Connection | None = None,
) -> CourantPullback:
    """Present the inverse image of q along f.

    mode=None auto-classifies the map; pass "exact-split" together with a
    connection to use the split presentation of an exact structure.
    """
    if f.target != q.chart:
        raise ChartMismatchError("map target must be the structure's chart")
    if connection is not None and mode is None:
        mode = "exact-split"
    if mode is None:
        mode = classify_map(f)
        if mode == "transitive-split":
            raise UnsupportedModeError(
                "transitive-split is not a Courant presentation"
            )
    if mode not in MODES:
        raise UnsupportedModeError(f"unknown mode {mode!r}")
    if mode == "identity":
        if f.source != f.target:
            raise UnsupportedModeError("identity mode needs equal charts")
        return _pullback_identity(f, q)
    if mode == "exact-split":
        if connection is None:
            raise ValidationError("exact-split mode needs a connection")
        return _pullback_exact_split(f, q, connection)
    if mode == "coordinate-embedding":
        return _pullback_embedding(f, q)
    return _pullback_submersion(f, q)


# ---------------------------------------------------------------------------
# Checks on presentations
# ---------------------------------------------------------------------------


def check_relation_absorption(pb: CourantPullback) -> Report:
    """The relation generators pair to zero with everything and bracket back
    into the relation span (class zero), on all basis elements."""
    rep = Report()
    n = pb.source.chart.dim
    rels = [pb.relation(k) for k in range(n)]

    bad = None
    for k in range(n):
        for c, b in enumerate(pb.basis):
            got = pb.ambient_pairing(rels[k], b)
            if not got.is_zero:
                bad = f"relation {k} against basis {c}: {got}"
                break
        if bad:
            break
        for l in range(n):
            got = pb.ambient_pairing(rels[k], rels[l])
            if not got.is_zero:
                bad = f"relations ({k},{l}): {got}"
                break
        if bad:
            break
    rep.add("relations_isotropic", bad is None, bad)

    bad = None
    for k in range(n):
        for c, b in enumerate(pb.basis):
            left = pb.reduce(pb.ambient_bracket(rels[k], b))
            right = pb.reduce(pb.ambient_bracket(b, rels[k]))
            if not vec_is_zero(left):
                bad = f"relation {k} bracket basis {c}"
                break
            if not vec_is_zero(right):
                bad = f"basis {c} bracket relation {k}"
                break
        if bad:
            break
        for l in range(n):
            got = pb.reduce(pb.ambient_bracket(rels[k], rels[l]))
            if not vec_is_zero(got):
                bad = f"relations ({k},{l})"
                break
        if bad:
            break
    rep.add("relations_bracket_closed", bad is None, bad)
    return rep


def pullback_connection(pb: CourantPullback, conn: Connection) -> Connection:
    """The pulled connection: classes of (0, f*(conn(df d_i)), d_i)."""
    if conn.courant != pb.source:
        raise ValidationError("connection does not belong to the structure")
    f = pb.map
    chart = pb.chart
    jac = f.jacobian()
    pulled_cols = [
        [f.pull(p) for p in conn.columns[k]]
        for k in range(pb.source.chart.dim)
    ]
    cols = []
    for i in range(chart.dim):
        u = list(zero_vec(chart, pb.source.rank))
        for k in range(pb.source.chart.dim):
            if jac[k][i].is_zero:
                continue
            for a in range(pb.source.rank):
                if not pulled_cols[k][a].is_zero:
                    u[a] = u[a] + jac[k][i] * pulled_cols[k][a]
        cols.append(
            pb.reduce(
                (zero_vec(chart, chart.dim), tuple(u), unit_vec(chart, chart.dim, i))
            )
        )
    return Connection(pb.result, tuple(cols))


def check_twist_commute(
    f: ChartMap,
    q: CourantData,
    h: KForm,
    mode: str | None = None,
    connection: Connection | None = None,
) -> Report:
    """Pulling back then twisting by the pulled form equals twisting first.

    Both routes are presented in the same basis, so the comparison is plain
    data equality (frame fields, then structure functions)."""
    rep = Report()
    pb_plain = pullback_courant(f, q, mode, connection)
    route1 = twist(pb_plain.result, f.pullback_form(h))
    twisted = twist(q, h)
    conn2 = None
    if connection is not None:
        conn2 = Connection(twisted, connection.columns)
    pb_twisted = pullback_courant(f, twisted, mode, conn2)
    route2 = pb_twisted.result

    bad = None
    if route1.anchor != route2.anchor:
        bad = "anchor tables differ"
    elif route1.coanchor != route2.coanchor:
        bad = "coanchor tables differ"
    elif route1.pairing != route2.pairing:
        bad = "pairing tables differ"
    rep.add("twist_commute_frame", bad is None, bad)

    bad = None
    keys = set(route1.structure) | set(route2.structure)
    for key in sorted(keys):
        lhs = route1.structure.get(key, route1.zero_section())
        rhs = route2.structure.get(key, route2.zero_section())
        if not vec_eq(lhs, rhs):
            bad = f"generators {key}"
            break
    rep.add("twist_commute_structure", bad is None, bad)
    return rep


def check_curvature_pullback(
    pb: CourantPullback, conn: Connection
) -> Report:
    """curvature(pulled connection) equals the pulled curvature form."""
    rep = Report()
    pulled = pullback_connection(pb, conn)
    lhs = curvature(pulled)
    rhs = pb.map.pullback_form(curvature(conn))
    ok = lhs == rhs
    rep.add(
        "curvature_pullback_matches",
        ok,
        None if ok else f"got {lhs}, expected {rhs}",
    )
    return rep


# ---------------------------------------------------------------------------
# Supported Dirac structures through a presentation
# ---------------------------------------------------------------------------


def conormal(f: ChartMap) -> tuple[KForm, ...]:
    """Conormal one-forms of a coordinate embedding, one per cut coordinate.

    The map must send distinct source coordinates to some of the target
    coordinates and zero to the rest; the zeroed ones cut out the image
    locus, and the result is the constant form dx_k on the target chart for
    each such k, in index order. Since the coefficients are constant, the
    restriction to the locus is the same data, so no restricted copy is
    kept. A map that cuts nothing (identity, coordinate relabelling) gives
    the empty tuple.
    """
    chart = f.source
    zeroed = []
    used = []
    for k in range(f.target.dim):
        if f.comps[k].is_zero:
            zeroed.append(k)
            continue
        for j in range(chart.dim):
            if f.comps[k] == Poly.coord(chart, j):
                used.append(j)
                break
        else:
            raise ValidationError("the map is not a coordinate embedding")
    if len(set(used)) != len(used) or set(used) != set(range(chart.dim)):
        raise ValidationError("the map is not a coordinate embedding")
    one = Poly.one(f.target)
    return tuple(KForm(f.target, 1, {(k,): one}) for k in zeroed)


def dirac_pushdown(pb: CourantPullback, d: DiracData) -> DiracData:
    """Push a supported Dirac structure down to the embedded locus.

    The support of d must match the zeroed coordinates of the presentation
    map, whose source chart is the restricted chart of d. Requires the
    conormal coanchor directions to lie in the span (checked through the
    pairing, the span being maximal isotropic); generators are reduced
    through the presentation and an independent subset is returned.
    """
    if d.courant != pb.source:
        raise ValidationError("Dirac structure lives on a different structure")
    if pb.mode != "coordinate-embedding":
        raise ValidationError("pushdown needs an embedding presentation")
    if pb.chart != d.sub_chart:
        raise ValidationError(
            "presentation source must be the restricted chart of the support"
        )
    q = d.courant
    f = pb.map
    zeroed = [k for k in range(q.chart.dim) if f.comps[k].is_zero]
    support_idx = sorted(q.chart.index(name) for name in d.support)
    if zeroed != support_idx:
        raise ValidationError(
            "presentation map does not cut out the support locus"
        )
    g = d.restricted_pairing()
    for k in zeroed:
        conormal = tuple(d.restrict(p) for p in q.coanchor[k])
        for l, gen in enumerate(d.generators):
            got = d.pair_restricted(conormal, gen, g)
            if not got.is_zero:
                raise ValidationError(
                    f"conormal direction {q.chart.coords[k]} is not in the "
                    f"span (pairs to {got} with generator {l})"
                )
    chart = pb.chart
    classes = []
    pulled_anchor = [[f.pull(p) for p in row] for row in q.anchor]
    for gen in d.generators:
        eta = list(zero_vec(chart, chart.dim))
        for k in range(q.chart.dim):
            if k in zeroed:
                continue
            j = None
            for jj in range(chart.dim):
                if f.comps[k] == Poly.coord(chart, jj):
                    j = jj
                    break
            acc = Poly.zero(chart)
            for a in range(q.rank):
                if not gen[a].is_zero and not pulled_anchor[a][k].is_zero:
                    acc = acc + gen[a] * pulled_anchor[a][k]
            eta[j] = acc
        cls = pb.reduce((zero_vec(chart, chart.dim), tuple(gen), tuple(eta)))
        classes.append(cls)
    keep = linalg.select_independent(classes)
    selected = tuple(classes[i] for i in keep)
    needed = pb.result.rank // 2
    if len(selected) != needed:
        raise ValidationError(
            f"pushdown produced {len(selected)} independent generators, "
            f"needed {needed}"
        )
    return DiracData(pb.result, selected, ())


def morphism_graph(
    f: ChartMap, q: CourantData, connection: Connection
) -> DiracData:
    """The graph of the inverse-image relation as a supported Dirac structure.

    Lives on a product chart (source coordinates first, target coordinates
    renamed with a w_ prefix) carrying the weighted (1, -1) combination of
    the two projected inverse images, sheared so the graph of f becomes the
    locus where the renamed coordinates vanish. Generators: connection lifts
    of the graph tangents plus the conormal coanchor directions. check_dirac
    on the output doubles as a test that the two routes around f agree."""
    ychart, xchart = f.source, f.target
    m, n = ychart.dim, xchart.dim
    w_names = tuple("w_" + c for c in xchart.coords)
    prod = Chart(f"{ychart.name}*{xchart.name}", ychart.coords + w_names)
    pr_y = ChartMap(prod, ychart, tuple(Poly.coord(prod, j) for j in range(m)))
    pr_x = ChartMap(
        prod, xchart, tuple(Poly.coord(prod, m + k) for k in range(n))
    )

    pb_f = pullback_courant(f, q, "exact-split", connection)
    conn_a = pullback_connection(pb_f, connection)
    pb_ay = pullback_courant(pr_y, pb_f.result)
    pb_qx = pullback_courant(pr_x, q)
    comb = baer_combination(
        [pb_ay.result, pb_qx.result],
        [1, -1],
        [
            pullback_connection(pb_ay, conn_a),
            pullback_connection(pb_qx, connection),
        ],
    )

    shear = ChartMap(
        prod,
        prod,
        tuple(Poly.coord(prod, j) for j in range(m))
        + tuple(
            Poly.coord(prod, m + k) + pr_y.pull(f.comps[k]) for k in range(n)
        ),
    )
    pb_m = pullback_courant(shear, comb.result)
    sheared = pb_m.result
    lifts = pullback_connection(pb_m, coordinate_connection(comb.result))

    sub = restricted_chart(prod, w_names)
    gens = []
    for j in range(m):
        gens.append(
            tuple(restrict_poly(p, prod, w_names, sub) for p in lifts.columns[j])
        )
    for k in range(n):
        gens.append(
            tuple(
                restrict_poly(p, prod, w_names, sub)
                for p in sheared.coanchor[m + k]
            )
        )
    return DiracData(sheared, tuple(gens), w_names)
