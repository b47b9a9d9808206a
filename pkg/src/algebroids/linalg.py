"""Exact linear algebra helpers over Q and over polynomial rings.

Two layers:

* Fraction matrices (lists of lists of Fraction): rref, rank, solving,
  nullspace, inverse. Used wherever the relevant coefficients are constants
  (complement selection, relation reduction, cocycle algebra).
* Poly matrices/vectors: structural operations plus fraction-free Gaussian
  elimination for ranks "at the generic point", cofactor determinants and
  adjugate inverses for small matrices with unit determinant, and a
  bounded-degree membership solver for module spans.

Sections of rank-r objects are represented throughout the package as tuples
of r polynomials; the vec_* helpers here operate on those.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from algebroids.errors import ValidationError
from algebroids.symcalc import Chart, Poly

Vec = tuple[Poly, ...]


# ---------------------------------------------------------------------------
# Section vectors
# ---------------------------------------------------------------------------


def zero_vec(chart: Chart, n: int) -> Vec:
    z = Poly.zero(chart)
    return tuple(z for _ in range(n))


def unit_vec(chart: Chart, n: int, i: int) -> Vec:
    return tuple(
        Poly.one(chart) if j == i else Poly.zero(chart) for j in range(n)
    )


def vec_add(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b, strict=True))


def vec_sub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b, strict=True))


def vec_neg(a: Vec) -> Vec:
    return tuple(-x for x in a)


def vec_scale(f, a: Vec) -> Vec:
    return tuple(f * x for x in a)


def vec_is_zero(a: Vec) -> bool:
    return all(x.is_zero for x in a)


def vec_eq(a: Vec, b: Vec) -> bool:
    return len(a) == len(b) and all(x == y for x, y in zip(a, b))


def vec_dot(a: Vec, b: Vec, chart: Chart | None = None) -> Poly:
    if chart is None:
        chart = a[0].chart
    out = Poly.zero(chart)
    for x, y in zip(a, b, strict=True):
        out = out + x * y
    return out


def mat_vec(
    m: Sequence[Sequence[Poly]], v: Vec, chart: Chart | None = None
) -> Vec:
    return tuple(vec_dot(tuple(row), v, chart=chart) for row in m)


def mat_mul(a, b):
    return [
        [vec_dot(tuple(a[i]), tuple(col)) for col in zip(*b)] for i in range(len(a))
    ]


def transpose(m):
    return [list(col) for col in zip(*m)]


def identity_matrix(chart: Chart, n: int) -> list[list[Poly]]:
    return [
        [Poly.one(chart) if i == j else Poly.zero(chart) for j in range(n)]
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# Fraction matrices
# ---------------------------------------------------------------------------


def qq_rref(
    rows: list[list[Fraction]],
) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (rref_rows, pivot_columns)."""
    m = [list(map(Fraction, r)) for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][c]), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def qq_rank(rows: list[list[Fraction]]) -> int:
    return len(qq_rref(rows)[1])


def qq_solve(
    a: list[list[Fraction]], b: list[Fraction]
) -> list[Fraction] | None:
    """One solution of a x = b over Q, or None if inconsistent."""
    if not a:
        return [] if not any(b) else None
    aug = [list(row) + [b[i]] for i, row in enumerate(a)]
    rref, pivots = qq_rref(aug)
    ncols = len(a[0])
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for r, c in enumerate(pivots):
        x[c] = rref[r][ncols]
    return x


def qq_nullspace(a: list[list[Fraction]]) -> list[list[Fraction]]:
    """Basis of the right nullspace of a."""
    if not a:
        return []
    ncols = len(a[0])
    rref, pivots = qq_rref(a)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -rref[r][f]
        basis.append(v)
    return basis


def qq_inverse(a: list[list[Fraction]]) -> list[list[Fraction]] | None:
    n = len(a)
    aug = [list(row) + [Fraction(i == j) for j in range(n)] for i, row in enumerate(a)]
    rref, pivots = qq_rref(aug)
    if pivots != list(range(n)):
        return None
    return [row[n:] for row in rref]


# ---------------------------------------------------------------------------
# Polynomial matrices
# ---------------------------------------------------------------------------


def poly_rows_rank(rows: Sequence[Vec]) -> int:
    """Rank of a polynomial matrix at the generic point.

    Fraction-free elimination: rows are cross-multiplied, so no division
    happens and the count of nonzero pivots equals the rank over the
    fraction field.
    """
    work = [list(r) for r in rows if not vec_is_zero(tuple(r))]
    if not work:
        return 0
    ncols = len(work[0])
    rank = 0
    col = 0
    while work and col < ncols:
        pivot_row = None
        for i, row in enumerate(work):
            if not row[col].is_zero:
                if pivot_row is None or _poly_size(row[col]) < _poly_size(
                    work[pivot_row][col]
                ):
                    pivot_row = i
        if pivot_row is None:
            col += 1
            continue
        pivot = work.pop(pivot_row)
        pval = pivot[col]
        nxt = []
        for row in work:
            if row[col].is_zero:
                nxt.append(row)
                continue
            rv = row[col]
            new = [pval * row[j] - rv * pivot[j] for j in range(ncols)]
            if any(not p.is_zero for p in new):
                nxt.append(new)
        work = nxt
        rank += 1
        col += 1
    return rank


def _poly_size(p: Poly) -> tuple[int, int]:
    return (p.degree(), len(p.terms))


def select_independent(rows: Sequence[Vec]) -> list[int]:
    """Indices of a maximal generically independent subset, greedily."""
    chosen: list[int] = []
    current: list[Vec] = []
    rank = 0
    for i, row in enumerate(rows):
        cand = current + [row]
        r = poly_rows_rank(cand)
        if r > rank:
            chosen.append(i)
            current = cand
            rank = r
    return chosen


def poly_det(m: Sequence[Sequence[Poly]]) -> Poly:
    """Determinant by cofactor expansion (fine for the small sizes here)."""
    n = len(m)
    if n == 0:
        raise ValidationError("determinant of an empty matrix")
    chart = m[0][0].chart
    if n == 1:
        return m[0][0]
    out = Poly.zero(chart)
    for j in range(n):
        a = m[0][j]
        if a.is_zero:
            continue
        minor = [
            [m[i][k] for k in range(n) if k != j] for i in range(1, n)
        ]
        term = a * poly_det(minor)
        out = out + term if j % 2 == 0 else out - term
    return out


def poly_adjugate(m: Sequence[Sequence[Poly]]) -> list[list[Poly]]:
    n = len(m)
    chart = m[0][0].chart
    if n == 1:
        return [[Poly.one(chart)]]
    adj = [[Poly.zero(chart)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [m[r][c] for c in range(n) if c != j]
                for r in range(n)
                if r != i
            ]
            cof = poly_det(minor)
            adj[j][i] = cof if (i + j) % 2 == 0 else -cof
    return adj


def poly_inverse_unit_det(m: Sequence[Sequence[Poly]]) -> list[list[Poly]]:
    """Inverse of a polynomial matrix whose determinant is a nonzero constant."""
    det = poly_det(m)
    c = det.as_constant()
    if c is None or c == 0:
        raise ValidationError(
            f"matrix determinant {det} is not a nonzero constant; no polynomial inverse"
        )
    inv_c = Fraction(1) / c
    adj = poly_adjugate(m)
    return [[inv_c * e for e in row] for row in adj]


# ---------------------------------------------------------------------------
# Constant-coefficient solving with polynomial right-hand sides
# ---------------------------------------------------------------------------


def solve_constant_system(
    a: list[list[Fraction]], rhs: Vec
) -> Vec | None:
    """Solve a x = rhs where a is a constant matrix and rhs has Poly entries.

    Works monomial by monomial (the system is Q-linear in each coefficient).
    Returns None when inconsistent.
    """
    if not rhs:
        return ()
    chart = rhs[0].chart
    if not a:
        return () if all(p.is_zero for p in rhs) else None
    ncols = len(a[0])
    monomials = sorted({m for p in rhs for m in p.terms})
    x_terms: list[dict] = [dict() for _ in range(ncols)]
    for mono in monomials:
        b = [p.terms.get(mono, Fraction(0)) for p in rhs]
        sol = qq_solve(a, b)
        if sol is None:
            return None
        for j, c in enumerate(sol):
            if c:
                x_terms[j][mono] = c
    out = tuple(Poly(chart, t) for t in x_terms)
    # Defensive re-check (cheap, and guards pivot bookkeeping).
    recon = mat_vec(
        [[Poly.const(chart, e) for e in row] for row in a], out
    ) if a else ()
    for got, want in zip(recon, rhs, strict=True):
        if got != want:
            return None
    return out


def constant_matrix(m: Sequence[Sequence[Poly]]) -> list[list[Fraction]] | None:
    """The Fraction matrix when every entry is constant, else None."""
    out = []
    for row in m:
        raw = []
        for e in row:
            c = e.as_constant()
            if c is None:
                return None
            raw.append(c)
        out.append(raw)
    return out


def membership_witness(
    gens: Sequence[Vec], v: Vec, chart: Chart, degree_bound: int
) -> list[Poly] | None:
    """Polynomial multipliers expressing v in the module span of gens.

    Solves for multipliers of total degree <= degree_bound by comparing
    coefficients; returns the multiplier list or None if no solution exists
    within the bound. Exact in the positive direction; a None is only
    conclusive up to the stated bound (callers record the bound).
    """
    if vec_is_zero(v):
        return [Poly.zero(chart) for _ in gens]
    if not gens:
        return None
    n = len(v)
    monos = _monomials_up_to(chart.dim, degree_bound)
    unknowns = [(g, m) for g in range(len(gens)) for m in monos]
    # Equations: for each component i and each monomial mu of the products.
    rows: dict[tuple[int, tuple[int, ...]], dict[int, Fraction]] = {}
    for col, (g, m) in enumerate(unknowns):
        for i in range(n):
            p = gens[g][i]
            for exps, c in p.terms.items():
                key = (i, tuple(a + b for a, b in zip(exps, m)))
                bucket = rows.setdefault(key, {})
                bucket[col] = bucket.get(col, Fraction(0)) + c
    for i in range(n):
        for exps, c in v[i].terms.items():
            rows.setdefault((i, exps), {})
    keys = sorted(rows)
    a = [
        [rows[k].get(col, Fraction(0)) for col in range(len(unknowns))]
        for k in keys
    ]
    b = [
        v[k[0]].terms.get(k[1], Fraction(0))
        for k in keys
    ]
    sol = qq_solve(a, b)
    if sol is None:
        return None
    mults = []
    for g in range(len(gens)):
        terms = {}
        for col, (gg, m) in enumerate(unknowns):
            if gg == g and sol[col]:
                terms[m] = sol[col]
        mults.append(Poly(chart, terms))
    return mults


def _monomials_up_to(dim: int, degree: int) -> list[tuple[int, ...]]:
    if dim == 0:
        return [()]
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            for e in range(remaining + 1):
                out.append(prefix + (e,))
            return
        for e in range(remaining + 1):
            rec(prefix + (e,), remaining - e, slots - 1)

    rec((), degree, dim)
    return sorted(out)


def constant_left_inverse(
    m: Sequence[Sequence[Poly]],
) -> list[list[Fraction]] | None:
    """A constant matrix L with L m = identity, when one exists.

    m is an n x k polynomial matrix (n rows, k columns); the result L is
    k x n with L m = I_k. The equation is linear over Q in the entries of L
    once m is split into its monomial layers: L applied to each layer must
    give the identity on the constant layer and zero elsewhere.
    """
    n = len(m)
    if n == 0:
        return None
    k = len(m[0])
    zero_exps = (0,) * m[0][0].chart.dim
    monomials = sorted(
        {mono for row in m for p in row for mono in p.terms} | {zero_exps}
    )
    # Unknown row y (length n) of L solves, for each column j and layer mu:
    #   sum_i y_i * coeff(m[i][j], mu) = target.
    eq_rows = []
    for j in range(k):
        for mono in monomials:
            eq_rows.append(
                (
                    [m[i][j].terms.get(mono, Fraction(0)) for i in range(n)],
                    j,
                    mono == zero_exps,
                )
            )
    a = [row for row, _, _ in eq_rows]
    out = []
    for r in range(k):
        b = [
            Fraction(1) if (j == r and is_const) else Fraction(0)
            for _, j, is_const in eq_rows
        ]
        sol = qq_solve(a, b)
        if sol is None:
            return None
        out.append(sol)
    # Defensive: confirm L m = I exactly.
    chart = m[0][0].chart
    for r in range(k):
        for j in range(k):
            acc = Poly.zero(chart)
            for i in range(n):
                if out[r][i]:
                    acc = acc + out[r][i] * m[i][j]
            want = Poly.one(chart) if r == j else Poly.zero(chart)
            if acc != want:
                return None
    return out
