"""Exact symbolic calculus on polynomial coordinate charts.

Everything is computed over the rationals: polynomial coefficients are
`fractions.Fraction`, so every identity checked downstream is exact, never
approximate. The objects are deliberately small and closed:

* `Chart` — a named list of coordinate labels (dimension may be zero).
* `Poly` — polynomial in the chart coordinates, stored as a dict mapping
  exponent tuples to nonzero coefficients.
* `VField` — polynomial vector field, one `Poly` per coordinate.
* `KForm` — polynomial differential k-form, components indexed by strictly
  increasing coordinate index tuples.
* `ChartMap` — polynomial map between charts, with pullback/pushforward
  helpers.

A module-wide total-degree cap (default 16) aborts runaway products early;
see `set_max_degree`.

Expression grammar (used by `parse_expr` and the printers)::

    rational    ::= int | int "/" posint
    monomial    ::= rational ("*" coordfactor)* | coordfactor ("*" coordfactor)*
    coordfactor ::= name ("^" posint)?

Form generators are written ``dx1`` and joined with ``^`` (``dx1^dx2``);
vector field generators are written ``d/dx1``; sums use ``+`` and ``-``;
whitespace is insignificant. Printing is canonical (graded-lexicographic
term order, components in increasing index order), so ``parse ∘ print`` is
the identity and ``print ∘ parse`` canonicalizes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from algebroids import kernel
from algebroids.errors import (
    ChartMismatchError,
    DegreeOverflowError,
    ParseError,
    ValidationError,
)

_MAX_DEGREE = 16

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def set_max_degree(n: int) -> None:
    """Set the global total-degree cap for polynomial products."""
    global _MAX_DEGREE
    if n < 1:
        raise ValidationError("degree cap must be positive")
    _MAX_DEGREE = n


def get_max_degree() -> int:
    return _MAX_DEGREE


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise ValidationError(f"expected a rational scalar, got {type(x).__name__}")


@dataclass(frozen=True)
class Chart:
    """A polynomial coordinate chart: a name plus ordered coordinate labels.

    Coordinate labels must be identifiers and must not start with "d" (that
    prefix is reserved for the dx / d-slash-dx generator tokens of the
    expression grammar).
    """

    name: str
    coords: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        seen = set()
        for c in self.coords:
            if not _NAME_RE.match(c):
                raise ValidationError(f"bad coordinate name {c!r}")
            if c.startswith("d"):
                raise ValidationError(
                    f"coordinate name {c!r} may not start with 'd'"
                )
            if c in seen:
                raise ValidationError(f"duplicate coordinate name {c!r}")
            seen.add(c)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, coord: str) -> int:
        try:
            return self.coords.index(coord)
        except ValueError:
            raise ValidationError(
                f"chart {self.name!r} has no coordinate {coord!r}"
            ) from None

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.coords)})"


def coordinate_chart(name: str, n: int, prefix: str = "x") -> Chart:
    """Convenience constructor: chart with coordinates prefix1..prefixn."""
    return Chart(name, tuple(f"{prefix}{i + 1}" for i in range(n)))


def _require_same_chart(a, b) -> None:
    if a.chart != b.chart:
        raise ChartMismatchError(
            f"operands live on different charts: {a.chart.name!r} vs {b.chart.name!r}"
        )


_TERMS = dict  # dict[tuple[int, ...], Fraction]


class Poly:
    """Exact polynomial over Q in the coordinates of a chart.

    Terms are stored sparsely as exponent-tuple -> Fraction; zero
    coefficients are never kept. Equality is coefficient-wise; printing uses
    the graded-lexicographic order (highest first).
    """

    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms: dict | None = None):
        self.chart = chart
        clean: _TERMS = {}
        if terms:
            dim = chart.dim
            for exps, coeff in terms.items():
                c = _frac(coeff)
                if not c:
                    continue
                exps = tuple(exps)
                if len(exps) != dim or any(
                    (not isinstance(e, int)) or e < 0 for e in exps
                ):
                    raise ValidationError(
                        f"bad exponent tuple {exps!r} for chart {chart.name!r}"
                    )
                clean[exps] = c
        self.terms = clean

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, chart: Chart) -> "Poly":
        return cls(chart)

    @classmethod
    def const(cls, chart: Chart, value) -> "Poly":
        c = _frac(value)
        p = cls(chart)
        if c:
            p.terms[(0,) * chart.dim] = c
        return p

    @classmethod
    def one(cls, chart: Chart) -> "Poly":
        return cls.const(chart, 1)

    @classmethod
    def coord(cls, chart: Chart, which) -> "Poly":
        i = which if isinstance(which, int) else chart.index(which)
        if not 0 <= i < chart.dim:
            raise ValidationError(f"coordinate index {i} out of range")
        exps = tuple(1 if j == i else 0 for j in range(chart.dim))
        p = cls(chart)
        p.terms[exps] = Fraction(1)
        return p

    @classmethod
    def _raw(cls, chart: Chart, terms: _TERMS) -> "Poly":
        p = cls.__new__(cls)
        p.chart = chart
        p.terms = terms
        return p

    # -- queries ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.chart.dim, Fraction(0))

    def as_constant(self) -> Fraction | None:
        """The value if this polynomial is constant, else None."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1:
            exps, c = next(iter(self.terms.items()))
            if not any(exps):
                return c
        return None

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.chart, other)
        if not isinstance(other, Poly):
            return NotImplemented
        _require_same_chart(self, other)
        return Poly._raw(self.chart, kernel.add_terms(self.terms, other.terms))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.chart, other)
        if not isinstance(other, Poly):
            return NotImplemented
        _require_same_chart(self, other)
        return Poly._raw(self.chart, kernel.sub_terms(self.terms, other.terms))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Poly._raw(self.chart, kernel.scale_terms(self.terms, Fraction(-1)))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Poly._raw(
                self.chart, kernel.scale_terms(self.terms, _frac(other))
            )
        if not isinstance(other, Poly):
            return NotImplemented
        _require_same_chart(self, other)
        da, db = self.degree(), other.degree()
        if da >= 0 and db >= 0 and da + db > _MAX_DEGREE:
            raise DegreeOverflowError(
                f"product degree {da + db} exceeds cap {_MAX_DEGREE}"
            )
        return Poly._raw(self.chart, kernel.mul_terms(self.terms, other.terms))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValidationError("polynomial powers must be nonnegative integers")
        result = Poly.one(self.chart)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    __hash__ = None  # mutable-ish container semantics; not hashable

    # -- calculus ----------------------------------------------------------

    def diff(self, which) -> "Poly":
        """Partial derivative with respect to a coordinate (index or name)."""
        i = which if isinstance(which, int) else self.chart.index(which)
        out: _TERMS = {}
        for exps, coeff in self.terms.items():
            e = exps[i]
            if e:
                k = exps[:i] + (e - 1,) + exps[i + 1 :]
                c = coeff * e
                prev = out.get(k)
                out[k] = c if prev is None else prev + c
        return Poly._raw(self.chart, {k: v for k, v in out.items() if v})

    def subs(self, values: Sequence["Poly"]) -> "Poly":
        """Substitute values[i] for the i-th coordinate.

        All values must share one chart; the result lives on that chart.
        Useful mainly through ChartMap.pull.
        """
        if len(values) != self.chart.dim:
            raise ValidationError("substitution needs one value per coordinate")
        if self.chart.dim == 0:
            raise ValidationError("cannot substitute into a 0-dimensional chart")
        target = values[0].chart
        for v in values:
            if v.chart != target:
                raise ChartMismatchError("substitution values on mixed charts")
        result = Poly.zero(target)
        for exps, coeff in self.terms.items():
            term = Poly.const(target, coeff)
            for i, e in enumerate(exps):
                if e:
                    term = term * values[i] ** e
            result = result + term
        return result

    def rename_chart(self, chart: Chart) -> "Poly":
        """Relabel onto another chart of the same dimension."""
        if chart.dim != self.chart.dim:
            raise ChartMismatchError("chart rename must preserve dimension")
        return Poly._raw(chart, dict(self.terms))

    def __str__(self) -> str:
        return poly_str(self)

    def __repr__(self) -> str:
        return f"Poly({poly_str(self)!r} on {self.chart.name})"


def _term_key(exps: tuple[int, ...]):
    return (sum(exps), exps)


def _sorted_terms(terms: _TERMS):
    return sorted(terms.items(), key=lambda kv: _term_key(kv[0]), reverse=True)


def _monomial_body(chart: Chart, exps: tuple[int, ...], mag: Fraction) -> str:
    factors = []
    for i, e in enumerate(exps):
        if e == 1:
            factors.append(chart.coords[i])
        elif e > 1:
            factors.append(f"{chart.coords[i]}^{e}")
    if not factors:
        return str(mag)
    if mag == 1:
        return "*".join(factors)
    return "*".join([str(mag)] + factors)


def _join_signed(parts: list[tuple[bool, str]]) -> str:
    if not parts:
        return "0"
    neg, body = parts[0]
    out = ("-" if neg else "") + body
    for neg, body in parts[1:]:
        out += f" {'-' if neg else '+'} {body}"
    return out


def poly_str(p: Poly) -> str:
    parts = [
        (coeff < 0, _monomial_body(p.chart, exps, abs(coeff)))
        for exps, coeff in _sorted_terms(p.terms)
    ]
    return _join_signed(parts)


class VField:
    """Polynomial vector field: one component per chart coordinate."""

    __slots__ = ("chart", "comps")

    def __init__(self, chart: Chart, comps: Sequence[Poly]):
        comps = tuple(comps)
        if len(comps) != chart.dim:
            raise ValidationError("vector field needs one component per coordinate")
        for c in comps:
            if c.chart != chart:
                raise ChartMismatchError("vector field component on wrong chart")
        self.chart = chart
        self.comps = comps

    @classmethod
    def zero(cls, chart: Chart) -> "VField":
        return cls(chart, tuple(Poly.zero(chart) for _ in range(chart.dim)))

    @classmethod
    def basis(cls, chart: Chart, which) -> "VField":
        i = which if isinstance(which, int) else chart.index(which)
        return cls(
            chart,
            tuple(
                Poly.one(chart) if j == i else Poly.zero(chart)
                for j in range(chart.dim)
            ),
        )

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.comps)

    def apply(self, f: Poly) -> Poly:
        """Derivation action on a function: sum_i comps[i] * df/dx_i."""
        _require_same_chart(self, f)
        out = Poly.zero(self.chart)
        for i, c in enumerate(self.comps):
            if not c.is_zero:
                out = out + c * f.diff(i)
        return out

    def bracket(self, other: "VField") -> "VField":
        """Lie bracket of vector fields, [X, Y] = X(Y_j) - Y(X_j) per slot."""
        _require_same_chart(self, other)
        return VField(
            self.chart,
            tuple(
                self.apply(other.comps[j]) - other.apply(self.comps[j])
                for j in range(self.chart.dim)
            ),
        )

    def scale(self, f) -> "VField":
        if isinstance(f, (int, Fraction)):
            f = Poly.const(self.chart, f)
        _require_same_chart(self, f)
        return VField(self.chart, tuple(f * c for c in self.comps))

    def __add__(self, other):
        if not isinstance(other, VField):
            return NotImplemented
        _require_same_chart(self, other)
        return VField(
            self.chart,
            tuple(a + b for a, b in zip(self.comps, other.comps)),
        )

    def __sub__(self, other):
        if not isinstance(other, VField):
            return NotImplemented
        _require_same_chart(self, other)
        return VField(
            self.chart,
            tuple(a - b for a, b in zip(self.comps, other.comps)),
        )

    def __neg__(self):
        return VField(self.chart, tuple(-c for c in self.comps))

    def __eq__(self, other):
        if not isinstance(other, VField):
            return NotImplemented
        return self.chart == other.chart and self.comps == other.comps

    __hash__ = None

    def __str__(self) -> str:
        return vfield_str(self)

    def __repr__(self) -> str:
        return f"VField({vfield_str(self)!r} on {self.chart.name})"


def vfield_str(v: VField) -> str:
    parts: list[tuple[bool, str]] = []
    for i, comp in enumerate(v.comps):
        gen = f"d/d{v.chart.coords[i]}"
        for exps, coeff in _sorted_terms(comp.terms):
            mag = abs(coeff)
            if mag == 1 and any(exps):
                body = f"{_monomial_body(v.chart, exps, Fraction(1))}*{gen}"
            elif mag == 1:
                body = gen
            else:
                body = f"{_monomial_body(v.chart, exps, mag)}*{gen}"
            parts.append((coeff < 0, body))
    return _join_signed(parts)


def _normalize_indices(indices: Sequence[int]) -> tuple[tuple[int, ...] | None, int]:
    """Sort a tuple of coordinate indices, tracking the permutation sign.

    Returns (sorted_tuple, sign); (None, 0) when an index repeats.
    """
    idx = list(indices)
    sign = 1
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(idx)):
        if idx[i - 1] == idx[i]:
            return None, 0
    return tuple(idx), sign


class KForm:
    """Polynomial differential k-form.

    Components are stored against strictly increasing coordinate index
    tuples; a 0-form has the single key (). Arbitrary index tuples are
    accepted at construction and normalized with the right sign (repeated
    indices contribute nothing).
    """

    __slots__ = ("chart", "degree", "comps")

    def __init__(self, chart: Chart, degree: int, comps: dict | None = None):
        if degree < 0:
            raise ValidationError("form degree must be nonnegative")
        self.chart = chart
        self.degree = degree
        clean: dict[tuple[int, ...], Poly] = {}
        if comps:
            for idx, p in comps.items():
                if isinstance(p, (int, Fraction)):
                    p = Poly.const(chart, p)
                if p.chart != chart:
                    raise ChartMismatchError("form component on wrong chart")
                if len(idx) != degree:
                    raise ValidationError(
                        f"index tuple {idx!r} has wrong length for a {degree}-form"
                    )
                if any((not isinstance(i, int)) or not 0 <= i < chart.dim for i in idx):
                    raise ValidationError(f"index tuple {idx!r} out of range")
                norm, sign = _normalize_indices(idx)
                if norm is None or p.is_zero:
                    continue
                q = p if sign == 1 else -p
                prev = clean.get(norm)
                q = q if prev is None else prev + q
                if q.is_zero:
                    clean.pop(norm, None)
                else:
                    clean[norm] = q
        self.comps = clean

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "KForm":
        return cls(chart, degree)

    @classmethod
    def from_poly(cls, p: Poly) -> "KForm":
        return cls(p.chart, 0, {(): p})

    @classmethod
    def dx(cls, chart: Chart, which) -> "KForm":
        i = which if isinstance(which, int) else chart.index(which)
        return cls(chart, 1, {(i,): Poly.one(chart)})

    @property
    def is_zero(self) -> bool:
        return not self.comps

    def component(self, idx: Sequence[int]) -> Poly:
        norm, sign = _normalize_indices(idx)
        if norm is None:
            return Poly.zero(self.chart)
        p = self.comps.get(norm)
        if p is None:
            return Poly.zero(self.chart)
        return p if sign == 1 else -p

    def as_poly(self) -> Poly:
        if self.degree != 0:
            raise ValidationError("only a 0-form converts to a polynomial")
        return self.comps.get((), Poly.zero(self.chart))

    def __add__(self, other):
        if not isinstance(other, KForm):
            return NotImplemented
        _require_same_chart(self, other)
        if self.degree != other.degree:
            raise ValidationError(
                f"cannot add a {self.degree}-form and a {other.degree}-form"
            )
        out = dict(self.comps)
        for idx, p in other.comps.items():
            q = out.get(idx)
            q = p if q is None else q + p
            if q.is_zero:
                out.pop(idx, None)
            else:
                out[idx] = q
        result = KForm(self.chart, self.degree)
        result.comps = out
        return result

    def __sub__(self, other):
        if not isinstance(other, KForm):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        result = KForm(self.chart, self.degree)
        result.comps = {idx: -p for idx, p in self.comps.items()}
        return result

    def scale(self, f) -> "KForm":
        if isinstance(f, (int, Fraction)):
            f = Poly.const(self.chart, f)
        _require_same_chart(self, f)
        result = KForm(self.chart, self.degree)
        for idx, p in self.comps.items():
            q = f * p
            if not q.is_zero:
                result.comps[idx] = q
        return result

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def wedge(self, other: "KForm") -> "KForm":
        _require_same_chart(self, other)
        result = KForm(self.chart, self.degree + other.degree)
        if self.degree + other.degree > self.chart.dim:
            return result
        acc: dict[tuple[int, ...], Poly] = {}
        for ia, pa in self.comps.items():
            for ib, pb in other.comps.items():
                norm, sign = _normalize_indices(ia + ib)
                if norm is None:
                    continue
                q = pa * pb
                if sign == -1:
                    q = -q
                prev = acc.get(norm)
                q = q if prev is None else prev + q
                if q.is_zero:
                    acc.pop(norm, None)
                else:
                    acc[norm] = q
        result.comps = acc
        return result

    def d(self) -> "KForm":
        """Exterior derivative."""
        result = KForm(self.chart, self.degree + 1)
        acc: dict[tuple[int, ...], Poly] = {}
        for idx, p in self.comps.items():
            for i in range(self.chart.dim):
                dp = p.diff(i)
                if dp.is_zero:
                    continue
                norm, sign = _normalize_indices((i,) + idx)
                if norm is None:
                    continue
                q = dp if sign == 1 else -dp
                prev = acc.get(norm)
                q = q if prev is None else prev + q
                if q.is_zero:
                    acc.pop(norm, None)
                else:
                    acc[norm] = q
        result.comps = acc
        return result

    def iota(self, v: VField) -> "KForm":
        """Interior product (contraction in the first slot)."""
        _require_same_chart(self, v)
        if self.degree == 0:
            raise ValidationError("cannot contract a 0-form")
        result = KForm(self.chart, self.degree - 1)
        acc: dict[tuple[int, ...], Poly] = {}
        for idx, p in self.comps.items():
            for t, i in enumerate(idx):
                c = v.comps[i]
                if c.is_zero:
                    continue
                q = c * p
                if t % 2 == 1:
                    q = -q
                rest = idx[:t] + idx[t + 1 :]
                prev = acc.get(rest)
                q = q if prev is None else prev + q
                if q.is_zero:
                    acc.pop(rest, None)
                else:
                    acc[rest] = q
        result.comps = acc
        return result

    def lie(self, v: VField) -> "KForm":
        """Lie derivative via the Cartan formula d(iota) + iota(d)."""
        dself = self.d()
        out = dself.iota(v)
        if self.degree > 0:
            out = out + self.iota(v).d()
        return out

    def __eq__(self, other):
        if not isinstance(other, KForm):
            return NotImplemented
        return (
            self.chart == other.chart
            and self.degree == other.degree
            and self.comps == other.comps
        )

    __hash__ = None

    def __str__(self) -> str:
        return kform_str(self)

    def __repr__(self) -> str:
        return f"KForm({kform_str(self)!r}, degree {self.degree} on {self.chart.name})"


def kform_str(w: KForm) -> str:
    if w.degree == 0:
        return poly_str(w.as_poly())
    parts: list[tuple[bool, str]] = []
    for idx in sorted(w.comps):
        gen = "^".join(f"d{w.chart.coords[i]}" for i in idx)
        for exps, coeff in _sorted_terms(w.comps[idx].terms):
            mag = abs(coeff)
            if mag == 1 and any(exps):
                body = f"{_monomial_body(w.chart, exps, Fraction(1))}*{gen}"
            elif mag == 1:
                body = gen
            else:
                body = f"{_monomial_body(w.chart, exps, mag)}*{gen}"
            parts.append((coeff < 0, body))
    return _join_signed(parts)


@dataclass(frozen=True)
class ChartMap:
    """Polynomial map between charts, given by target components.

    comps[j] is the polynomial (on the source chart) giving the j-th target
    coordinate of the image point.
    """

    source: Chart
    target: Chart
    comps: tuple[Poly, ...]

    def __post_init__(self):
        object.__setattr__(self, "comps", tuple(self.comps))
        if len(self.comps) != self.target.dim:
            raise ValidationError("chart map needs one component per target coordinate")
        for c in self.comps:
            if c.chart != self.source:
                raise ChartMismatchError("chart map component on wrong chart")

    @classmethod
    def identity(cls, chart: Chart) -> "ChartMap":
        return cls(
            chart, chart, tuple(Poly.coord(chart, i) for i in range(chart.dim))
        )

    def compose(self, inner: "ChartMap") -> "ChartMap":
        """self after inner: (self . inner)(z) = self(inner(z))."""
        if inner.target != self.source:
            raise ChartMismatchError("chart maps do not compose")
        if self.source.dim == 0:
            comps = tuple(
                Poly.const(inner.source, c.constant_term()) for c in self.comps
            )
        else:
            comps = tuple(c.subs(list(inner.comps)) for c in self.comps)
        return ChartMap(inner.source, self.target, comps)

    def pull(self, f: Poly) -> Poly:
        """Pull a function on the target back to the source."""
        if f.chart != self.target:
            raise ChartMismatchError("pulling a function from the wrong chart")
        if self.target.dim == 0:
            return Poly.const(self.source, f.constant_term())
        return f.subs(list(self.comps))

    def jacobian(self) -> list[list[Poly]]:
        """Matrix J[j][i] = d(comps[j]) / d(source coord i)."""
        return [
            [c.diff(i) for i in range(self.source.dim)] for c in self.comps
        ]

    def dmap(self, v: VField) -> tuple[Poly, ...]:
        """Pushforward along the map: component j is v applied to comps[j].

        The result is a tangent vector along the map — a tuple of source
        polynomials, one per target coordinate.
        """
        if v.chart != self.source:
            raise ChartMismatchError("dmap argument on wrong chart")
        return tuple(v.apply(c) for c in self.comps)

    def dmap_dual(self, coeffs: Sequence[Poly]) -> KForm:
        """Dual of dmap on a fiberwise covector along the map.

        coeffs[j] (a source polynomial) is the coefficient of the j-th target
        coordinate differential; the result is sum_j coeffs[j] * d(comps[j]),
        a 1-form on the source.
        """
        if len(coeffs) != self.target.dim:
            raise ValidationError("dmap_dual needs one coefficient per target coordinate")
        out = KForm.zero(self.source, 1)
        for j, a in enumerate(coeffs):
            if a.chart != self.source:
                raise ChartMismatchError("dmap_dual coefficient on wrong chart")
            if a.is_zero:
                continue
            df = KForm(
                self.source,
                1,
                {
                    (i,): self.comps[j].diff(i)
                    for i in range(self.source.dim)
                },
            )
            out = out + df.scale(a)
        return out

    def pullback_form(self, w: KForm) -> KForm:
        """Pull a differential form on the target back to the source."""
        if w.chart != self.target:
            raise ChartMismatchError("pulling a form from the wrong chart")
        if w.degree == 0:
            return KForm.from_poly(self.pull(w.as_poly()))
        out = KForm.zero(self.source, w.degree)
        if w.degree > self.source.dim:
            return out
        dcomps = [
            KForm(
                self.source,
                1,
                {(i,): c.diff(i) for i in range(self.source.dim)},
            )
            for c in self.comps
        ]
        for idx, p in w.comps.items():
            piece = KForm.from_poly(self.pull(p))
            for j in idx:
                piece = piece.wedge(dcomps[j])
            out = out + piece
        return out

    def __str__(self) -> str:
        body = ", ".join(poly_str(c) for c in self.comps)
        return f"{self.source.name} -> {self.target.name}: ({body})"


# ---------------------------------------------------------------------------
# Module-level op aliases (thin wrappers; handy in tests and docs)
# ---------------------------------------------------------------------------


def d(w: KForm) -> KForm:
    return w.d()


def wedge(a: KForm, b: KForm) -> KForm:
    return a.wedge(b)


def iota(v: VField, w: KForm) -> KForm:
    return w.iota(v)


def lie_form(v: VField, w: KForm) -> KForm:
    return w.lie(v)


def vf_bracket(a: VField, b: VField) -> VField:
    return a.bracket(b)


def pullback_form(f: ChartMap, w: KForm) -> KForm:
    return f.pullback_form(w)


def dmap(f: ChartMap, v: VField) -> tuple[Poly, ...]:
    return f.dmap(v)


def dmap_dual(f: ChartMap, coeffs: Sequence[Poly]) -> KForm:
    return f.dmap_dual(coeffs)


# ---------------------------------------------------------------------------
# Expression parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)|(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[*^+/-])"
)


@dataclass
class _Token:
    kind: str  # "int" | "name" | "op" | "end"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", n))
    return tokens


@dataclass
class _Term:
    coeff: Fraction
    exps: dict  # coord index -> power
    gen: tuple | None  # ("form", [indices]) | ("vec", index)
    pos: int


class _Parser:
    def __init__(self, text: str, chart: Chart):
        self.text = text
        self.chart = chart
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "end":
            self.i += 1
        return tok

    def expect_int(self, what: str) -> int:
        tok = self.advance()
        if tok.kind != "int":
            raise ParseError(f"expected {what}", tok.pos)
        return int(tok.text)

    def parse(self) -> list[_Term]:
        terms = []
        negate = False
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            negate = True
        if self.peek().kind == "end":
            raise ParseError("empty expression", self.peek().pos)
        while True:
            terms.append(self.parse_term(negate))
            tok = self.advance()
            if tok.kind == "end":
                return terms
            if tok.kind == "op" and tok.text in "+-":
                negate = tok.text == "-"
                continue
            raise ParseError(f"expected '+' or '-', got {tok.text!r}", tok.pos)

    def parse_term(self, negate: bool) -> _Term:
        coeff = Fraction(-1 if negate else 1)
        exps: dict = {}
        gen = None
        start = self.peek().pos
        while True:
            tok = self.advance()
            if tok.kind == "int":
                val = Fraction(int(tok.text))
                nxt = self.peek()
                if nxt.kind == "op" and nxt.text == "/":
                    self.advance()
                    den = self.expect_int("a positive denominator")
                    if den == 0:
                        raise ParseError("zero denominator", nxt.pos)
                    val = Fraction(int(tok.text), den)
                coeff *= val
            elif tok.kind == "name":
                name = tok.text
                nxt = self.peek()
                if name == "d" and nxt.kind == "op" and nxt.text == "/":
                    self.advance()
                    gtok = self.advance()
                    if not (
                        gtok.kind == "name"
                        and gtok.text.startswith("d")
                        and gtok.text[1:] in self.chart.coords
                    ):
                        raise ParseError(
                            "expected a coordinate generator after 'd/'", gtok.pos
                        )
                    if gen is not None:
                        raise ParseError("more than one generator in a term", tok.pos)
                    gen = ("vec", self.chart.index(gtok.text[1:]))
                elif name in self.chart.coords:
                    idx = self.chart.index(name)
                    power = 1
                    if nxt.kind == "op" and nxt.text == "^":
                        self.advance()
                        power = self.expect_int("a positive integer exponent")
                        if power == 0:
                            raise ParseError("exponent must be positive", nxt.pos)
                    exps[idx] = exps.get(idx, 0) + power
                elif name.startswith("d") and name[1:] in self.chart.coords:
                    if gen is not None:
                        raise ParseError("more than one generator in a term", tok.pos)
                    indices = [self.chart.index(name[1:])]
                    while True:
                        nxt = self.peek()
                        after = self.tokens[self.i + 1] if nxt.kind == "op" else None
                        if (
                            nxt.kind == "op"
                            and nxt.text == "^"
                            and after is not None
                            and after.kind == "name"
                            and after.text.startswith("d")
                            and after.text[1:] in self.chart.coords
                        ):
                            self.advance()
                            gtok = self.advance()
                            indices.append(self.chart.index(gtok.text[1:]))
                        else:
                            break
                    gen = ("form", indices)
                else:
                    raise ParseError(f"unknown name {name!r}", tok.pos)
            else:
                raise ParseError(
                    f"expected a factor, got {tok.text!r}" if tok.text else "unexpected end of input",
                    tok.pos,
                )
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "*":
                self.advance()
                continue
            return _Term(coeff, exps, gen, start)


def _term_monomial(chart: Chart, term: _Term) -> Poly:
    exps = tuple(term.exps.get(i, 0) for i in range(chart.dim))
    return Poly(chart, {exps: term.coeff})


def parse_expr(text: str, chart: Chart):
    """Parse an expression into a Poly, VField, or KForm on the chart.

    The result type is inferred from the generators present: d/dx-terms give
    a vector field, dx-terms a form (all terms must agree in degree), and
    plain terms a polynomial. Raises ParseError with a position on bad input.
    """
    terms = _Parser(text, chart).parse()
    kinds = {t.gen[0] for t in terms if t.gen is not None}
    if not kinds:
        out = Poly.zero(chart)
        for t in terms:
            out = out + _term_monomial(chart, t)
        return out
    if len(kinds) > 1:
        raise ParseError("cannot mix vector and form generators", terms[0].pos)
    if "vec" in kinds:
        comps = [Poly.zero(chart) for _ in range(chart.dim)]
        for t in terms:
            if t.gen is None:
                raise ParseError("scalar term in a vector field expression", t.pos)
            comps[t.gen[1]] = comps[t.gen[1]] + _term_monomial(chart, t)
        return VField(chart, comps)
    degrees = set()
    for t in terms:
        if t.gen is None:
            raise ParseError("scalar term in a form expression", t.pos)
        degrees.add(len(t.gen[1]))
    if len(degrees) > 1:
        raise ParseError("mixed form degrees in one expression", terms[0].pos)
    degree = degrees.pop()
    acc: dict[tuple[int, ...], Poly] = {}
    out = KForm(chart, degree)
    for t in terms:
        norm, sign = _normalize_indices(tuple(t.gen[1]))
        if norm is None:
            continue
        p = _term_monomial(chart, t)
        if sign == -1:
            p = -p
        prev = acc.get(norm)
        p = p if prev is None else prev + p
        if p.is_zero:
            acc.pop(norm, None)
        else:
            acc[norm] = p
    out.comps = acc
    return out


def parse_poly(text: str, chart: Chart) -> Poly:
    out = parse_expr(text, chart)
    if isinstance(out, Poly):
        return out
    raise ParseError("expected a polynomial expression", 0)


def parse_vfield(text: str, chart: Chart) -> VField:
    out = parse_expr(text, chart)
    if isinstance(out, VField):
        return out
    if isinstance(out, Poly) and out.is_zero:
        return VField.zero(chart)
    raise ParseError("expected a vector field expression", 0)


def parse_kform(text: str, chart: Chart, degree: int | None = None) -> KForm:
    out = parse_expr(text, chart)
    if isinstance(out, Poly):
        if degree is None or degree == 0:
            return KForm.from_poly(out)
        if out.is_zero:
            return KForm.zero(chart, degree)
        raise ParseError(f"expected a {degree}-form", 0)
    if isinstance(out, KForm):
        if degree is not None and out.degree != degree:
            raise ParseError(
                f"expected a {degree}-form, got a {out.degree}-form", 0
            )
        return out
    raise ParseError("expected a form expression", 0)
