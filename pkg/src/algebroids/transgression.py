"""Transgressed bracket tables of a Courant structure.

The transgression packages the structure data as a graded bracket on three
degrees:

* degree -2 holds functions dressed with a central generator (written f*c),
* degree -1 holds sections dressed with the odd shift (written q*eps); a
  one-form dressed with c lands here too and is rewritten through the
  coanchor, alpha*c -> coanchor(alpha)*eps,
* degree 0 holds pairs of a section and a two-form dressed with c.

Brackets with both arguments in degree 0 leave the truncation window and
raise TruncationError; everything else is given by a short table: the c
generator is central, degree -1 elements act on dressed forms by interior
product along the anchor, degree 0 elements act by Lie derivative, two odd
elements pair into f*c, and mixed section brackets reduce to the Courant
bracket with coanchor corrections. courant_from_transgression reads the
structure data back out of the public operations, and the combination
checker compares the transgression of a weighted combination against the
degree-wise combination of the summand tables.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from algebroids.courant import (
    CourantCombination,
    CourantData,
    baer_combination,
)
from algebroids.errors import ChartMismatchError, TruncationError, ValidationError
from algebroids.linalg import (
    Vec,
    unit_vec,
    vec_add,
    vec_is_zero,
    vec_sub,
    zero_vec,
)
from algebroids.report import Report
from algebroids.sampling import sample_kform, sample_poly, sample_section
from algebroids.symcalc import KForm, Poly


@dataclass(frozen=True)
class TauModule:
    """The transgressed module of one Courant structure."""

    courant: CourantData

    @property
    def chart(self):
        return self.courant.chart

    @property
    def rank(self) -> int:
        return self.courant.rank

    # -- element constructors ------------------------------------------------

    def zero(self, degree: int) -> "TauElement":
        return TauElement(
            self,
            degree,
            Poly.zero(self.chart),
            zero_vec(self.chart, self.rank),
            KForm.zero(self.chart, 2),
        )

    def function_c(self, f: Poly) -> "TauElement":
        out = self.zero(-2)
        return TauElement(self, -2, f, out.section, out.form)

    def section_eps(self, q: Vec) -> "TauElement":
        out = self.zero(-1)
        return TauElement(self, -1, out.c_part, tuple(q), out.form)

    def one_form_c(self, alpha: KForm) -> "TauElement":
        """A one-form dressed with c, rewritten through the coanchor."""
        return self.section_eps(self.courant.coanchor_of(alpha))

    def pair(self, q: Vec, omega: KForm | None = None) -> "TauElement":
        if omega is None:
            omega = KForm.zero(self.chart, 2)
        out = self.zero(0)
        return TauElement(self, 0, out.c_part, tuple(q), omega)

    def two_form_c(self, omega: KForm) -> "TauElement":
        return self.pair(zero_vec(self.chart, self.rank), omega)

    def coordinate_c(self, j: int) -> "TauElement":
        return self.function_c(Poly.coord(self.chart, j))

    # -- the bracket ---------------------------------------------------------

    def bracket(self, x: "TauElement", y: "TauElement") -> "TauElement":
        if x.module != self or y.module != self:
            raise ValidationError("bracket arguments from a different module")
        q = self.courant
        dx, dy = x.degree, y.degree
        if dx == 0 and dy == 0:
            raise TruncationError(
                "bracket of two degree-zero elements leaves the window"
            )
        if dx == -2 and dy == -2:
            return self.zero(-2)
        if dy == -2:
            # [x, f*c] = act_x(f)*c; interior product kills functions.
            if dx == -1:
                return self.zero(-2)
            return self.function_c(q.anchor_of(x.section).apply(y.c_part))
        if dx == -2:
            got = self.bracket(y, x)
            return self.function_c(-got.c_part)
        if dx == -1 and dy == -1:
            return self.function_c(q.pairing_of(x.section, y.section))
        if dx == 0 and dy == -1:
            sec = q.bracket(x.section, y.section)
            if not x.form.is_zero:
                correction = x.form.iota(q.anchor_of(y.section))
                sec = vec_sub(sec, q.coanchor_of(correction))
            return self.section_eps(sec)
        # dx == -1 and dy == 0: the dressed one-forms collect the pairing
        # differential and the interior product of the two-form part.
        sec = q.bracket(x.section, y.section)
        g = q.pairing_of(x.section, y.section)
        sec = vec_sub(sec, q.coanchor_of(KForm.from_poly(g).d()))
        if not y.form.is_zero:
            sec = vec_add(
                sec, q.coanchor_of(y.form.iota(q.anchor_of(x.section)))
            )
        return self.section_eps(sec)


@dataclass(frozen=True)
class TauElement:
    """One homogeneous element; unused slots are kept at canonical zeros."""

    module: TauModule = field(compare=False)
    degree: int
    c_part: Poly
    section: Vec
    form: KForm

    def __post_init__(self):
        if self.degree not in (-2, -1, 0):
            raise ValidationError("degree outside the truncation window")
        chart = self.module.chart
        if self.c_part.chart != chart or self.form.chart != chart:
            raise ChartMismatchError("element data on the wrong chart")
        if len(self.section) != self.module.rank:
            raise ValidationError("section slot has wrong length")
        if self.form.degree != 2:
            raise ValidationError("the dressed form slot holds two-forms")
        if self.degree != -2 and not self.c_part.is_zero:
            raise ValidationError("c coefficient only lives in degree -2")
        if self.degree == -2 and not vec_is_zero(self.section):
            raise ValidationError("degree -2 has no section slot")
        if self.degree != 0 and not self.form.is_zero:
            raise ValidationError("two-form slot only lives in degree 0")

    @property
    def is_zero(self) -> bool:
        return (
            self.c_part.is_zero
            and vec_is_zero(self.section)
            and self.form.is_zero
        )

    def __add__(self, other: "TauElement") -> "TauElement":
        if self.module != other.module or self.degree != other.degree:
            raise ValidationError("can only add elements of equal degree")
        form = KForm(
            self.module.chart,
            2,
            {
                idx: self.form.component(idx) + other.form.component(idx)
                for idx in set(self.form.comps) | set(other.form.comps)
            },
        )
        return TauElement(
            self.module,
            self.degree,
            self.c_part + other.c_part,
            vec_add(self.section, other.section),
            form,
        )


def transgress(q: CourantData) -> TauModule:
    return TauModule(q)


def courant_from_transgression(tau: TauModule) -> CourantData:
    """Rebuild the structure data from the public bracket operations."""
    chart = tau.chart
    r = tau.rank
    n = chart.dim
    eps = [tau.section_eps(unit_vec(chart, r, a)) for a in range(r)]
    flat = [tau.pair(unit_vec(chart, r, a)) for a in range(r)]
    anchor = tuple(
        tuple(tau.bracket(flat[a], tau.coordinate_c(j)).c_part for j in range(n))
        for a in range(r)
    )
    coanchor = tuple(
        tau.one_form_c(KForm.dx(chart, j)).section for j in range(n)
    )
    pairing = tuple(
        tuple(tau.bracket(eps[a], eps[b]).c_part for b in range(r))
        for a in range(r)
    )
    structure = {}
    for a in range(r):
        for b in range(r):
            vec = tau.bracket(flat[a], eps[b]).section
            if not vec_is_zero(vec):
                structure[(a, b)] = vec
    return CourantData(chart, r, anchor, coanchor, pairing, structure)


def check_tau_rules(
    q: CourantData,
    samples: int = 10,
    seed: int = 0,
    max_degree: int | None = None,
) -> Report:
    """The bracket table on sampled elements: the six defining rules plus
    centrality, graded antisymmetry, the Jacobi identity in the window, and
    the truncation guard."""
    rep = Report()
    tau = transgress(q)
    chart = q.chart
    rng = random.Random(seed)
    kw = {} if max_degree is None else {"max_degree": max_degree}
    r = q.rank

    def sections(count):
        return [sample_section(rng, chart, r, **kw) for _ in range(count)]

    bad = None
    for t in range(samples):
        u = sample_section(rng, chart, r, **kw)
        one = tau.function_c(Poly.one(chart))
        if not tau.bracket(tau.pair(u), one).is_zero:
            bad = f"degree 0 against c (trial {t})"
            break
        if not tau.bracket(tau.section_eps(u), one).is_zero:
            bad = f"degree -1 against c (trial {t})"
            break
        if not tau.bracket(one, tau.pair(u)).is_zero:
            bad = f"c against degree 0 (trial {t})"
            break
    rep.add("rule_c_central", bad is None, bad)

    bad = None
    for t in range(samples):
        alpha = sample_kform(rng, chart, 1, **kw)
        if not vec_is_zero(
            vec_sub(
                tau.one_form_c(alpha).section, q.coanchor_of(alpha)
            )
        ):
            bad = f"one-form rewrite (trial {t})"
            break
    rep.add("rule_one_form_rewrite", bad is None, bad)

    bad = None
    for t in range(samples):
        u = sample_section(rng, chart, r, **kw)
        alpha = sample_kform(rng, chart, 1, **kw)
        omega = sample_kform(rng, chart, 2, **kw)
        pi_u = q.anchor_of(u)
        got = tau.bracket(tau.section_eps(u), tau.one_form_c(alpha))
        if got.c_part != alpha.iota(pi_u).as_poly():
            bad = f"against a dressed one-form (trial {t})"
            break
        got = tau.bracket(tau.section_eps(u), tau.two_form_c(omega))
        if got != tau.one_form_c(omega.iota(pi_u)):
            bad = f"against a dressed two-form (trial {t})"
            break
    rep.add("rule_interior_action", bad is None, bad)

    bad = None
    for t in range(samples):
        u = sample_section(rng, chart, r, **kw)
        f = sample_poly(rng, chart, **kw)
        alpha = sample_kform(rng, chart, 1, **kw)
        pi_u = q.anchor_of(u)
        got = tau.bracket(tau.pair(u), tau.function_c(f))
        if got.c_part != pi_u.apply(f):
            bad = f"against a dressed function (trial {t})"
            break
        got = tau.bracket(tau.pair(u), tau.one_form_c(alpha))
        if got != tau.one_form_c(alpha.lie(pi_u)):
            bad = f"against a dressed one-form (trial {t})"
            break
    rep.add("rule_lie_action", bad is None, bad)

    bad = None
    for t in range(samples):
        u, v = sections(2)
        got = tau.bracket(tau.section_eps(u), tau.section_eps(v))
        if got.c_part != q.pairing_of(u, v):
            bad = f"trial {t}"
            break
    rep.add("rule_odd_pairing", bad is None, bad)

    bad = None
    for t in range(samples):
        u, v = sections(2)
        got = tau.bracket(tau.pair(u), tau.section_eps(v))
        if not vec_is_zero(vec_sub(got.section, q.bracket(u, v))):
            bad = f"trial {t}"
            break
        got = tau.bracket(tau.section_eps(u), tau.pair(v))
        g = q.pairing_of(u, v)
        expected = tau.one_form_c(KForm.from_poly(-g).d()) + tau.section_eps(
            q.bracket(u, v)
        )
        if got != expected:
            bad = f"opposite order (trial {t})"
            break
    rep.add("rule_mixed_bracket", bad is None, bad)

    bad = None
    for t in range(samples):
        u, v = sections(2)
        omega1 = sample_kform(rng, chart, 2, **kw)
        omega2 = sample_kform(rng, chart, 2, **kw)
        x = tau.pair(u, omega1)
        y = tau.section_eps(v)
        lhs = tau.bracket(x, y)
        rhs = tau.bracket(y, x)
        if not vec_is_zero(vec_add(lhs.section, rhs.section)):
            bad = f"degrees (0,-1) (trial {t})"
            break
        a = tau.section_eps(u)
        b = tau.section_eps(v)
        if tau.bracket(a, b).c_part != tau.bracket(b, a).c_part:
            bad = f"degrees (-1,-1) (trial {t})"
            break
        fc = tau.function_c(sample_poly(rng, chart, **kw))
        if (
            tau.bracket(tau.pair(u, omega2), fc).c_part
            != -tau.bracket(fc, tau.pair(u, omega2)).c_part
        ):
            bad = f"degrees (0,-2) (trial {t})"
            break
    rep.add("graded_antisymmetry", bad is None, bad)

    bad = None
    for t in range(samples):
        u, v, w = sections(3)
        omega = sample_kform(rng, chart, 2, **kw)
        x = tau.pair(u, omega)
        ye, ze = tau.section_eps(v), tau.section_eps(w)
        lhs = tau.bracket(x, tau.bracket(ye, ze))
        rhs = (
            tau.bracket(tau.bracket(x, ye), ze).c_part
            + tau.bracket(ye, tau.bracket(x, ze)).c_part
        )
        if lhs.c_part != rhs:
            bad = f"degrees (0,-1,-1) (trial {t})"
            break
    rep.add("graded_jacobi", bad is None, bad)

    bad = None
    try:
        tau.bracket(tau.pair(q.gen(0)), tau.pair(q.gen(0)))
        bad = "degree (0,0) bracket did not raise"
    except TruncationError:
        pass
    rep.add("truncation_guard", bad is None, bad)
    return rep


def check_transgression_linear(
    parts,
    weights,
    connections,
    samples: int = 5,
    seed: int = 0,
    max_degree: int | None = None,
) -> Report:
    """Transgressing a weighted combination matches combining the
    transgressions degree-wise.

    Route one transgresses the combined structure; route two evaluates the
    summand tables on fiber-product representatives and reduces (weighted
    c parts for the odd pairing, tuple reduction for the section brackets).
    """
    rep = Report()
    comb: CourantCombination = baer_combination(parts, weights, connections)
    tau_c = transgress(comb.result)
    taus = [transgress(qi) for qi in comb.parts]
    chart = comb.result.chart
    r = comb.result.rank
    rng = random.Random(seed)
    kw = {} if max_degree is None else {"max_degree": max_degree}

    def lifted(cls: Vec) -> list[Vec]:
        return comb.lift(cls)

    def class_sections(count):
        out = [sample_section(rng, chart, r, **kw) for _ in range(count)]
        return out

    gens = [unit_vec(chart, r, a) for a in range(r)]

    bad = None
    for x in range(r):
        for y in range(r):
            route1 = tau_c.bracket(
                tau_c.section_eps(gens[x]), tau_c.section_eps(gens[y])
            ).c_part
            lifts_x, lifts_y = lifted(gens[x]), lifted(gens[y])
            route2 = Poly.zero(chart)
            for i, ti in enumerate(taus):
                got = ti.bracket(
                    ti.section_eps(lifts_x[i]), ti.section_eps(lifts_y[i])
                ).c_part
                route2 = route2 + comb.weights[i] * got
            if route1 != route2:
                bad = f"generators ({x},{y})"
                break
        if bad:
            break
    if bad is None:
        for t in range(samples):
            u, v = class_sections(2)
            route1 = tau_c.bracket(
                tau_c.section_eps(u), tau_c.section_eps(v)
            ).c_part
            lifts_u, lifts_v = lifted(u), lifted(v)
            route2 = Poly.zero(chart)
            for i, ti in enumerate(taus):
                got = ti.bracket(
                    ti.section_eps(lifts_u[i]), ti.section_eps(lifts_v[i])
                ).c_part
                route2 = route2 + comb.weights[i] * got
            if route1 != route2:
                bad = f"sampled sections (trial {t})"
                break
    rep.add("tau_pairing_combines", bad is None, bad)

    bad = None
    for x in range(r):
        for y in range(r):
            route1 = tau_c.bracket(
                tau_c.pair(gens[x]), tau_c.section_eps(gens[y])
            ).section
            lifts_x, lifts_y = lifted(gens[x]), lifted(gens[y])
            comps = [
                ti.bracket(
                    ti.pair(lifts_x[i]), ti.section_eps(lifts_y[i])
                ).section
                for i, ti in enumerate(taus)
            ]
            route2 = comb.reduce_tuple(comps)
            if not vec_is_zero(vec_sub(route1, route2)):
                bad = f"generators ({x},{y})"
                break
        if bad:
            break
    if bad is None:
        for t in range(samples):
            u, v = class_sections(2)
            route1 = tau_c.bracket(
                tau_c.pair(u), tau_c.section_eps(v)
            ).section
            lifts_u, lifts_v = lifted(u), lifted(v)
            comps = [
                ti.bracket(
                    ti.pair(lifts_u[i]), ti.section_eps(lifts_v[i])
                ).section
                for i, ti in enumerate(taus)
            ]
            route2 = comb.reduce_tuple(comps)
            if not vec_is_zero(vec_sub(route1, route2)):
                bad = f"sampled sections (trial {t})"
                break
    rep.add("tau_bracket_combines", bad is None, bad)

    bad = None
    for x in range(r):
        for j in range(chart.dim):
            route1 = tau_c.bracket(
                tau_c.pair(gens[x]), tau_c.coordinate_c(j)
            ).c_part
            lifts_x = lifted(gens[x])
            for i, ti in enumerate(taus):
                got = ti.bracket(ti.pair(lifts_x[i]), ti.coordinate_c(j)).c_part
                if got != route1:
                    bad = (
                        f"generator {x}, coordinate {chart.coords[j]}, "
                        f"summand {i}"
                    )
                    break
            if bad:
                break
        if bad:
            break
    rep.add("tau_function_action_matches", bad is None, bad)
    return rep
