"""Deterministic sample generators for the statistical identity checks.

Identity checks that are exact on generators are extended to random general
sections: coefficients are small integers in [-2, 2] and polynomial degrees
stay at most 2, which keeps products well inside the degree cap while still
exercising every Leibniz correction term. Everything is driven by a caller
supplied random.Random so a seed pins the full sample stream.
"""

from __future__ import annotations

import random
from fractions import Fraction

from algebroids.symcalc import Chart, KForm, Poly, VField

COEFF_RANGE = (-2, 2)
MAX_SAMPLE_DEGREE = 2


def sample_poly(
    rng: random.Random,
    chart: Chart,
    max_degree: int = MAX_SAMPLE_DEGREE,
    terms: int = 3,
) -> Poly:
    acc: dict = {}
    for _ in range(terms):
        deg = rng.randint(0, max_degree)
        exps = [0] * chart.dim
        for _ in range(deg):
            if chart.dim == 0:
                break
            exps[rng.randrange(chart.dim)] += 1
        c = rng.randint(*COEFF_RANGE)
        if c:
            key = tuple(exps)
            acc[key] = acc.get(key, Fraction(0)) + c
    return Poly(chart, acc)


def sample_section(
    rng: random.Random, chart: Chart, rank: int, **kw
) -> tuple[Poly, ...]:
    return tuple(sample_poly(rng, chart, **kw) for _ in range(rank))


def sample_vfield(rng: random.Random, chart: Chart, **kw) -> VField:
    return VField(chart, [sample_poly(rng, chart, **kw) for _ in range(chart.dim)])


def sample_kform(
    rng: random.Random, chart: Chart, degree: int, components: int = 2, **kw
) -> KForm:
    if degree > chart.dim:
        return KForm.zero(chart, degree)
    out = KForm.zero(chart, degree)
    for _ in range(components):
        idx = tuple(sorted(rng.sample(range(chart.dim), degree)))
        out = out + KForm(chart, degree, {idx: sample_poly(rng, chart, **kw)})
    return out
