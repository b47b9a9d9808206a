"""JSON encoding of charts, maps, structures, and check reports.

Polynomials travel as text in the same syntax parse_poly accepts, so specs
are hand-writable and reports round-trip exactly. Pair-indexed tables
(structure functions, form components) use comma-joined index keys.
"""

from __future__ import annotations

import json
from typing import Any

from algebroids import __version__
from algebroids.courant import Connection, CourantData
from algebroids.dirac import DiracData, restricted_chart
from algebroids.errors import ValidationError
from algebroids.lie_algebroid import LieData
from algebroids.report import Report
from algebroids.symcalc import Chart, ChartMap, KForm, Poly, parse_poly


def _require(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError(f"{where} needs a {key!r} field")
    return obj[key]


# -- charts and maps --------------------------------------------------------


def chart_to_json(chart: Chart) -> dict:
    return {"name": chart.name, "coords": list(chart.coords)}


def chart_from_json(obj: Any) -> Chart:
    name = _require(obj, "name", "chart")
    coords = _require(obj, "coords", "chart")
    return Chart(str(name), tuple(str(c) for c in coords))


def vec_to_json(v) -> list[str]:
    return [str(p) for p in v]


def vec_from_json(items: Any, chart: Chart) -> tuple[Poly, ...]:
    if not isinstance(items, list):
        raise ValidationError("expected a list of polynomial strings")
    return tuple(parse_poly(str(s), chart) for s in items)


def matrix_from_json(rows: Any, chart: Chart) -> tuple[tuple[Poly, ...], ...]:
    if not isinstance(rows, list):
        raise ValidationError("expected a list of rows")
    return tuple(vec_from_json(row, chart) for row in rows)


def matrix_to_json(rows) -> list[list[str]]:
    return [vec_to_json(row) for row in rows]


def map_to_json(f: ChartMap) -> dict:
    return {
        "source": chart_to_json(f.source),
        "target": chart_to_json(f.target),
        "comps": vec_to_json(f.comps),
    }


def map_from_json(obj: Any) -> ChartMap:
    source = chart_from_json(_require(obj, "source", "map"))
    target = chart_from_json(_require(obj, "target", "map"))
    comps = vec_from_json(_require(obj, "comps", "map"), source)
    return ChartMap(source, target, comps)


# -- pair-keyed tables ------------------------------------------------------


def _pair_key(key: tuple[int, ...]) -> str:
    return ",".join(str(i) for i in key)


def _pair_from_key(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ValidationError(f"bad index key {text!r}") from exc


def kform_to_json(w: KForm) -> dict:
    comps = {
        _pair_key(idx): str(p) for idx, p in sorted(w.comps.items())
    }
    return {"degree": w.degree, "comps": comps}


def kform_from_json(obj: Any, chart: Chart) -> KForm:
    degree = int(_require(obj, "degree", "form"))
    comps_json = _require(obj, "comps", "form")
    comps = {
        _pair_from_key(key): parse_poly(str(text), chart)
        for key, text in comps_json.items()
    }
    return KForm(chart, degree, comps)


def _structure_to_json(structure: dict) -> dict:
    out = {}
    for (a, b), vec in sorted(structure.items()):
        out[_pair_key((a, b))] = vec_to_json(vec)
    return out


def _structure_from_json(obj: Any, chart: Chart) -> dict:
    out = {}
    for key, vec in obj.items():
        pair = _pair_from_key(key)
        if len(pair) != 2:
            raise ValidationError(f"bracket key {key!r} is not a pair")
        out[pair] = vec_from_json(vec, chart)
    return out


# -- structures -------------------------------------------------------------


def lie_to_json(a: LieData) -> dict:
    return {
        "chart": chart_to_json(a.chart),
        "rank": a.rank,
        "anchor": matrix_to_json(a.anchor),
        "bracket": _structure_to_json(a.structure),
    }


def lie_from_json(obj: Any) -> LieData:
    chart = chart_from_json(_require(obj, "chart", "algebroid"))
    rank = int(_require(obj, "rank", "algebroid"))
    anchor = matrix_from_json(_require(obj, "anchor", "algebroid"), chart)
    bracket = _structure_from_json(obj.get("bracket", {}), chart)
    return LieData(chart, rank, anchor, bracket)


def courant_to_json(q: CourantData) -> dict:
    return {
        "chart": chart_to_json(q.chart),
        "rank": q.rank,
        "anchor": matrix_to_json(q.anchor),
        "coanchor": matrix_to_json(q.coanchor),
        "pairing": matrix_to_json(q.pairing),
        "bracket": _structure_to_json(q.structure),
    }


def courant_from_json(obj: Any) -> CourantData:
    chart = chart_from_json(_require(obj, "chart", "structure"))
    rank = int(_require(obj, "rank", "structure"))
    anchor = matrix_from_json(_require(obj, "anchor", "structure"), chart)
    coanchor = matrix_from_json(_require(obj, "coanchor", "structure"), chart)
    pairing = matrix_from_json(_require(obj, "pairing", "structure"), chart)
    bracket = _structure_from_json(obj.get("bracket", {}), chart)
    return CourantData(chart, rank, anchor, coanchor, pairing, bracket)


def connection_from_json(obj: Any, q: CourantData) -> Connection:
    return Connection(q, matrix_from_json(obj, q.chart))


def dirac_to_json(d: DiracData) -> dict:
    return {
        "support": list(d.support),
        "generators": matrix_to_json(d.generators),
    }


def dirac_from_json(obj: Any, q: CourantData) -> DiracData:
    support = tuple(
        str(s) for s in _require(obj, "support", "dirac")
    )
    sub = restricted_chart(q.chart, support) if support else q.chart
    gens = matrix_from_json(_require(obj, "generators", "dirac"), sub)
    return DiracData(q, gens, support)


# -- reports ----------------------------------------------------------------


def report_to_json(report: Report, verb: str, params: dict) -> dict:
    return {
        "tool_version": __version__,
        "job": {"verb": verb, **params},
        "checks": report.to_json_dict(),
    }


def dump_json(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
