"""End-to-end runs of the command-line verbs on small job files."""

import json
import subprocess
import sys

import pytest

from algebroids import jsonio
from algebroids.cli import VERBS, main
from algebroids.courant import coordinate_connection, standard_exact
from algebroids.symcalc import (
    ChartMap,
    KForm,
    Poly,
    coordinate_chart,
    parse_poly,
)

R1 = coordinate_chart("L", 1, prefix="y")
R2 = coordinate_chart("P", 2)
R3 = coordinate_chart("X", 3)
R4 = coordinate_chart("B", 4)
VOL = KForm(R3, 3, {(0, 1, 2): Poly.const(R3, 1)})
Q3 = standard_exact(R3, VOL)
Q3_FLAT = standard_exact(R3, KForm.zero(R3, 3))
Q2 = standard_exact(R2, KForm.zero(R2, 3))

SHEAR = ChartMap(
    R3,
    R3,
    (Poly.coord(R3, 0), Poly.coord(R3, 1), parse_poly("x3 + x1*x2", R3)),
)


def _tangent_lie_json():
    from algebroids.lie_algebroid import tangent_algebroid

    return jsonio.lie_to_json(tangent_algebroid(R2))


def _assoc_spec():
    from algebroids.lie_algebroid import tangent_algebroid, trivial_extension

    phi = ChartMap(
        R2, R3, (Poly.coord(R2, 0), Poly.coord(R2, 1), parse_poly("x1*x2", R2))
    )
    z_chart = coordinate_chart("Z", 1, prefix="z")
    psi = ChartMap(z_chart, R2, (Poly.coord(z_chart, 0), parse_poly("z1^2", z_chart)))
    w_chart = coordinate_chart("W", 1, prefix="w")
    xi = ChartMap(w_chart, z_chart, (parse_poly("w1^2", w_chart),))
    a = trivial_extension(tangent_algebroid(R3)).total.lie
    return {
        "algebroid": jsonio.lie_to_json(a),
        "maps": [jsonio.map_to_json(f) for f in (phi, psi, xi)],
        "splitting": [
            ["1", "0", "0", "0"],
            ["0", "1", "0", "0"],
            ["0", "0", "1", "0"],
        ],
    }


def _supported_dirac():
    return {
        "support": ["x3"],
        "generators": [
            ["1", "0", "0", "0", "x1", "0"],
            ["0", "1", "0", "-x1", "0", "0"],
            ["0", "0", "0", "0", "0", "1"],
        ],
    }


PASSING_JOBS = {
    "check-lie": lambda: ({"algebroid": _tangent_lie_json()}, ["--samples", "10"]),
    "check-courant": lambda: ({"structure": jsonio.courant_to_json(Q3)}, []),
    "check-dirac": lambda: (
        {
            "structure": jsonio.courant_to_json(Q3_FLAT),
            "dirac": _supported_dirac(),
        },
        [],
    ),
    "pullback": lambda: (
        {
            "structure": jsonio.courant_to_json(Q3),
            "map": jsonio.map_to_json(ChartMap.identity(R3)),
        },
        [],
    ),
    "twist": lambda: (
        {
            "structure": jsonio.courant_to_json(Q3_FLAT),
            "form": jsonio.kform_to_json(VOL),
        },
        [],
    ),
    "curvature": lambda: (
        {
            "structure": jsonio.courant_to_json(Q3),
            "expect": jsonio.kform_to_json(VOL),
        },
        [],
    ),
    "tau-roundtrip": lambda: (
        {"structure": jsonio.courant_to_json(Q2)},
        ["--samples", "3"],
    ),
    "tau-linear": lambda: (
        {
            "parts": [jsonio.courant_to_json(Q2), jsonio.courant_to_json(Q2)],
            "weights": ["1", "-2"],
            "connections": [
                jsonio.matrix_to_json(coordinate_connection(Q2).columns),
                jsonio.matrix_to_json(coordinate_connection(Q2).columns),
            ],
        },
        ["--samples", "2"],
    ),
    "cocycle": lambda: (
        {
            "structure": jsonio.courant_to_json(Q2),
            "cover": {
                "maps": {
                    "one": ["x1", "x2"],
                    "s": ["x1", "x2 + x1^2"],
                    "s2": ["x1", "x2 + 2*x1^2"],
                },
                "table": {"s,s": "s2", "one,s": "s", "s,one": "s"},
            },
        },
        [],
    ),
    "twist-commute": lambda: (
        {
            "structure": jsonio.courant_to_json(Q3_FLAT),
            "map": jsonio.map_to_json(SHEAR),
            "form": jsonio.kform_to_json(VOL),
        },
        [],
    ),
    "curvature-pullback": lambda: (
        {
            "structure": jsonio.courant_to_json(Q3),
            "map": jsonio.map_to_json(SHEAR),
        },
        [],
    ),
    "dirac-pushdown": lambda: (
        {
            "structure": jsonio.courant_to_json(Q3_FLAT),
            "dirac": _supported_dirac(),
        },
        [],
    ),
    "morphism-graph": lambda: (
        {
            "structure": jsonio.courant_to_json(
                standard_exact(coordinate_chart("T", 1), KForm.zero(coordinate_chart("T", 1), 3))
            ),
            "map": jsonio.map_to_json(
                ChartMap(R1, coordinate_chart("T", 1), (parse_poly("y1^2", R1),))
            ),
        },
        [],
    ),
    "assoc-c-plus": lambda: (_assoc_spec(), ["--samples", "4"]),
}


def write_job(tmp_path, obj, name="job.json"):
    path = tmp_path / name
    path.write_text(jsonio.dump_json(obj), encoding="utf-8")
    return str(path)


@pytest.mark.parametrize("verb", sorted(PASSING_JOBS))
def test_verb_passes_on_good_spec(tmp_path, verb):
    spec, extra = PASSING_JOBS[verb]()
    out = tmp_path / "report.json"
    rc = main([verb, "--spec", write_job(tmp_path, spec), "--out", str(out)] + extra)
    assert rc == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["job"]["verb"] == verb
    assert payload["job"]["spec"] == "job.json"
    assert payload["checks"]
    assert all(c["status"] == "pass" for c in payload["checks"])


def test_every_verb_has_a_passing_job():
    assert sorted(PASSING_JOBS) == sorted(VERBS)


def test_failing_check_exits_one(tmp_path):
    # dH != 0, so the twisted bracket misses the closure identity
    bad = KForm(R4, 3, {(1, 2, 3): Poly.coord(R4, 0)})
    spec = {"structure": jsonio.courant_to_json(standard_exact(R4, bad))}
    out = tmp_path / "report.json"
    rc = main(["check-courant", "--spec", write_job(tmp_path, spec), "--out", str(out)])
    assert rc == 1
    payload = json.loads(out.read_text(encoding="utf-8"))
    failed = [c["name"] for c in payload["checks"] if c["status"] == "fail"]
    assert failed == ["leibniz_identity"]


def test_missing_spec_file_exits_two(tmp_path):
    rc = main(["check-courant", "--spec", str(tmp_path / "nope.json")])
    assert rc == 2


def test_invalid_json_exits_two(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{nope", encoding="utf-8")
    assert main(["check-courant", "--spec", str(path)]) == 2


def test_missing_field_exits_two(tmp_path):
    assert main(["check-courant", "--spec", write_job(tmp_path, {})]) == 2


def test_bad_polynomial_exits_two_with_position(tmp_path, capsys):
    spec = {"structure": jsonio.courant_to_json(Q2)}
    spec["structure"]["anchor"][0][0] = "x1 +"
    assert main(["check-courant", "--spec", write_job(tmp_path, spec)]) == 2
    assert "position" in capsys.readouterr().err


def test_verb_flag_spelling(tmp_path):
    spec, _ = PASSING_JOBS["check-courant"]()
    path = write_job(tmp_path, spec)
    assert main(["--verb", "check-courant", "--spec", path]) == 0
    assert main(["--spec", path, "--verb=check-courant"]) == 0


def test_unsupported_mode_exits_three(tmp_path, capsys):
    parabola = ChartMap(R1, R2, (Poly.coord(R1, 0), parse_poly("y1^2", R1)))
    spec = {
        "structure": jsonio.courant_to_json(Q2),
        "map": jsonio.map_to_json(parabola),
    }
    rc = main(["pullback", "--spec", write_job(tmp_path, spec)])
    assert rc == 3
    assert "unsupported mode" in capsys.readouterr().err


def test_reports_are_byte_identical_across_runs(tmp_path):
    spec = write_job(tmp_path, {"structure": jsonio.courant_to_json(Q2)})
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    argv = ["tau-roundtrip", "--spec", spec, "--samples", "4", "--seed", "9"]
    assert main(argv + ["--out", str(first)]) == 0
    assert main(argv + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_out_flag_keeps_stdout_quiet(tmp_path, capsys):
    spec, _ = PASSING_JOBS["check-courant"]()
    out = tmp_path / "report.json"
    main(["check-courant", "--spec", write_job(tmp_path, spec), "--out", str(out)])
    assert capsys.readouterr().out == ""


def test_stdout_report_parses(tmp_path, capsys):
    spec, _ = PASSING_JOBS["twist"]()
    rc = main(["twist", "--spec", write_job(tmp_path, spec)])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["result"]["bracket"]


def test_job_echo_includes_max_degree(tmp_path, capsys):
    spec, _ = PASSING_JOBS["check-lie"]()
    rc = main(
        [
            "check-lie",
            "--spec",
            write_job(tmp_path, spec),
            "--samples",
            "5",
            "--max-degree",
            "1",
        ]
    )
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["job"]["max_degree"] == 1
    assert payload["job"]["samples"] == 5


def test_pushdown_report_prefixes_both_sides(tmp_path, capsys):
    spec, _ = PASSING_JOBS["dirac-pushdown"]()
    rc = main(["dirac-pushdown", "--spec", write_job(tmp_path, spec)])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    names = {c["name"] for c in payload["checks"]}
    assert "input.isotropy" in names
    assert "output.closure" in names
    assert payload["result"]["support"] == []


def test_module_entry_point(tmp_path):
    spec, _ = PASSING_JOBS["check-courant"]()
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "algebroids.cli",
            "check-courant",
            "--spec",
            write_job(tmp_path, spec),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["job"]["verb"] == "check-courant"
