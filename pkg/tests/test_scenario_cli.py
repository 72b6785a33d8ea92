import json
import math

import pytest
from hypothesis import given, strategies as st

from rdi.cli import main
from rdi.report import CheckReport, dumps, scenario_document, to_markdown
from rdi.runner import RunOptions, run_scenario
from rdi.scenario import (
    BUILTIN_NAMES,
    ConfigError,
    ScenarioNotFound,
    build_scenario,
    builtin_document,
    get_scenario,
    load_scenario,
)

MINIMAL = {
    "name": "plane",
    "ambient_dim": 2,
    "base_dim": 1,
    "metric": "euclidean",
    "rho": ["x1"],
    "fiber_chart": {"map": ["l1", "t1"], "domain": [{"interval": [0, 1]}]},
    "lambda_grid": [0.5, 1.0],
}


def write(tmp_path, doc, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc), encoding="utf-8")
    return p


def with_(doc, **kw):
    d = json.loads(json.dumps(doc))
    d.update(kw)
    return d


def test_minimal_file_loads_and_runs(tmp_path):
    sc = load_scenario(write(tmp_path, MINIMAL))
    assert (sc.m, sc.k, sc.bundle.rank) == (2, 1, 1)
    reps = run_scenario(sc, RunOptions())
    assert reps and all(r.passed for r in reps), [r.name for r in reps if not r.passed]


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtins_load(name):
    sc = get_scenario(name)
    assert sc.name == name and len(sc.lambda_grid) >= 1


def test_file_copy_of_sphere2_reproduces_builtin(tmp_path):
    doc = builtin_document("sphere2")
    assert doc["rho"] == ["x1^2 + x2^2"]
    from_file = run_scenario(load_scenario(write(tmp_path, doc)), RunOptions())
    builtin = run_scenario(get_scenario("sphere2"), RunOptions())
    assert [r.to_dict() for r in from_file] == [r.to_dict() for r in builtin]


@pytest.mark.parametrize("patch, path", [
    ({"rho": ["x1 +"]}, "rho[0]"),
    ({"ambient_dim": "two"}, "ambient_dim"),
    ({"base_dim": 2}, "base_dim"),
    ({"rho": ["x1", "x2"]}, "rho"),
    ({"metric": [["1", "0"], ["0"]]}, "metric[1]"),
    ({"fiber_chart": {"map": ["l1", "t1"]}}, "fiber_chart.domain"),
    ({"lambda_grid": []}, "lambda_grid"),
    ({"quad_order": 0}, "quad_order"),
    ({"bogus": 1}, "bogus"),
    ({"sections": [["y1"]]}, "sections[0][0]"),
    ({"bundle": {"rank": 1, "connection": [[["0"]]]}}, "bundle.connection"),
    ({"trivialization": {"k_volume": "t9 +"}}, "trivialization.k_volume"),
])
def test_schema_errors_name_the_field(patch, path):
    with pytest.raises(ConfigError) as ei:
        build_scenario(with_(MINIMAL, **patch))
    assert ei.value.path == path


def test_missing_field():
    doc = dict(MINIMAL)
    del doc["rho"]
    with pytest.raises(ConfigError, match="rho: missing required field"):
        build_scenario(doc)


def test_syntax_error_location():
    with pytest.raises(ConfigError, match=r"rho\[0\]: syntax error at offset 4"):
        build_scenario(with_(MINIMAL, rho=["x1 +"]))


def test_invalid_json_and_missing_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{\"name\": ", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_scenario(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_scenario(tmp_path / "absent.json")


def test_unknown_builtin():
    with pytest.raises(ScenarioNotFound):
        get_scenario("nope")


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run", "nope"]) == 2
    assert "scenario not found: nope" in capsys.readouterr().err
    bad = write(tmp_path, with_(MINIMAL, rho=["x1 +"]))
    assert main(["run", str(bad)]) == 3
    assert "offset 4" in capsys.readouterr().err
    assert main(["validate", str(bad)]) == 3
    capsys.readouterr()
    assert main(["validate", str(write(tmp_path, MINIMAL, "ok.json"))]) == 0
    assert capsys.readouterr().out.strip() == "plane: ok (m=2, k=1, rank=1)"
    assert main(["run", "sphere2", "--quad-order", "0"]) == 2


def test_cli_list(capsys):
    assert main(["list"]) == 0
    assert capsys.readouterr().out.split() == list(BUILTIN_NAMES)


def test_cli_failing_check_exits_one(tmp_path, capsys):
    # a tolerance no floating-point residual can meet
    assert main(["run", "sphere2", "--tol", "-1"]) == 1
    assert "FAIL sphere2:" in capsys.readouterr().err


def test_cli_report_file_and_schema(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "sphere3", "--report", str(out)]) == 0
    docs = json.loads(out.read_text(encoding="utf-8"))
    assert [d["scenario"] for d in docs] == ["sphere3"]
    keys = {"name", "paper_ref", "value", "oracle", "abs_err", "tol", "pass", "ms"}
    for c in docs[0]["checks"]:
        assert keys <= set(c)
        assert c["ms"] == 0.0
    deriv = [c for c in docs[0]["checks"] if c["name"].startswith("derivation formula, closed form")]
    assert deriv and deriv[0]["value"] == pytest.approx(math.pi, abs=1e-6)


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", "two_component", "--report", str(a)]) == 0
    assert main(["run", "two_component", "--report", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_markdown_format(tmp_path):
    out = tmp_path / "r.md"
    assert main(["run", "linear_projection", "--format", "md", "--report", str(out)]) == 0
    text = out.read_text(encoding="utf-8")
    assert text.startswith("## linear_projection (")
    assert "| coarea formula |" in text


def test_timings_are_recorded_on_request():
    reps = run_scenario(get_scenario("sphere2"), RunOptions(timings=True))
    assert any(r.ms > 0 for r in reps)


def test_linear_projection_coarea_value():
    reps = run_scenario(get_scenario("linear_projection"), RunOptions())
    co = [r for r in reps if r.name == "coarea formula"]
    assert len(co) == 1 and co[0].passed
    assert co[0].oracle == 0.25 and co[0].abs_err <= 1e-10


def test_rank_failure_is_a_failed_precondition():
    doc = with_(MINIMAL, rho=["x1^3"], lambda_grid=[0.0])
    doc["fiber_chart"] = {"map": ["0", "t1"], "domain": [{"interval": [0, 1]}]}
    reps = run_scenario(build_scenario(doc), RunOptions())
    assert not reps[0].passed and reps[0].name.startswith("precondition: rank")


def test_tol_override_precedence():
    doc = with_(MINIMAL, tolerances={"coarea formula": 0.5})
    sc = build_scenario(doc)
    assert sc.tolerances == {"coarea formula": 0.5}


numbers = st.floats(-1e6, 1e6, allow_nan=False)


@given(numbers, numbers, st.floats(0, 1e3, allow_nan=False), st.floats(0, 1e3, allow_nan=False))
def test_report_roundtrip_and_pass_rule(v, o, err, tol):
    rep = CheckReport("c", "ref", v, o, err, tol)
    assert rep.passed == (err <= tol)
    back = CheckReport.from_dict(json.loads(json.dumps(rep.to_dict())))
    assert back == rep


def test_report_arrays_and_failures_roundtrip():
    rep = CheckReport("c", "ref", [1.0, [2.0, 3.0]], 1 + 2j, 0.1, 0.2, note="n")
    assert rep.oracle == [1.0, 2.0]
    assert CheckReport.from_dict(rep.to_dict()) == rep
    f = CheckReport.failure("c", "ref", "boom")
    assert not f.passed and f.note == "boom"
    assert not CheckReport("c", "ref", 0, 0, math.nan, 1.0).passed
    d = rep.to_dict()
    d["pass"] = False
    with pytest.raises(ValueError):
        CheckReport.from_dict(d)


def test_at_least_encoding():
    assert CheckReport.at_least("c", "r", 0.5, 1e-2).passed
    bad = CheckReport.at_least("c", "r", 1e-3, 1e-2)
    assert not bad.passed and bad.abs_err == pytest.approx(9e-3)


def test_markdown_table():
    doc = scenario_document("s", [CheckReport("c", "r", [1.0] * 6, 0.0, 0.0, 1.0)])
    md = to_markdown([doc])
    assert "## s (1/1 passed)" in md and "[6 values]" in md
    assert json.loads(dumps([doc]))[0]["checks"][0]["pass"] is True
