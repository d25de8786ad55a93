import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from opmassey.cli import main
from opmassey.operad import _data_path

OPERADS = Path(_data_path("operads", "ass.json")).parent
FIXTURES = Path(__file__).parent / "fixtures"


def run(*args, code=0):
    res = CliRunner().invoke(main, list(args))
    assert res.exit_code == code, (res.output, res.stderr if hasattr(res, "stderr") else "")
    return res


def body(*args, code=0):
    return json.loads(run(*args, code=code).stdout)


def test_koszul_dual_dimensions():
    out = body("--max-arity", "4", "--max-weight", "3", "koszul-dual", "--operad", str(OPERADS / "ass.json"))
    top = {c["arity"]: c["dim"] for c in out["cells"] if c["weight"] == c["arity"] - 1}
    assert top == {1: 1, 2: 2, 3: 6, 4: 24}
    out = body("--max-arity", "1", "--max-weight", "5", "koszul-dual", "--operad", "dual")
    assert [(c["weight"], c["dim"], c["degrees"]) for c in out["cells"]] == [
        (w, 1, [2 * w]) for w in range(6)]


def test_koszul_dual_parse_error(tmp_path):
    bad = tmp_path / "empty.json"
    bad.write_text(json.dumps({"name": "E", "generators": [], "relations": []}))
    res = run("koszul-dual", "--operad", str(bad), code=2)
    assert "no generators" in res.stderr


def test_indexing_set():
    out = body("indexing-set", "--operad", "lie", "--cooperation", "tau3c")
    assert out["keys"][3:] == ["(tau2c, 1, 2)", "(tau2c, 1, 3)", "(tau2c, 2, 3)"]


def test_massey_outcome_and_obstruction():
    out = body("massey", "--algebra", "triple-massey-ass", "--cooperation", "mu3c", "--classes", "x,y,z")
    assert out["outcome"]["class"] == [["[w]", 2, 1]]
    assert out["outcome"]["cycle"] == [["w", 2, 1]]
    out = body("massey", "--algebra", "triple-massey-ass-obstructed", "--cooperation", "mu3c", "--classes", "x,y,z")
    assert out["obstruction"]["key"] == "(mu2c, 1, 2)"
    assert out["obstruction"]["class"] == [["[p]", -1, 1]]


def test_massey_with_system_file(tmp_path):
    out = body("massey", "--algebra", "triple-massey-ass", "--cooperation", "mu3c", "--classes", "x,y,z")
    good = tmp_path / "good.json"
    good.write_text(json.dumps(out["system"]))
    ok = body("massey", "--algebra", "triple-massey-ass", "--cooperation", "mu3c", "--classes", "x,y,z",
              "--system", str(good))
    assert ok["verified"] and ok["outcome"]["class"] == [["[w]", 2, 1]]
    sysobj = out["system"]
    sysobj["values"]["(mu2c, 1, 2)"] = [["a", 1, 1]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(sysobj))
    rep = body("massey", "--algebra", "triple-massey-ass", "--cooperation", "mu3c", "--classes", "x,y,z",
               "--system", str(bad), code=1)
    assert [v["key"] for v in rep["violations"]] == ["(mu2c, 1, 2)"]
    run("check", "--algebra", "triple-massey-ass", "--cooperation", "mu3c", "--system", str(bad), code=1)


def test_unknown_names_are_errors():
    res = run("massey", "--algebra", "triple-massey-ass", "--cooperation", "mu3c", "--classes", "x,y,nope", code=2)
    assert json.loads(res.stderr)["error"]
    run("massey", "--algebra", "triple-massey-ass", "--cooperation", "nope", "--classes", "x,y,z", code=2)


def test_massey_sample_and_scaled_classes():
    out = body("massey-sample", "--algebra", "triple-massey-ass", "--cooperation", "mu3c",
               "--classes", "3*x,-y,z")
    assert out["classes"] == [[["[w]", -6, 1]]]  # 3 * (-1) * 2
    assert out["indeterminacy"] == []


def test_pullback():
    out = body("--max-arity", "4", "--max-weight", "3", "pullback", "--morphism", "lie_ass",
               "--algebra", "triple-massey-ass", "--cooperation", "tau3c", "--classes", "x,y,z")
    assert out["ok"]
    out = body("--max-arity", "4", "--max-weight", "3", "pullback", "--morphism", "ass_com",
               "--algebra", str(FIXTURES / "triple-massey-com.json"), "--cooperation", "mu3c",
               "--classes", "x,y,z")
    assert out["ok"]


def test_emss_page_two_on_staircase():
    out = body("emss", "--algebra", "dual-numbers-staircase", "--page", "2", "--window", "0:4,-2:10")
    nonzero = {tuple(d["from"]): d["matrix"] for d in out["differentials"]
               if any(x[0] for row in d["matrix"] for x in row)}
    # d2 sends [delta_p ⊗ y'] to [delta_{p-2} ⊗ s2]
    assert sorted(nonzero) == [(2, 2), (3, 3), (4, 4)]
    for m in nonzero.values():
        assert sum(1 for row in m for x in row if x[0]) == 1


def test_emss_massey_differential():
    out = body("--max-weight", "2", "emss", "--algebra", "dual-numbers-staircase", "--page", "2",
               "--cooperation", "delta2", "--classes", "y'")
    assert out["massey_differential"]["ok"] and out["massey_differential"]["sign"] == 1


def test_transfer_on_formal_algebra_has_no_higher_components():
    out = body("--max-weight", "3", "transfer", "--algebra", "formal-zero-d")
    assert out["identities"]["ok"]
    assert all(row["input"].count("(") == 1 for row in out["structure"]["delta"])


def test_transfer_recovering_and_rejection():
    out = body("--max-arity", "4", "--max-weight", "3", "transfer", "--algebra", "triple-massey-ass",
               "--cooperation", "mu3c", "--classes", "x,y,z")
    assert out["recovered"] == out["massey_class"] == [["[w]", 2, 1]]
    run("transfer", "--algebra", "dual-numbers-staircase", code=2)


def test_check_corrupted_fixture(tmp_path):
    obj = json.loads(Path(_data_path("algebras", "triple-massey-ass.json")).read_text())
    obj["operad"] = str(OPERADS / "ass.json")
    obj["actions"]["mu"].append({"inputs": ["y", "p"], "output": [["a", 1, 1]]})
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(obj))
    out = body("check", "--algebra", str(path), code=1)
    assert not out["algebra"]["ok"] and out["algebra"]["violations"]
    assert body("check", "--algebra", "poisson-weight2")["algebra"]["ok"]


@pytest.mark.parametrize("args", [
    ("--seed", "5", "--max-arity", "4", "--max-weight", "3", "transfer", "--algebra", "lie-bracket-massey", "--random"),
    ("massey-sample", "--algebra", "poisson-weight2", "--cooperation", "pois3", "--classes", "z1,z2,z3"),
    ("emss", "--algebra", "formal-zero-d", "--page", "2", "--window", "0:2,0:6"),
])
def test_output_is_deterministic(args):
    assert run(*args).stdout == run(*args).stdout


def test_out_option_writes_file(tmp_path):
    path = tmp_path / "r.json"
    res = run("--out", str(path), "indexing-set", "--operad", "ass", "--cooperation", "mu3c")
    assert res.stdout == "" and json.loads(path.read_text())["weight"] == 2
