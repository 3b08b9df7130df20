import json
import subprocess
import sys

import pytest

from majorant.cli import run
from majorant.numerics import sequence_from_json
from majorant.synthesis import SynthesisCertificate


def call(capsys, *argv):
    code = run(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_check_maj_writes_margins(tmp_path, capsys):
    out = tmp_path / "m.json"
    code, res = call(capsys, "check", "--xi", "2,1,1", "--eta", "3,1,0", "--out", str(out))
    assert code == 0 and res["status"] == "holds"
    assert json.loads(out.read_text())["margin_trace"] == ["1/1", "1/1", "0/1"]


def test_check_failure_reports_inequality(capsys):
    code, res = call(capsys, "check", "--xi", "3,1", "--eta", "2,2")
    assert code == 1 and res["violated"].startswith("sum_(k<=1) xi*_k = 3/1 > 2/1")


def test_check_relation_dispatch(capsys):
    code, res = call(capsys, "check", "--xi", "2,1,1", "--eta", "3,1,0", "--relation", "p-maj", "--p", "2")
    assert code == 0 and res["relation"] == "p-maj" and res["parameters"]["p"] == 2


def test_check_unknown_on_uncertified_tail(capsys):
    code, res = call(capsys, "check", "--xi", "harmonic:32", "--eta", "harmonic:32")
    assert code == 2 and res["status"] == "unknown"


def test_synthesize_refusal(capsys):
    code, res = call(capsys, "synthesize", "--xi", "3,1,1", "--eta", "3,1,0")
    assert code == 1 and res["status"] == "refused" and "5/1 > 4/1" in res["violated"]


def test_synthesize_round_trip(tmp_path, capsys):
    out = tmp_path / "cert.json"
    code, res = call(capsys, "synthesize", "--xi", "1/2,1/4,1/8,1/8", "--eta", "3/4,1/8,1/8,0",
                     "--strategy", "theorem", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    cert = SynthesisCertificate.from_json(doc["certificate"])
    assert cert.to_json() == doc["certificate"]
    code, res = call(capsys, "verify-bound", "--certificate", str(out))
    assert code == 0 and res["ok"]


def test_generate_app_gap_files(tmp_path, capsys):
    d = tmp_path / "ag"
    code, res = call(capsys, "generate", "--family", "app-gap", "--p", "1", "--out-dir", str(d),
                     "--params", "length=64")
    assert code == 0
    for name in ("xi", "eta"):
        text = (d / f"{name}.json").read_text()
        s = sequence_from_json(json.loads(text))
        assert json.loads(text)["terms"][0] == ("1/4" if name == "xi" else "1/2")
        assert sequence_from_json(json.loads(json.dumps(json.loads(text)))) == s
    certs = json.loads((d / "certificates.json").read_text())["certificates"]
    assert {c["relation"] for c in certs} == {"maj", "approx-p-maj", "p-maj"}


@pytest.mark.parametrize("family", ["p-gap", "half-ampliation", "strong-infty"])
def test_generate_families_verify(family, capsys):
    code, res = call(capsys, "generate", "--family", family, "--p", "2")
    assert code == 0 and "verification" in res


def test_generate_convex(capsys):
    code, res = call(capsys, "generate", "--family", "convex", "--xi", "2,2,0,0",
                     "--params", "zeta=4/3,4/3,4/3,0", "lambda=1/2", "q=0", "--p", "0", "--eta", "2,2,0,0")
    assert code == 0 and res["params"]["r"] == 0 and res["verification"]["status"] == "holds"


def test_sample_and_search(capsys):
    code, res = call(capsys, "sample", "--eta", "3,1,0", "--samples", "500", "--seed", "3")
    assert code == 0 and res["seed"] == 3 and res["violation_count"] == 0
    code, res = call(capsys, "search", "--eta", "1,0,0", "--budget", "300")
    assert code == 0 and res["heuristic"]


def test_verify_bound_from_matrix_file(tmp_path, capsys):
    m = tmp_path / "q.csv"
    m.write_text("0,1,0\n0,0,1\n1,0,0\n")
    code, res = call(capsys, "verify-bound", "--matrix", str(m), "--eta", "3,2,1", "--epsilon", "1/8")
    assert code == 0 and res["N_r_eps"] == 1


def test_hierarchy_command(capsys):
    code, res = call(capsys, "hierarchy", "--xi", "2,1,1", "--eta", "3,1,0")
    assert code == 0 and res["violations"] == 0


@pytest.mark.parametrize("argv, field", [
    (["check", "--xi", "1,x", "--eta", "1"], "--xi"),
    (["check", "--xi", "1", "--eta", "0.5"], "--eta"),
    (["check", "--xi", "1", "--eta", "1", "--p", "-1"], "--p"),
    (["check", "--xi", "1", "--eta", "1", "--epsilon", "0"], "--epsilon"),
    (["check", "--relation", "bogus"], "arguments"),
    (["generate", "--family", "convex", "--xi", "1", "--params", "oops"], "--params"),
    (["verify-bound", "--eta", "1"], "--matrix"),
])
def test_usage_errors_point_at_field(argv, field, capsys):
    code, res = call(capsys, *argv)
    assert code == 3 and res["field"] == field


def test_malformed_json_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "finite", "terms": ["1", 0.5]}')
    code, res = call(capsys, "check", "--xi", str(bad), "--eta", "1")
    assert code == 3 and "terms[1]" in res["error"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "majorant", "check", "--xi", "2,2", "--eta", "3,1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["status"] == "holds"
