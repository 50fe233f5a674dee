import json
import subprocess
import sys


from vacone.catalog import data_files
from vacone.cli import main

DATA = {p.name.removesuffix(".json"): str(p) for p in data_files()}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_reports_quadrant_witness(capsys):
    code, out, _ = run(capsys, "analyze", DATA["subregular_not_am_regular"], "--json")
    assert code == 0
    rep = json.loads(out)
    sec = {s["check"]: s for s in rep["sections"]}
    assert sec["am_reg"]["value"] == "Refuted"
    assert sec["am_reg"]["detail"]["witness"]["limit"] == ["1", "0"]


def test_analyze_single_check(capsys):
    code, out, _ = run(capsys, "analyze", DATA["am_not_m_square"], "--checks", "m_stat", "--json")
    assert code == 0
    rep = json.loads(out)
    assert [s["check"] for s in rep["sections"]] == ["m_stat"]


def test_analyze_bad_schema(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{"schema_version": 2}')
    assert run(capsys, "analyze", str(f))[0] == 2
    f.write_text("{not json")
    assert run(capsys, "analyze", str(f))[0] == 2
    assert run(capsys, "analyze", str(tmp_path / "missing.json"))[0] == 2


def test_analyze_usage_errors(capsys):
    assert run(capsys, "analyze", DATA["am_not_m_square"], "--checks", "nope")[0] == 2
    assert run(capsys, "analyze", DATA["am_not_m_square"], "--point", "1,2")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_analyze_infeasible_point(capsys):
    code, _, err = run(capsys, "analyze", DATA["am_not_m_square"], "--point", "1")
    assert code == 1 and "not feasible" in err


def test_reports_are_byte_identical():
    cmd = [sys.executable, "-m", "vacone.cli", "analyze", DATA["subregular_not_am_regular"], "--json", "--seed", "5"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b


def test_seed_from_environment():
    cmd = [sys.executable, "-m", "vacone.cli", "analyze", DATA["cubic_gacq_fails"], "--json"]
    env = {"VACONE_SEED": "11", "PATH": ""}
    out = subprocess.run(cmd, capture_output=True, check=True, env=env).stdout
    assert json.loads(out)["seed"] == 11


def test_verify_replays_certificates(capsys, tmp_path):
    report = tmp_path / "r.json"
    assert run(capsys, "analyze", DATA["subregular_not_am_regular"], "--out", str(report))[0] == 0
    code, out, _ = run(capsys, "analyze", DATA["subregular_not_am_regular"], "--verify", str(report))
    assert code == 0
    assert "m_stat          verified" in out and "am_reg          verified" in out
    # a tampered multiplier must fail the replay
    d = json.loads(report.read_text())
    for s in d["sections"]:
        if s["check"] == "m_stat":
            s["detail"]["certificate"]["mcert"]["lam"] = ["5", "0"]
    report.write_text(json.dumps(d))
    code, out, _ = run(capsys, "analyze", DATA["subregular_not_am_regular"], "--verify", str(report))
    assert code == 1 and "FAILED" in out


def test_penalty_square(capsys, tmp_path):
    csv = tmp_path / "t.csv"
    code, out, _ = run(capsys, "penalty", DATA["am_not_m_square"], "--kmax", "1e6", "--csv", str(csv))
    assert code == 0
    rows = csv.read_text().splitlines()
    assert rows[0] == "k,x1,y_norm,lambda_norm,eps_norm,branch"
    last = rows[-1].split(",")
    assert abs(float(last[1])) <= 1e-2
    lam_first, lam_last = float(rows[1].split(",")[3]), float(last[3])
    assert lam_last / lam_first >= 10
    assert '"classification": "Abnormal"' in out and '"lambda": ["1"]' in out


def test_penalty_affine_and_single_row(capsys):
    code, out, _ = run(capsys, "penalty", DATA["ccp_affine"], "--json")
    assert code == 0 and json.loads(out)["classification"]["classification"] == "MLimit"
    code, out, _ = run(capsys, "penalty", DATA["ccp_affine"], "--kmax", "1")
    assert code == 0 and len([l for l in out.splitlines() if l[:1].isdigit()]) == 1


def test_penalty_infeasible_point(capsys, tmp_path):
    d = json.loads(open(DATA["am_not_m_square"]).read())
    d["point"] = ["1"]
    f = tmp_path / "p.json"
    f.write_text(json.dumps(d))
    assert run(capsys, "penalty", str(f))[0] == 1


def test_cone_limiting_on_quadrant_complement(capsys):
    code, out, _ = run(capsys, "cone", DATA["cubic_gacq_fails"], "--set", "K", "--point", "0,0", "--kind", "limiting")
    assert code == 0
    assert sorted(out.splitlines()) == ["branch 0: rays (0,1); lineality none", "branch 1: rays (1,0); lineality none"]


def test_cone_tangent_and_linearization(capsys):
    code, out, _ = run(capsys, "cone", DATA["ccp_linear"], "--set", "K", "--kind", "tangent", "--json")
    assert code == 0
    code, out, _ = run(capsys, "cone", DATA["subregular_not_am_regular"], "--set", "K", "--kind", "tangent")
    assert out.strip() == "branch 0: rays (-1,0); (0,-1); lineality none"
    code, out, _ = run(capsys, "cone", DATA["cubic_gacq_fails"], "--kind", "linearization")
    assert out.strip() == "branch 0: rays none; lineality (1)"


def test_cone_point_outside_set(capsys):
    assert run(capsys, "cone", DATA["cubic_gacq_fails"], "--set", "K", "--point", "1,1")[0] == 1


def test_catalog_command(capsys):
    code, out, _ = run(capsys, "catalog", "--filter", "ccp_", "--json")
    assert code == 0
    d = json.loads(out)
    assert len(d["entries"]) == 3 and d["hard_failures"] == 0


def test_rules_command(capsys):
    code, out, _ = run(capsys, "rules", DATA["am_regular_not_subregular"], "--json")
    assert code == 0 and json.loads(out)["preimage"]["verdict"] == "Holds"
