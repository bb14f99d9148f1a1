import json
import subprocess
import sys

import pytest

from transgression.cli import RunConfig, load_scenario, main, parse_tau, run_suite
from transgression.errors import FlatnessViolation, ScenarioError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_theta_expand_forms(capsys):
    assert run(capsys, "theta-expand", "--form", "delta1", "--qorder", "48")[1].strip() == "1/4 + 6q + 6q^2"
    assert run(capsys, "theta-expand", "--form", "e4", "--qorder", "48")[1].strip() == "1 + 240q + 2160q^2"
    assert run(capsys, "theta-expand", "--form", "eps2", "--qorder", "24")[1].strip() == "q^{1/2} + 8q"


def test_theta_expand_eta_cube(capsys):
    code, out, _ = run(capsys, "theta-expand", "--kind", "theta", "--wdeg", "1", "--qorder", "27")
    assert code == 0
    assert "[w] 2q^{1/8} - 6q^{9/8}" in out


def test_theta_expand_json(capsys):
    code, out, _ = run(capsys, "theta-expand", "--form", "delta2", "--qorder", "24", "--json")
    d = json.loads(out)
    assert d["trunc"] == 25 and d["terms"][0] == [0, [[0, ["-1/8", "0/1", "0/1", "0/1", "0/1", "0/1", "0/1", "0/1"]]]]


def test_usage_errors(capsys):
    assert run(capsys, "verify", "--suite", "nope")[0] == 2
    assert run(capsys, "theta-expand", "--qorder", "-1")[0] == 2
    assert run(capsys, "verify", "--suite", "theta", "--tol", "0")[0] == 2
    assert run(capsys)[0] == 2


def test_parse_tau():
    assert parse_tau("2i") == 2j
    assert parse_tau("i") == 1j
    assert parse_tau("1+2i") == 1 + 2j
    with pytest.raises(Exception):
        parse_tau("-2i")


def test_verify_dim3(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "dim3", "--seed", "7")
    assert code == 0
    assert "0 failed" in out


def test_report_deterministic():
    cfg = RunConfig(seed=3)
    a = run_suite("modular", cfg).to_json()
    b = run_suite("modular", cfg).to_json()
    a.pop("timing"), b.pop("timing")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert all(e["anchor"] for e in a["entries"])


def test_text_and_json_agree():
    rep = run_suite("theta", RunConfig(seed=1))
    text = rep.to_text()
    for e in rep.to_json()["entries"]:
        assert e["id"] in text and e["anchor"] in text


def test_threads_env(monkeypatch):
    cfg = RunConfig(seed=2)
    serial = run_suite("theta", cfg, threads=1).to_json()
    monkeypatch.setenv("TRANSGRESSION_THREADS", "2")
    par = run_suite("theta", cfg).to_json()
    serial.pop("timing"), par.pop("timing")
    assert serial == par


def test_flat_shears_zero_is_skipped(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "flat", "--seed", "0", "--shears", "0", "--qorder", "24")
    assert code == 0
    assert "SKIPPED-DEGENERATE" in out and "flat.e4" in out


def test_scenario_roundtrip(tmp_path, capsys):
    f = tmp_path / "s.json"
    assert run(capsys, "scenario", "gen", "--m", "5", "--n", "3", "--seed", "1", "--out", str(f))[0] == 0
    assert run(capsys, "scenario", "validate", str(f))[0] == 0
    g = tmp_path / "s2.json"
    run(capsys, "scenario", "gen", "--m", "5", "--n", "3", "--seed", "1", "--out", str(g))
    assert f.read_bytes() == g.read_bytes()
    code, out, _ = run(capsys, "cs-compute", "--scenario", str(f), "--kind", "phiW", "--qorder", "24")
    assert code == 0 and "degree 3" in out


def test_flat_scenario_cs_compute(tmp_path, capsys):
    f = tmp_path / "flat.json"
    assert run(capsys, "scenario", "gen", "--flat", "--m", "5", "--n", "4", "--seed", "1", "--out", str(f))[0] == 0
    assert json.loads(f.read_text())["claims_flat"] is True
    code, out, _ = run(capsys, "cs-compute", "--scenario", str(f), "--kind", "psiW", "--qorder", "24", "--json")
    assert code == 0
    assert "3" in json.loads(out)["components"]


def test_flat_n3_note(tmp_path, capsys):
    f = tmp_path / "flat3.json"
    code, _, err = run(capsys, "scenario", "gen", "--flat", "--m", "7", "--n", "3", "--seed", "1",
                       "--shears", "3", "--out", str(f))
    assert code == 0 and "rank < 4" in err


def test_validate_reports_pointer(tmp_path, capsys):
    f = tmp_path / "s.json"
    run(capsys, "scenario", "gen", "--m", "3", "--n", "2", "--seed", "0", "--out", str(f))
    d = json.loads(f.read_text())
    d["A1"][0][1][0]["coeff"] = "x"
    f.write_text(json.dumps(d))
    code, _, err = run(capsys, "scenario", "validate", str(f))
    assert code == 2 and "/A1/0/1/0/coeff" in err


def test_validate_flatness_violation(tmp_path, capsys):
    f = tmp_path / "s.json"
    run(capsys, "scenario", "gen", "--flat", "--m", "3", "--n", "2", "--seed", "0", "--shears", "2", "--out", str(f))
    d = json.loads(f.read_text())
    d["A1"][0][0].append({"coords": [1], "form": [2], "coeff": "1"})
    f.write_text(json.dumps(d))
    code, _, err = run(capsys, "scenario", "validate", str(f))
    assert code == 1 and "nonzero entry (1,1)" in err


@pytest.mark.parametrize("mutate,pointer", [
    (lambda d: d.pop("A0"), "/"),
    (lambda d: d.__setitem__("n", 3), "/A0"),
    (lambda d: d["A1"][0][1][0].__setitem__("form", [9]), "/A1/0/1/0/form"),
    (lambda d: d["A1"][0][1][0].__setitem__("q", 24), "/A1/0/1/0/q"),
    (lambda d: d["A1"][0][1][0].__setitem__("extra", 1), "/A1/0/1/0"),
])
def test_schema_pointers(mutate, pointer):
    from transgression.formcalc import random_pair
    d = random_pair(3, 2, 0, degree_cap=1, nterms=2).to_json()
    mutate(d)
    with pytest.raises(ScenarioError) as ei:
        load_scenario(d)
    assert ei.value.pointer == pointer


def test_load_scenario_rejects_fake_flat():
    from transgression.formcalc import random_pair
    d = random_pair(3, 2, 0, degree_cap=1, nterms=2, trivial_a0=True).to_json()
    d["claims_flat"] = True
    with pytest.raises(FlatnessViolation):
        load_scenario(d)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "transgression", "theta-expand", "--form", "delta1",
                        "--qorder", "48"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "1/4 + 6q + 6q^2"
