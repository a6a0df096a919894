import json
import shutil
import subprocess

import numpy as np
import pytest

from fqpatterns.cli import main


def run(tmp_path, *argv, sub="out"):
    out = tmp_path / sub
    code = main([*argv, "--out", str(out)])
    return code, out


def load(path):
    return json.loads(path.read_text())


@pytest.mark.parametrize(
    "family,p,code,verdict",
    [("y^2 - y", 2, 2, "not_good"), ("y", 3, 0, "good"), ("y^{p}", 5, 2, "not_good"), ("y^{p+1}", 2, 0, "good")],
)
def test_classify_exact(tmp_path, family, p, code, verdict):
    c, out = run(tmp_path, "classify", "--family", family, "--p", str(p))
    assert c == code
    res = load(out / "classify.json")["result"]
    assert res["mode"] == "exact" and res["verdict"] == verdict


def test_classify_obstruction_is_reported(tmp_path):
    _, out = run(tmp_path, "classify", "--family", "y^2 - y", "--p", "2")
    res = load(out / "classify.json")["result"]
    assert res["obstruction"] == "F + 1" and res["witness_modulus"]


def test_classify_empirical_exit_codes(tmp_path):
    assert run(tmp_path, "classify", "--family", "y; y^2", "--p", "3", sub="a")[0] == 3
    assert run(tmp_path, "classify", "--family", "y; y^3", "--p", "3", "--q-list", "9,27", sub="b")[0] == 2


def test_parse_error_exit_code(tmp_path, capsys):
    c, _ = run(tmp_path, "classify", "--family", "y^^2", "--p", "3")
    assert c == 4
    err = capsys.readouterr().err
    assert "position 2" in err and "^" in err


def test_usage_errors(tmp_path):
    assert run(tmp_path, "classify", "--family", "y", "--p", "3", "--q", "8")[0] == 4
    assert run(tmp_path, "count", "--family", "y", "--p", "3")[0] == 4  # no q
    assert run(tmp_path, "discrepancy", "--family", "y", "--q", "9", "--seed", "0", "--ensemble", "bogus")[0] == 4


def test_budget_guard(tmp_path):
    c, out = run(tmp_path, "discrepancy", "--family", "y;y^2", "--q", "243", "--seed", "0", "--budget", "1e3")
    assert c == 4 and not (out / "discrepancy.json").exists()


def test_coset_count(tmp_path):
    c, out = run(tmp_path, "count", "--instance", "coset", "--q", "27")
    assert c == 0
    row = load(out / "count.json")["result"]["rows"][0]
    assert row["N"] == 0 and row["main_term"] == 81


def test_verify_suite_passes_at_q16(tmp_path):
    c, out = run(tmp_path, "verify", "all", "--q", "16", "--seeds", "20")
    assert c == 0
    res = load(out / "verify.json")["result"]
    assert json.dumps(res).count('"holds": false') == 0


def test_verify_reports_failure_exit_code(tmp_path):
    c, _ = run(tmp_path, "verify", "dual_function", "--q", "27", "--seeds", "23")
    assert c == 2


def test_pet_trace_table(tmp_path):
    c, out = run(tmp_path, "pet-trace", "--family", "y; y^2", "--p", "3")
    assert c == 0
    lines = (out / "pet_trace.csv").read_text().splitlines()
    assert lines[1].startswith("step,kind,weight,standard,i0,N,s,C1_log_p")
    assert load(out / "pet_trace.json")["result"]["s"] == 4


def test_fourier_roundtrip(tmp_path):
    c, out = run(tmp_path, "fourier", "--q", "81", "--seed", "3", "--generator", "phase")
    assert c == 0
    res = load(out / "fourier.json")["result"]
    assert res["roundtrip_max_error"] <= 1e-10 and res["parseval_gap"] <= 1e-10
    assert abs(res["u2_power"] - res["l4_spectrum"]) <= 1e-10


def test_fourier_from_csv(tmp_path):
    q = 9
    rng = np.random.default_rng(0)
    v = rng.random(q)
    src = tmp_path / "f.csv"
    src.write_text("index,re,im\n" + "".join(f"{i},{x},0\n" for i, x in enumerate(v)))
    c, out = run(tmp_path, "fourier", "--q", str(q), "--input", str(src))
    assert c == 0
    assert load(out / "fourier.json")["result"]["roundtrip_max_error"] <= 1e-10


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text('p = 3\nfamily = ["y", "y^2"]\nq_list = [9, 27, 81]\ntrials = 2\nseed = 5\n')
    c, out = run(tmp_path, "fit-gamma", "--config", str(cfg), "--trials", "3")
    assert c == 0
    doc = load(out / "fit_gamma.json")
    assert doc["config"]["trials"] == 3 and doc["config"]["seed"] == 5
    first = (out / "fit_gamma.csv").read_text().splitlines()[0]
    assert first.endswith(doc["config_hash"]) and doc["version"] in first


COMMANDS = [
    ["classify", "--family", "y; t*y^2", "--p", "2", "--q-list", "8,16,32", "--seed", "1"],
    ["count", "--family", "y; y^2", "--q", "27", "--seed", "4", "--trials", "3"],
    ["discrepancy", "--family", "y^2", "--q", "81", "--seed", "2", "--trials", "5"],
    ["fit-gamma", "--family", "y; y^2", "--q-list", "9,27,81", "--seed", "0", "--trials", "4"],
    ["verify", "all", "--q", "16", "--seeds", "4", "--seed", "0"],
    ["pet-trace", "--family", "y^2; y^2 + y", "--p", "3"],
    ["fourier", "--q", "64", "--seed", "7", "--generator", "set"],
]


@pytest.mark.parametrize("argv", COMMANDS, ids=[a[0] for a in COMMANDS])
def test_thread_count_does_not_change_outputs(tmp_path, argv):
    c1, o1 = run(tmp_path, *argv, "--threads", "1", sub="t1")
    c8, o8 = run(tmp_path, *argv, "--threads", "8", sub="t8")
    assert c1 == c8
    files = sorted(p.name for p in o1.iterdir())
    assert files and files == sorted(p.name for p in o8.iterdir())
    for name in files:
        assert (o1 / name).read_bytes() == (o8 / name).read_bytes(), name


@pytest.mark.skipif(shutil.which("fqpatterns") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["fqpatterns", "classify", "--family", "y", "--p", "2", "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and "classify.json" in r.stdout
