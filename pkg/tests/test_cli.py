import json
import math
import subprocess
import sys

import numpy as np
import pytest

from spinlab import cli
from spinlab.entanglement import binary_entropy
from spinlab.scaling import CSV_HEADER, SweepResult


def run(*argv, env=None):
    return cli.run(list(argv), env={} if env is None else env)


def body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def meta(text):
    return dict(line[2:].split("=", 1) for line in text.splitlines() if line.startswith("# "))


def kv(text):
    return dict(line.split("=", 1) for line in body(text))


def test_spectrum_periodic():
    code, out = run("spectrum", "--model", "ising", "--n", "8", "--lambda", "1", "--boundary", "periodic",
                    "--parity", "even", "--threads", "1")
    assert code == 0
    lines = body(out)
    assert lines[0] == "k,phi,lambda_k" and len(lines) == 9
    lams = [float(r.split(",")[2]) for r in lines[1:]]
    # even sector at lambda = 1: Lambda = 4 |sin(phi / 2)| with phi = pi (2k+1)/8
    assert min(lams) == pytest.approx(4 * math.sin(math.pi / 16), abs=1e-12)
    assert "\r" not in out


def test_spectrum_open_chain():
    code, out = run("spectrum", "--boundary", "open", "--n", "6", "--lambda", "0.7")
    assert code == 0 and len(body(out)) == 7
    assert run("spectrum", "--boundary", "open", "--lambda", "0")[0] == 2
    assert run("spectrum", "--boundary", "open", "--lambda", "0", "--matrix")[0] == 0
    assert run("spectrum", "--boundary", "open", "--model", "xy", "--gamma", "0.5")[0] == 2


def test_invalid_flags_exit_two():
    assert run("spectrum", "--bogus")[0] == 2
    assert run("spectrum", "--n", "x")[0] == 2
    assert run("spectrum", "--model", "heisenberg")[0] == 2
    assert run("spectrum", "--n", "1")[0] == 2
    assert run("nosuchcommand")[0] == 2
    assert run("collapse")[0] == 2
    assert run("schmidt", "--n", "7", "--lambda", "0.5")[0] == 2


def test_entropy_scan_fit_and_log2():
    code, out = run("entropy-scan", "--preset", "ising-critical", "--L", "16:256:16", "--fit-c")
    assert code == 0
    rows = body(out)
    assert rows[0] == "lambda,gamma,L,entropy"
    last = rows[-1].split(",")
    assert last[2] == "c_fit" and float(last[3]) == pytest.approx(0.5, abs=0.05)
    _, nat = run("entropy-scan", "--preset", "off-critical", "--L", "1:4:1")
    _, bits = run("entropy-scan", "--preset", "off-critical", "--L", "1:4:1", "--log2")
    s_nat = [float(r.split(",")[3]) for r in body(nat)[1:]]
    s_bit = [float(r.split(",")[3]) for r in body(bits)[1:]]
    np.testing.assert_allclose(np.array(s_bit) * math.log(2), s_nat, rtol=1e-14)


def test_entropy_scan_finite_route():
    code, out = run("entropy-scan", "--method", "finite", "--model", "ising", "--n", "200", "--lambda", "1.5",
                    "--L", "1,2")
    assert code == 0
    assert len(body(out)) == 3
    assert run("entropy-scan", "--method", "finite", "--n", "10", "--L", "1:20:1")[0] == 2


def test_schmidt_sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    code, out = run("schmidt", "--n", "10", "--lambda", "0:2:0.05", "--output", str(path))
    assert code == 0 and out == ""
    text = path.read_text()
    assert body(text)[0] == ",".join(CSV_HEADER)
    data = SweepResult.from_csv(text)
    assert len(data.rows) == 41
    assert meta(text)["config.n"] == "10"


def test_collapse_from_file(tmp_path):
    from spinlab.scaling import synthetic_sweep

    path = tmp_path / "syn.csv"
    lams = np.round(np.arange(0.9, 1.1 + 1e-9, 0.005), 10)
    path.write_text(synthetic_sweep([64, 128, 256, 512], lams, 0.125, 1.0).to_csv())
    code, out = run("collapse", "--input", str(path), "--lambda-c", "1.0", "--format", "json")
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert set(row) == {"mu1", "mu2", "cost", "nu_est", "beta_est", "n_points"}
    assert row["mu1"] == pytest.approx(0.125, abs=0.01) and row["nu_est"] == pytest.approx(1.0, abs=0.02)
    assert run("collapse", "--input", str(tmp_path / "missing.csv"))[0] == 2


def test_bell_and_chsh():
    code, out = run("bell", "--violating-angles", "--format", "kv")
    assert code == 0
    assert kv(out) == {"lhs": "1", "rhs": "0.75", "violated": "true"}
    code, out = run("bell", "--chsh", "--format", "json")
    row = json.loads(out)["rows"][0]
    assert row["chsh_max"] == pytest.approx(2 * math.sqrt(2), abs=1e-6)


def test_gns_presets():
    code, out = run("gns", "--preset", "m2-lambda", "--lambda", "0.3", "--format", "kv")
    vals = kv(out)
    assert code == 0 and vals["hilbert_dim"] == "4"
    assert float(vals["entropy"]) == pytest.approx(float(binary_entropy(0.3)), abs=1e-10)
    vals = kv(run("gns", "--preset", "two-fermion", "--theta", "0", "--format", "kv")[1])
    assert float(vals["entropy"]) == pytest.approx(0.0, abs=1e-10)
    assert run("gns", "--preset", "m2-lambda", "--lambda", "2")[0] == 2


def test_byte_for_byte_determinism():
    args = ("schmidt", "--n", "8,12", "--lambda", "0.9:1.1:0.1", "--threads", "1")
    assert run(*args) == run(*args)
    a = run("bell", "--chsh", "--seed", "3", "--threads", "1")
    assert a == run("bell", "--chsh", "--seed", "3", "--threads", "1")


def test_threads_do_not_change_results():
    one = body(run("schmidt", "--n", "8,12", "--lambda", "0.9:1.1:0.1", "--threads", "1")[1])
    four = body(run("schmidt", "--n", "8,12", "--lambda", "0.9:1.1:0.1", "--threads", "4")[1])
    assert one == four


def test_metadata_echoes_config():
    out = run("spectrum", "--n", "4", "--lambda", "0.25")[1]
    m = meta(out)
    assert m["command"] == "spectrum" and m["config.n"] == "4" and m["config.lambda"] == "0.25"
    assert "numpy" in m and "scipy" in m and "tol.artanh_guard" in m
    js = json.loads(run("spectrum", "--n", "4", "--format", "json")[1])
    assert list(js["metadata"]) == sorted(js["metadata"])


def test_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn = 6\nlambda=0.5\n")
    out = run("spectrum", "--config", str(cfg))[1]
    assert meta(out)["config.n"] == "6" and len(body(out)) == 7
    out = run("spectrum", "--config", str(cfg), env={"SPINLAB_N": "4"})[1]
    assert meta(out)["config.n"] == "4"
    out = run("spectrum", "--config", str(cfg), "--n", "10", env={"SPINLAB_N": "4"})[1]
    assert meta(out)["config.n"] == "10"
    # preset sits below config
    cfg2 = tmp_path / "scan.cfg"
    cfg2.write_text("preset=off-critical\ngamma=0.25\nL=1,2\n")
    m = meta(run("entropy-scan", "--config", str(cfg2))[1])
    assert m["config.gamma"] == "0.25" and m["config.lambda"] == "0.5"


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n=6\ncolour=blue\n")
    assert run("spectrum", "--config", str(cfg))[0] == 2
    cfg.write_text("no equals sign\n")
    assert run("spectrum", "--config", str(cfg))[0] == 2
    assert run("spectrum", "--config", str(tmp_path / "absent.cfg"))[0] == 2
    assert run("spectrum", env={"SPINLAB_N": "six"})[0] == 2


def test_grid_parsing():
    assert cli.parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert cli.parse_grid("16:64:16", int) == [16, 32, 48, 64]
    assert cli.parse_grid("0.1,0.3") == [0.1, 0.3]
    assert cli.parse_grid("2") == [2.0]
    for bad in ("1:0:0.1", "0:1:0", "a:b:c"):
        with pytest.raises(ValueError):
            cli.parse_grid(bad)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spinlab", "bell", "--violating-angles", "--format", "kv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "violated=true" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "spinlab", "spectrum", "--bogus"], capture_output=True, text=True)
    assert proc.returncode == 2
