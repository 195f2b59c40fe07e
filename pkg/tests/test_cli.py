import io
import json
import math
import subprocess
import sys

import pytest

from lorentzlab import cli
from lorentzlab.certificates import PerturbationCertificate, verify_certificate
from lorentzlab.errors import InvariantBreach
from lorentzlab.tensor_duality import SymmetricTensorRep
from lorentzlab.weights import make_power_weight


def run(*argv):
    buf = io.StringIO()
    code = cli.run(list(argv), buf)
    return code, buf.getvalue()


def field(text, key):
    for line in text.splitlines():
        if line.startswith(f"{key}: "):
            return line.split(": ", 1)[1]
    raise KeyError(key)


def test_norm_example():
    code, out = run("norm", "--w", "power:1", "--x", "[1,1]", "--space", "dstar")
    assert code == 0
    assert float(field(out, "norm")) == pytest.approx(4 / 3, rel=1e-15)


def test_certify_example():
    code, out = run("certify", "--w", "power:1", "--x", "e1")
    assert code == 0
    assert json.loads(out.splitlines()[0]) == {"n0": 2, "delta": 0.5}
    assert field(out, "verification").startswith("pass")


def test_certificate_artifact_round_trips(tmp_path):
    path = tmp_path / "cert.json"
    assert run("certify", "--x", "[0.5, -0.25]", "--json", str(path))[0] == 0
    cert = PerturbationCertificate.from_dict(json.loads(path.read_text())["certificate"])
    assert verify_certificate(cert, 1001, 10 * cert.n0).passed


def test_polynorm_gallery_values():
    code, out = run("polynorm", "--gallery", "power-sum", "--N", "2", "--n", "2", "--seed", "7")
    assert code == 0 and float(field(out, "value")) == pytest.approx(1.25, rel=1e-12)
    assert field(out, "bracket_contains_value") == "True"
    # diag-N is l_2-valued here (M = 2 for the harmonic weight)
    code, out = run("polynorm", "--gallery", "diag-N", "--N", "2", "--n", "2", "--seed", "7")
    assert float(field(out, "value")) == pytest.approx(math.sqrt(17) / 4, rel=1e-12)
    code, out = run("polynorm", "--gallery", "diag-N", "--N", "2", "--n", "2", "--seed", "7",
                    "--r", "1")
    assert float(field(out, "value")) == pytest.approx(1.25, rel=1e-12)


def test_same_seed_same_bytes(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run("polynorm", "--gallery", "real-LB", "--N", "3", "--n", "3", "--M", "2",
                   "--seed", "3", "--starts", "8", "--json", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_usage_errors():
    assert run("norm", "--x", "[1]", "--bogus")[0] == 1
    assert run("polynorm", "--gallery", "power-sum", "--N", "2", "--n", "2")[0] == 1
    assert run("norm", "--x", "[1]", "--w", "power:2")[0] == 1
    assert run("certify", "--x", "[1, 1]")[0] == 1


def test_invariant_breach_exit_code(monkeypatch):
    def boom(cfg, args, out):
        raise InvariantBreach("forced")

    monkeypatch.setitem(cli.COMMANDS, "norm", boom)
    assert run("norm", "--x", "[1]")[0] == 2


def test_dualcheck_random():
    code, out = run("dualcheck", "--count", "50", "--seed", "1", "--n", "9")
    assert code == 0 and field(out, "count") == "50"


def test_pis_and_measure(tmp_path):
    code, out = run("pis", "--x", "[1, 0.5]", "--N", "2", "--seed", "0", "--restarts", "1",
                    "--family", "2")
    assert code == 0 and float(field(out, "upper")) == pytest.approx(1.0, rel=1e-9)
    w = make_power_weight(1.0, 3)
    u = SymmetricTensorRep(2, 3, w, [(2.0, [2.0, 0, 0], [0, 1.0, 0]), (-1.0, [0, 1.0, 1.0],
                                                                         [1.0, 1.0, 0])], 2.0)
    path = tmp_path / "u.json"
    path.write_text(json.dumps(u.to_dict()))
    code, out = run("measure", "--tensor", str(path))
    assert code == 0
    assert float(field(out, "total_variation")) == u.value()


def test_experiment_and_report(tmp_path):
    js, report_csv = tmp_path / "r.json", tmp_path / "r.csv"
    code, out = run("experiment", "lb-multilinear", "--N", "3", "--n", "6", "--eps", "1,0.5",
                    "--seed", "0", "--json", str(js))
    assert code == 0
    assert "contradiction reproduced" in out
    assert run("report", str(js), "--csv", str(report_csv))[0] == 0
    lines = report_csv.read_text().splitlines()
    assert lines[0].startswith("source,id,eps,label")
    assert len(lines) - 1 == sum(len(r["chain"]) for r in json.loads(js.read_text())["reports"])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lorentzlab", "norm", "--x", "e2"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "norm: 1.0" in res.stdout
