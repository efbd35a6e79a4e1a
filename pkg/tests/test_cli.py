from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

import pytest

from ffdioph import cli
from ffdioph.ffpoly import FieldSpec


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_verify_phi_sum(capsys):
    code, out = run(capsys, "verify", "phi-sum", "--q", "2", "--lmax", "5")
    rep = json.loads(out)
    assert code == 0 and rep["ok"] and rep["passed"] == 5 and len(rep["cases"]) == 5


def test_verify_minkowski(capsys):
    code, out = run(capsys, "verify", "minkowski", "--q", "3", "--d", "3", "--samples", "200", "--seed", "7")
    rep = json.loads(out)
    assert code == 0 and rep["ok"] and len(rep["cases"]) == 200


def test_verify_unknown_suite(capsys):
    code, _ = run(capsys, "verify", "unknown")
    assert code == 2


@pytest.mark.parametrize("argv", [["verify", "phi-sum", "--q", "6"], ["verify", "phi-sum", "--q", "2", "--eps", "x"],
                                  ["construct-di", "--eps", "2"], ["bogus-command"]])
def test_config_errors(capsys, argv):
    code, _ = run(capsys, *argv)
    assert code == 2


def test_construct_di_and_replay(capsys, tmp_path):
    path = tmp_path / "cert.json"
    code, _ = run(capsys, "construct-di", "--q", "2", "--d", "2", "--eps", "1/4", "--N", "1", "--steps", "4",
                  "--output", str(path))
    assert code == 0
    code, out = run(capsys, "verify", "certificate", str(path))
    rep = json.loads(out)
    assert code == 0 and rep["ok"] and rep["rebuilt_identical"]


def test_replay_rejects_edited_certificate(capsys, tmp_path):
    path = tmp_path / "cert.json"
    run(capsys, "construct-di", "--eps", "1/4", "--steps", "2", "--output", str(path))
    obj = json.loads(path.read_text())
    obj["links"][0]["eps"] = "1/8"
    path.write_text(json.dumps(obj))
    code, out = run(capsys, "verify", "certificate", str(path))
    assert code == 1 and not json.loads(out)["ok"]


def test_construct_sing(capsys):
    code, out = run(capsys, "construct-sing", "--start", "9", "--levels", "2")
    cert = json.loads(out)
    assert code == 0 and [s["eps"] for s in cert["schedule"]] == ["1/4", "1/4"]


def test_bounds_csv(capsys):
    code, out = run(capsys, "bounds", "--q", "2", "--d", "2", "--eps-grid", "2^-1..2^-10")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and len(rows) == 11
    assert [r[2] for r in rows[1:]] == [str(Fraction(1, 2**j)) for j in range(1, 11)]


def test_best_approx_transcript(capsys):
    code, out = run(capsys, "best-approx", "--q", "2", "--d", "1", "--theta", "(x^2+1)/x^3", "--bound", "3")
    seq = json.loads(out)
    assert code == 0
    assert [e["b"] for e in seq["entries"]] == [[1], [0, 1], [1, 0, 1], [0, 0, 0, 1]]


def test_enumerate_commands(capsys):
    code, out = run(capsys, "enumerate-upper", "--q", "2", "--d", "2", "--eps", "1/4", "--cutoff", "2")
    rep = json.loads(out)
    assert code == 0 and rep["sum_D"]["within_bound"]
    code, out = run(capsys, "enumerate-upper", "--eps", "1/4", "--t", "2")
    assert code == 2
    code, out = run(capsys, "enumerate-lower", "--q", "2", "--d", "2", "--eps", "1/4", "--N", "0")
    rep = json.loads(out)
    assert code == 0 and rep["checks_ok"] and rep["children"]


def test_determinism(capsys):
    argv = ["verify", "point-count", "--q", "2", "--d", "3", "--samples", "15", "--seed", "11"]
    _, a = run(capsys, *argv)
    _, b = run(capsys, *argv)
    assert a == b
    _, c = run(capsys, *argv[:-1], "12")
    assert c != a


def test_runtime_goes_to_stderr(capsys):
    cli.main(["bounds", "--eps", "1/16"])
    cap = capsys.readouterr()
    assert "finished in" in cap.err and "finished" not in cap.out


@pytest.mark.parametrize("text,want", [("1/4", Fraction(1, 4)), ("0.25", Fraction(1, 4)), ("2^-2", Fraction(1, 4)),
                                       ("q^-2", Fraction(1, 9))])
def test_eps_parsing(text, want):
    assert cli.parse_eps(text, 3 if text.startswith("q") else 2) == want


def test_eps_grid_parsing():
    assert cli.parse_eps_grid("2^-1..2^-3", 2) == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)]
    assert cli.parse_eps_grid("1/3,1/5", 2) == [Fraction(1, 3), Fraction(1, 5)]
    with pytest.raises(cli.ConfigError):
        cli.parse_eps("-1", 2)


def test_poly_parsing():
    F = FieldSpec(3)
    x = F.x
    assert cli.parse_poly(F, "x^2+2*x+1") == x * x + x.scale(2) + F.one
    assert cli.parse_poly(F, "[1,0,1]") == x * x + F.one
    with pytest.raises(cli.ConfigError):
        cli.parse_poly(F, "y+1")
