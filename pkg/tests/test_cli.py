import csv
import io
import json
from pathlib import Path

import pytest

from dftshor.circuit import deserialize
from dftshor.builders import build_modmul
from dftshor.cli import DEFAULT_SEED, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main
from dftshor.numtheory import ModMulParams
from dftshor.verify import FIDELITY_COLUMNS, odd_coprime_multipliers

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_eq4(capsys):
    code, out, _ = run(capsys, "verify", "--eq4", "--modulus", 15, "--multiplier", 7)
    assert code == EXIT_OK and "max error" in out


def test_verify_exact_modulus_circuit(capsys):
    code, out, _ = run(capsys, "verify", "--circuit", "--modulus", 16, "--multiplier", 7)
    assert code == EXIT_OK and "(ok)" in out


def test_verify_not_coprime(capsys):
    code, _, err = run(capsys, "verify", "--eq4", "--modulus", 15, "--multiplier", 5)
    assert code == EXIT_USAGE
    assert "--multiplier" in err and "multiplier not coprime" in err


@pytest.mark.parametrize("argv,flag", [
    (["verify", "--modulus", 15, "--multiplier", 7], "--eq4"),
    (["verify", "--circuit", "--modulus", 15, "--multiplier", 2], "--multiplier"),
    (["verify", "--circuit", "--modulus", 16, "--multiplier", 7, "--L", 5], "--L"),
    (["factor", 13], "N"),
    (["factor", 20], "N"),
    (["factor", 15, "--attempts", 0], "--attempts"),
    (["factor", 255, "--t", 11], "--t"),
    (["gates", "--lmax", 17], "--lmax"),
    (["export", "--modulus", 15, "--out", "x.jsonl"], "--multiplier"),
])
def test_usage_errors_name_the_flag(capsys, argv, flag):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE and flag in err


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["verify", "--bogus"])
    assert info.value.code == EXIT_USAGE


def test_verify_json_summary(tmp_path, capsys):
    out = tmp_path / "v.json"
    code, _, _ = run(capsys, "verify", "--eq4", "--circuit", "--modulus", 8, "--multiplier", 3, "--out", out)
    assert code == EXIT_OK
    data = json.loads(out.read_text())
    assert data["passed"] is True and data["min_output_fidelity"] >= 1 - 1e-9


@pytest.mark.parametrize("N,expected", [(15, [3, 5]), (21, [3, 7])])
def test_factor_default_seed(tmp_path, capsys, N, expected):
    out = tmp_path / "f.json"
    code, stdout, _ = run(capsys, "factor", N, "--out", out)
    assert code == EXIT_OK
    data = json.loads(out.read_text())
    assert data["factors"] == expected and data["seed"] == DEFAULT_SEED
    assert f"{N} = {expected[0]} x {expected[1]}" in stdout


@pytest.mark.parametrize("N,expected", [(15, [3, 5]), (21, [3, 7])])
def test_factor_seed_one(tmp_path, capsys, N, expected):
    out = tmp_path / "f.json"
    code, _, _ = run(capsys, "factor", N, "--seed", 1, "--backend", "ideal", "--out", out)
    assert code == EXIT_OK and json.loads(out.read_text())["factors"] == expected


def test_factor_perfect_square(tmp_path, capsys):
    out = tmp_path / "f.json"
    code, _, _ = run(capsys, "factor", 9, "--seed", 1, "--out", out)
    data = json.loads(out.read_text())
    if code == EXIT_OK:
        assert data["factors"] == [3, 3]
    else:
        assert code == EXIT_FAIL and data["factors"] is None


def test_factor_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "factor", 21, "--seed", 7, "--out", a)
    run(capsys, "factor", 21, "--seed", 7, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_sweep_row_count_and_schema(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--modulus", 15, "--csv", out)
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert tuple(rows[0]) == FIDELITY_COLUMNS
    assert len(rows) - 1 == 15 * len(odd_coprime_multipliers(15))
    again = tmp_path / "s2.csv"
    run(capsys, "sweep", "--modulus", 15, "--csv", again)
    assert out.read_bytes() == again.read_bytes()


def test_gates_golden(tmp_path, capsys):
    out = tmp_path / "g.csv"
    code, _, _ = run(capsys, "gates", "--lmin", 4, "--lmax", 8, "--csv", out)
    assert code == EXIT_OK
    assert out.read_text() == (GOLDEN / "gates_4_8.csv").read_text()


def test_gates_lmax_12_rows(tmp_path, capsys):
    out, js = tmp_path / "g.csv", tmp_path / "g.json"
    code, _, _ = run(capsys, "gates", "--lmax", 12, "--csv", out, "--json", js)
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [int(r["L"]) for r in rows] == list(range(4, 13))
    assert all(float(r["ratio"]) > 0 for r in rows)
    assert len(json.loads(js.read_text())["rows"]) == 9


def test_export_round_trip(tmp_path, capsys):
    out = tmp_path / "c.jsonl"
    code, _, _ = run(capsys, "export", "--modulus", 15, "--multiplier", 7, "--out", out)
    assert code == EXIT_OK
    assert deserialize(out.read_text()) == build_modmul(ModMulParams(15, 7, 4))
    code, _, _ = run(capsys, "export", "--what", "order-finding", "--modulus", 15, "--multiplier", 7,
                     "--t", 4, "--out", tmp_path / "of.jsonl")
    assert code == EXIT_OK


def test_output_dir_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DFTSHOR_OUTPUT_DIR", str(tmp_path / "artifacts"))
    code, _, _ = run(capsys, "gates", "--lmin", 4, "--lmax", 5, "--csv", "g.csv")
    assert code == EXIT_OK and (tmp_path / "artifacts" / "g.csv").exists()


def test_unwritable_output_reports_path(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "gates", "--lmin", 4, "--lmax", 4, "--csv", blocker / "sub" / "g.csv")
    assert code == EXIT_USAGE and str(blocker) in err
