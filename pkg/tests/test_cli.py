from __future__ import annotations

import json
from pathlib import Path

import pytest

from k3gauss.cli import main

LATTICES = Path(__file__).resolve().parents[1] / "lattices"


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def test_lattice_valid(capsys):
    code, out, _ = run(capsys, "lattice", str(LATTICES / "rank5_32222.json"))
    assert code == 0 and "signature (1,4), even, nondegenerate" in out
    code, out, _ = run(capsys, "lattice", str(LATTICES / "rank2_4_7_2.json"))
    assert code == 0 and "(1,1)" in out


def test_lattice_odd_diagonal(capsys):
    code, out, err = run(capsys, "lattice", str(LATTICES / "odd_diagonal.json"))
    assert code == 4
    assert "D^2 = gram[0][0] = 3" in out + err


def test_missing_file_and_bad_args(capsys, tmp_path):
    assert run(capsys, "lattice", str(tmp_path / "nope.json"))[0] == 4
    assert run(capsys, "coverage", "--family", "rank5")[0] == 4
    assert run(capsys, "positivity", "--family", "3,2,2,2,2", "--class", "D", "--criterion", "bogus")[0] == 4


def test_positivity_commands(capsys):
    code, out, _ = run(capsys, "positivity", "--family", "3,2,2,2,2", "--class", "D", "--criterion", "very-ample")
    assert code == 0 and "Pass" in out
    code, out, _ = run(capsys, "positivity", "--family", "3,2,2,2,2", "--class", "D+L", "--criterion", "morphism-type")
    assert code == 0 and "TwoToOnePlane" in out
    code, out, _ = run(
        capsys, "positivity", "--lattice", str(LATTICES / "diag_2_-2.json"), "--class", "D", "--criterion", "ample-realizable"
    )
    assert code == 1 and "[0, 1]" in out


def test_certify_and_recheck(capsys, tmp_path):
    path = tmp_path / "c.json"
    code, out, _ = run(capsys, "certify", "--rank2", "--class", "11D+L", "--out", str(path))
    assert code == 0 and "321" in out
    assert json.loads(path.read_text())["certificate"]["genus"] == 321
    assert run(capsys, "recheck", str(path))[0] == 0

    code, _, err = run(capsys, "certify", "--family", "3,2,2,2,2", "--class", "3D", "--out", str(tmp_path / "r.json"))
    assert code == 1 and "NoDecomposition" in err


def test_coverage_exit_codes(capsys, tmp_path):
    base = ["coverage", "--family", "rank5", "--min", "300", "--max", "330", "--cap-h", "20", "--cap-param", "20"]
    assert run(capsys, *base, "--expect-missing", "321")[0] == 0
    assert run(capsys, *base)[0] == 1
    assert run(capsys, "coverage", "--family", "closed-forms", "--min", "600", "--max", "700")[0] == 1
    assert run(capsys, "coverage", "--family", "product", "--min", "153", "--max", "280")[0] == 0
    code, out, _ = run(capsys, "coverage", "--family", "product", "--min", "153", "--max", "280", "--cap-d", "20")
    assert code == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["lattice", str(LATTICES / "rank5_32222.json")],
        ["certify", "--family", "3,2,2,2,2", "--class", "9D+6L+R"],
        ["positivity", "--rank2", "--class", "11D+L", "--criterion", "nef"],
        ["coverage", "--family", "rank5", "--min", "310", "--max", "325", "--cap-h", "15", "--cap-param", "15",
         "--expect-missing", "321"],
    ],
)
def test_replay_is_identical(capsys, tmp_path, argv):
    report = tmp_path / "report.json"
    assert run(capsys, *argv, "--out", str(report))[0] in (0, 1)
    doc = json.loads(report.read_text())
    manifest = doc["manifest"]
    assert manifest["command"] == argv[0] and "wall_time" in manifest and "tool_version" in manifest
    code, out, _ = run(capsys, "replay", str(report))
    assert code == 0 and "identical" in out


def test_replay_without_manifest(capsys, tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{}")
    assert run(capsys, "replay", str(path))[0] == 4
