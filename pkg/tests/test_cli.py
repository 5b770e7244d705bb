import json
import subprocess
import sys
import time

import pytest

from conftest import FIXTURES
from tingley_lab.cli import EXIT_INCONSISTENT, EXIT_INPUT, EXIT_OK, EXIT_RESIDUAL, main


def recovered_spec(report: dict) -> dict:
    if report["section"] == 3:
        return report["normal_form"]
    return {"kappa": report["kappa"], "K": report["K"], "phi": report["psi"]}


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_is_byte_identical(capsys):
    _, first, _ = run(["gen", "--section", "2", "--size", "5", "--seed", "9"], capsys)
    _, second, _ = run(["gen", "--section", "2", "--size", "5", "--seed", "9"], capsys)
    assert first == second
    assert json.loads(first)["seed"] == 9


def test_gen_section3_orbits_and_points(capsys):
    code, out, _ = run(["gen", "--section", "3", "--orbits", "3", "--n", "4"], capsys)
    assert code == EXIT_OK
    data = json.loads(out)
    assert len(data["X"]) == 3 and data["n"] == 4
    # three orbits of four points each
    assert len(data["X"]) * data["n"] == 12


def test_gen_rejects_n_not_divisible_by_four(capsys):
    code, _, err = run(["gen", "--section", "3", "--n", "6"], capsys)
    assert code == EXIT_INPUT
    assert "--n" in err


def test_gen_writes_file(tmp_path, capsys):
    target = tmp_path / "inst.json"
    assert run(["gen", "--seed", "1", "--out", str(target)], capsys)[0] == EXIT_OK
    assert json.loads(target.read_text())["section"] == 2


def test_seed_falls_back_to_environment(monkeypatch, capsys):
    monkeypatch.setenv("TINGLEY_LAB_SEED", "17")
    _, from_env, _ = run(["gen"], capsys)
    _, explicit, _ = run(["gen", "--seed", "17"], capsys)
    assert from_env == explicit
    monkeypatch.setenv("TINGLEY_LAB_SEED", "abc")
    assert run(["gen"], capsys)[0] == EXIT_INPUT


@pytest.mark.parametrize("name", ["e2_instance.json", "e3_instance.json"])
def test_reconstruct_fixture(name, capsys):
    code, out, _ = run(["reconstruct", str(FIXTURES / name)], capsys)
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["ok"]
    assert recovered_spec(data) == json.loads((FIXTURES / name).read_text())["spec"]


def test_reconstruct_text_format(capsys):
    code, out, _ = run(["reconstruct", str(FIXTURES / "e2_instance.json"), "--format", "text"], capsys)
    assert code == EXIT_OK
    assert out.startswith("section 2: ok")
    assert "  q -> u" in out


def test_reconstruct_round_trips_generated_instance(tmp_path, capsys):
    target = tmp_path / "inst.json"
    run(["gen", "--section", "3", "--orbits", "4", "--n", "8", "--seed", "5", "--out", str(target)], capsys)
    code, out, _ = run(["reconstruct", str(target)], capsys)
    assert code == EXIT_OK
    assert recovered_spec(json.loads(out)) == json.loads(target.read_text())["spec"]


@pytest.mark.parametrize("name, point", [("e2_instance.json", "q"), ("e3_instance.json", "t2")])
def test_reconstruct_perturbed_is_flagged(name, point, capsys):
    code, out, _ = run(["reconstruct", str(FIXTURES / name), "--perturb", f"{point}:1e-3"], capsys)
    assert code in (EXIT_INCONSISTENT, EXIT_RESIDUAL)
    data = json.loads(out)
    assert not data["ok"]


@pytest.mark.parametrize(
    "extra",
    [
        ["--perturb", "zz:1e-3"],
        ["--perturb", "q"],
        ["--perturb", "q:abc"],
        ["--perturb", "q:0"],
        ["--tol", "0"],
        ["--probes", "6"],
    ],
)
def test_reconstruct_bad_flags(extra, capsys):
    assert run(["reconstruct", str(FIXTURES / "e2_instance.json"), *extra], capsys)[0] == EXIT_INPUT


def test_reconstruct_corrupt_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"section": 2, "X": ["p"')
    code, _, err = run(["reconstruct", str(bad)], capsys)
    assert code == EXIT_INPUT
    assert err.startswith("error:")


def test_reconstruct_missing_file(tmp_path, capsys):
    assert run(["reconstruct", str(tmp_path / "nope.json")], capsys)[0] == EXIT_INPUT


def test_unknown_command(capsys):
    assert run(["frobnicate"], capsys)[0] == EXIT_INPUT


def test_small_suite_is_quick_and_green(capsys):
    start = time.perf_counter()
    code, out, _ = run(["suite", "--trials", "1", "--format", "text"], capsys)
    assert time.perf_counter() - start < 1.0
    assert code == EXIT_OK
    assert sum(line.startswith("[PASS]") for line in out.splitlines()) == 8


def test_console_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "tingley_lab.cli", "reconstruct", str(FIXTURES / "e2_instance.json"), "--format", "text"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_OK
    assert "section 2: ok" in proc.stdout
