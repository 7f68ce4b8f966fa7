import subprocess
import sys

import pytest

from gradedsat.cli import main

CE = "(and (ge R 3 p1) (and (le R 1 p2) (le R 1 (not p2))))\n"
CE_LEGACY = "# legacy syntax\n(and (dia R 2 p1) (and (box R 1 p2) (box R 1 (not p2))))\n"
RESTART = "(and (le R1 0 q) (and (ge R1 1 (or p q)) (ge R2 1 (le (inv R2) 0 (ge R1 1 p)))))"


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return _write


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_counterexample_unsat(write, capsys):
    code, out, _ = run(["solve", "--engine", "optimized", write("ce.gml", CE)], capsys)
    assert code == 20
    assert out == "UNSAT\n"


def test_legacy_engine_accepts(write, capsys):
    code, out, _ = run(["solve", "--engine", "incorrect", write("ce_legacy.gml", CE_LEGACY)], capsys)
    assert code == 10
    assert out.splitlines()[0] == "SAT"


def test_trivial_sat_with_model_and_stats(write, capsys):
    code, out, _ = run(["solve", "--model", "--stats", write("x.gml", "p")], capsys)
    assert code == 10
    assert out == "\n".join(
        [
            "SAT",
            "world w0",
            "val w0 p",
            "root w0",
            "verdict=SAT",
            "max_depth=1",
            "peak_live_vars=1",
            "nodes_created=1",
            "backtracks=0",
            "",
        ]
    )


def test_inverse_is_default_for_inverse_input(write, capsys):
    code, out, _ = run(["solve", "--stats", write("r.gml", RESTART)], capsys)
    assert code == 20
    lines = out.splitlines()
    assert lines[0] == "UNSAT"
    restarts = [l for l in lines if l.startswith("restarts=")]
    assert restarts and int(restarts[0].split("=")[1]) >= 1


def test_parse_error_exit_code(write, capsys):
    code, out, err = run(["solve", write("bad.gml", "(and p")], capsys)
    assert code == 1
    assert out == ""
    assert "1:7" in err


def test_usage_errors(write, capsys):
    assert run(["solve", write("l.gml", CE_LEGACY)], capsys)[0] == 1
    assert run(["solve", "--engine", "incorrect", write("g.gml", CE)], capsys)[0] == 1
    assert run(["solve", "--engine", "optimized", write("i.gml", RESTART)], capsys)[0] == 1
    assert run(["solve", "/nonexistent/file.gml"], capsys)[0] == 1
    with pytest.raises(SystemExit) as info:
        main(["solve", "--engine", "bogus", "x"])
    assert info.value.code == 1


def test_resource_exit_code(write, capsys):
    code, out, err = run(["solve", "--engine", "standard", write("big.gml", "(ge R 1048576 p)")], capsys)
    assert code == 2
    assert out == "UNKNOWN\n"
    assert "warning" in err and "constraint limit" in err


def test_step_limit_flag(write, capsys):
    code, out, _ = run(["solve", "--max-steps", "10", write("s.gml", "(ge R 100 p)")], capsys)
    assert code == 2 and out == "UNKNOWN\n"


def test_oracle_agrees(write, capsys):
    code, out, err = run(["solve", "--oracle", write("ce.gml", CE)], capsys)
    assert code == 20 and err == ""


def test_output_is_byte_stable(write, capsys):
    path = write("f.gml", "(and (ge R 2 p) (le R 0 q))")
    first = run(["solve", "--model", "--stats", path], capsys)
    second = run(["solve", "--model", "--stats", path], capsys)
    assert first == second


def test_gen_and_convert(write, capsys):
    code, out, _ = run(["gen", "--seed", "1", "--count", "2"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "(le S 3 (and q p))"
    code, out, _ = run(["convert", write("l.gml", CE_LEGACY)], capsys)
    assert code == 0
    assert out == "(and (ge R 3 p1) (and (le R 1 (not p2)) (le R 1 p2)))\n"


def test_module_entry_point(write):
    proc = subprocess.run(
        [sys.executable, "-m", "gradedsat", "solve", write("x.gml", "p")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 10
    assert proc.stdout == "SAT\n"
