"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import time

import numpy as np
import pytest

from gradedsat.cli import main
from gradedsat.formula import atoms, clos, modal_depth, modernize, parse, size, to_nnf
from gradedsat.gen import Profile, corpus
from gradedsat.incorrect import solve_incorrect
from gradedsat.inverse import solve_grkri
from gradedsat.kripke import StructureSpace, check, evaluate
from gradedsat.optimized import TraceBoundError, solve_grk
from gradedsat.standard import solve_standard
from gradedsat.verdict import Limits, ResourceLimitExceeded

LEGACY_CE = "(and (dia R 2 p1) (and (box R 1 p2) (box R 1 (not p2))))"
RESTART_CE = (
    "(and (le R1 0 q) (and (ge R1 1 (or p q)) (ge R2 1 (le (inv R2) 0 (ge R1 1 p)))))"
)
CORPUS_PROFILE = Profile(max_size=25, max_n=4, atoms=("p", "q"), relations=("R", "S"))
NNF_PROFILE = Profile(max_size=12, max_n=2, atoms=("p", "q"), relations=("R",), allow_legacy=True)


@pytest.fixture
def report(capsys):
    def _report(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {title} {detail}".rstrip())
        assert ok, detail

    return _report


@pytest.fixture(scope="module")
def corpus_runs():
    """Verdicts of the optimized, standard and inverse engines on the corpus."""
    rows = []
    trace_errors = []
    start = time.perf_counter()
    for f in corpus(1000, CORPUS_PROFILE):
        phi = to_nnf(f)
        row = {"phi": phi}
        for name, solve in (("optimized", solve_grk), ("standard", solve_standard), ("inverse", solve_grkri)):
            try:
                row[name] = solve(phi, model=True)
            except TraceBoundError as e:
                trace_errors.append((phi, name, str(e)))
                row[name] = None
        rows.append(row)
    return rows, trace_errors, time.perf_counter() - start


def test_1_counterexample(report):
    start = time.perf_counter()
    legacy = to_nnf(parse(LEGACY_CE))
    graded = to_nnf(modernize(parse(LEGACY_CE)))
    got = (
        solve_incorrect(legacy).status,
        solve_grk(graded).status,
        solve_standard(graded).status,
    )
    elapsed = time.perf_counter() - start
    ok = got == ("SAT", "UNSAT", "UNSAT") and elapsed < 1.0
    report(1, "counterexample verdicts (incorrect, optimized, standard)", ok, f"{got} in {elapsed:.3f}s")


def test_2_inverse_counterexample(report):
    start = time.perf_counter()
    v = solve_grkri(parse(RESTART_CE))
    elapsed = time.perf_counter() - start
    ok = v.status == "UNSAT" and v.stats.restarts >= 1 and elapsed < 1.0
    report(2, "inverse counterexample", ok, f"{v.status} restarts={v.stats.restarts} in {elapsed:.3f}s")


def test_3_oracle_agreement(corpus_runs, report):
    rows, _, elapsed = corpus_runs
    bad = [
        r["phi"] for r in rows
        if r["optimized"] is None or r["standard"] is None or r["optimized"].sat != r["standard"].sat
    ]
    ok = not bad and elapsed < 600
    report(3, "optimized = standard on 1000 formulas", ok, f"{len(rows) - len(bad)}/{len(rows)} agree, {elapsed:.1f}s for all engines")


def test_4_conservativity(corpus_runs, report):
    rows, _, _ = corpus_runs
    bad = [
        r["phi"] for r in rows
        if r["optimized"] is None or r["inverse"] is None or r["optimized"].sat != r["inverse"].sat
    ]
    report(4, "inverse = optimized on the corpus", not bad, f"{len(rows) - len(bad)}/{len(rows)} agree")


def test_5_witness_soundness(corpus_runs, report):
    rows, _, _ = corpus_runs
    total = failed = 0
    for r in rows:
        for name in ("optimized", "standard", "inverse"):
            v = r[name]
            if v is not None and v.sat:
                total += 1
                if v.model is None or not check(v.model, v.root, r["phi"]):
                    failed += 1
    report(5, "SAT witnesses check at the root", failed == 0 and total > 0, f"{total - failed}/{total} models check")


def test_6_binary_coding(report, capsys, tmp_path):
    start = time.perf_counter()
    v = solve_grk(parse("(ge R 1048576 p)"))
    elapsed = time.perf_counter() - start
    fast = v.sat and v.stats.peak_live_vars <= 3 and v.stats.max_depth <= 2 and elapsed <= 30
    try:
        solve_standard(parse("(ge R 1048576 p)"), Limits(max_constraints=10**6))
        aborted = False
    except ResourceLimitExceeded:
        aborted = True
    path = tmp_path / "big.gml"
    path.write_text("(ge R 1048576 p)\n")
    code = main(["solve", "--engine", "standard", str(path)])
    capsys.readouterr()
    ok = fast and aborted and code == 2
    detail = (
        f"optimized {v.status} peak_live_vars={v.stats.peak_live_vars} "
        f"max_depth={v.stats.max_depth} in {elapsed:.1f}s; standard aborted={aborted} exit={code}"
    )
    report(6, "binary coding space discipline", ok, detail)


def test_7_trace_bounds(corpus_runs, report):
    rows, trace_errors, _ = corpus_runs
    deep = [
        r["phi"] for r in rows for name in ("optimized", "inverse")
        if r[name] is not None and r[name].stats.max_depth > modal_depth(r["phi"]) + 1
    ]
    wide = [f for f in corpus(1000, CORPUS_PROFILE) if len(clos(to_nnf(f))) > 2 * size(to_nnf(f))]
    ok = not trace_errors and not deep and not wide
    report(7, "trace depth and closure size bounds", ok, f"depth violations={len(trace_errors) + len(deep)} closure violations={len(wide)}")


def test_8_nnf_preservation(report):
    formulas = corpus(200, NNF_PROFILE)
    mismatches = 0
    structures = 0
    for f in formulas:
        g = to_nnf(modernize(f))
        names = sorted(set(atoms(f)) | set(atoms(g)))
        for k in (1, 2, 3):
            space = StructureSpace(k, names, ["R"])
            for codes in space.chunks():
                rels, val = space.decode(codes)
                a, b = evaluate([f, g], rels, val, k)
                mismatches += int(np.count_nonzero(a != b))
                structures += codes.size
    report(8, "NNF preserves truth on all small structures", mismatches == 0, f"{mismatches} mismatches over {structures} structures")
