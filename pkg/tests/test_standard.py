import pytest

from gradedsat.formula import parse, to_nnf
from gradedsat.gen import Profile, corpus
from gradedsat.kripke import check
from gradedsat.optimized import solve_grk
from gradedsat.standard import solve_standard
from gradedsat.verdict import Limits, ResourceLimitExceeded


def test_counterexample_is_unsat():
    v = solve_standard(parse("(and (ge R 3 p1) (and (le R 1 p2) (le R 1 (not p2))))"))
    assert not v.sat


def test_two_successors():
    v = solve_standard(parse("(ge R 2 p)"))
    assert v.sat
    assert len(v.model.worlds) == 3
    assert v.model.relations["R"] == frozenset({("w0", "w1"), ("w0", "w2")})


def test_merge_makes_room_under_upper_bound():
    # two ge constraints with overlapping bodies only fit after a merge
    f = parse("(and (ge R 1 p) (and (ge R 1 q) (le R 1 (or p q))))")
    v = solve_standard(to_nnf(f))
    assert v.sat
    assert len(v.model.worlds) == 2
    assert check(v.model, v.root, f)


def test_unsafe_merges_are_refused():
    f = parse("(and (ge R 2 p) (le R 1 q))")
    v = solve_standard(f)
    assert v.sat
    assert check(v.model, v.root, f)


def test_counting_clash_without_escape():
    assert not solve_standard(parse("(and (ge R 3 p) (le R 2 p))")).sat


def test_large_number_hits_constraint_cap():
    with pytest.raises(ResourceLimitExceeded) as info:
        solve_standard(parse("(ge R 1048576 p)"), Limits(max_constraints=10**6))
    assert "constraint" in info.value.reason


def test_rejects_inverse():
    with pytest.raises(ValueError):
        solve_standard(parse("(ge (inv R) 1 p)"))


def test_agrees_with_optimized_on_corpus():
    prof = Profile(max_size=25, max_n=4, atoms=("p", "q"), relations=("R", "S"))
    for f in corpus(150, prof, first_seed=2001):
        phi = to_nnf(f)
        v = solve_standard(phi)
        assert v.sat == solve_grk(phi).sat, f
        if v.sat:
            assert check(v.model, v.root, phi)
