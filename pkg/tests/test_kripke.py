import numpy as np
import pytest

from gradedsat.csys import ConstraintSystem
from gradedsat.formula import And, Atom, Geq, Leq, Name, Not, Intersection, parse, to_nnf
from gradedsat.gen import Profile, corpus
from gradedsat.kripke import (
    FOUND,
    INCONCLUSIVE,
    NONE,
    KripkeStructure,
    StructureSpace,
    canonical_structure,
    check,
    dump_model,
    enumerate_models,
    evaluate,
    parse_model,
    succ_count,
    truth_set,
)

p, p1, p2 = Atom("p"), Atom("p1"), Atom("p2")
R, S = Name("R"), Name("S")


def fan(n, atoms=("p1",), relation="R"):
    """Root w0 with n successors, every successor carrying the given atoms."""
    worlds = tuple(f"w{i}" for i in range(n + 1))
    edges = frozenset(("w0", w) for w in worlds[1:])
    return KripkeStructure(worlds, {relation: edges}, {a: frozenset(worlds[1:]) for a in atoms})


def test_succ_count_direct():
    M = KripkeStructure(
        ("w0", "w1", "w2"),
        {"R": {("w0", "w1"), ("w0", "w2")}, "S": frozenset()},
        {"p": {"w1"}},
    )
    assert succ_count(M, "w0", R, p) == 1
    assert succ_count(M, "w0", Intersection((R, S)), p) == 0


def test_succ_count_unknown_names_raise():
    M = fan(1)
    with pytest.raises(KeyError):
        succ_count(M, "w9", R, p)
    with pytest.raises(KeyError):
        succ_count(M, "w0", Name("T"), p)


def test_three_successor_fan():
    M = fan(3)
    assert succ_count(M, "w0", R, p1) == 3
    assert succ_count(M, "w0", R, p2) == 0
    # three successors without p2, so (le R 1 (not p2)) fails
    assert not check(M, "w0", Leq(R, 1, Not(p2)))
    assert check(M, "w0", Geq(R, 3, p1))


def test_check_basics():
    M = KripkeStructure(("w",), {}, {"p": {"w"}})
    assert check(M, "w", p)
    assert check(M, "w", Geq(R, 0, p))
    assert check(fan(2), "w1", Geq(R, 0, p))


def test_inverse_and_intersection_semantics():
    M = KripkeStructure(
        ("w0", "w1", "w2"),
        {"R": {("w0", "w1"), ("w2", "w1")}, "S": {("w0", "w1")}},
        {"p": {"w0", "w2"}},
    )
    assert check(M, "w1", parse("(ge (inv R) 2 p)"))
    assert check(M, "w1", parse("(le (cap (inv R) (inv S)) 1 p)"))
    assert not check(M, "w1", parse("(ge (cap (inv R) (inv S)) 2 p)"))


def test_legacy_semantics():
    M = fan(3)
    assert check(M, "w0", parse("(dia R 2 p1)"))
    assert not check(M, "w0", parse("(dia R 3 p1)"))
    # all but at most n successors satisfy the body
    assert check(M, "w0", parse("(box R 3 p2)"))
    assert not check(M, "w0", parse("(box R 2 p2)"))


def test_structure_validation():
    with pytest.raises(ValueError):
        KripkeStructure(())
    with pytest.raises(ValueError):
        KripkeStructure(("a",), {"R": {("a", "b")}})
    with pytest.raises(ValueError):
        KripkeStructure(("a", "a"))


def test_canonical_structure_of_single_constraint():
    S_ = ConstraintSystem.from_constraints([(0, p)])
    M = canonical_structure(S_)
    assert M.worlds == ("w0",)
    assert M.valuation == {"p": frozenset({"w0"})}


def test_canonical_structure_of_three_successors():
    S_ = ConstraintSystem.from_constraints(
        [(0, parse("(dia R 2 p1)"))] + [(i, p1) for i in (1, 2, 3)],
        [(R, 0, i) for i in (1, 2, 3)],
    )
    M = canonical_structure(S_)
    assert M.worlds == ("w0", "w1", "w2", "w3")
    assert M.relations == {"R": frozenset({("w0", "w1"), ("w0", "w2"), ("w0", "w3")})}
    assert M.valuation == {"p1": frozenset({"w1", "w2", "w3"})}


def test_model_text_round_trip():
    M = fan(2, atoms=("p", "q"))
    text = dump_model(M, "w0")
    assert text.splitlines()[0] == "world w0"
    M2, root = parse_model(text)
    assert root == "w0" and M2 == M
    with pytest.raises(ValueError):
        parse_model("world w0\nbogus line")


def test_enumeration_trivial():
    r = enumerate_models(p, 3)
    assert r.status == FOUND and len(r.model.worlds) == 1
    assert enumerate_models(And(p, Not(p)), 3).status == NONE


def test_enumeration_first_model_of_two_successors():
    # frozen from the enumerator: a self-loop lets two worlds suffice
    r = enumerate_models(parse("(ge R 2 p)"), 3)
    assert r.status == FOUND
    assert r.checked == 20
    assert r.root == "w1"
    assert dump_model(r.model, r.root) == "\n".join(
        [
            "world w0",
            "world w1",
            "rel R w1 w0",
            "rel R w1 w1",
            "val w0 p",
            "val w1 p",
            "root w1",
        ]
    )
    assert check(r.model, r.root, parse("(ge R 2 p)"))


def test_enumeration_respects_structure_cap():
    f = parse("(and (ge (cap R S) 2 p) (le R 1 p))")
    assert enumerate_models(f, 3).status == NONE
    assert enumerate_models(f, 4).status == INCONCLUSIVE


def test_structure_space_order():
    space = StructureSpace(2, ["p"], ["R"])
    assert space.count == 2 ** (4 + 2)
    # most significant bit is the R edge w0->w0, least is p at w1
    assert space.structure(1).valuation == {"p": frozenset({"w1"})}
    top = space.structure(1 << 5)
    assert top.relations == {"R": frozenset({("w0", "w0")})}


def test_vectorized_evaluation_matches_truth_sets():
    prof = Profile(max_size=12, max_n=2, atoms=("p", "q"), relations=("R",), allow_legacy=True)
    formulas = corpus(40, prof)
    space = StructureSpace(2, ["p", "q"], ["R"])
    rng = np.random.default_rng(7)
    codes = np.unique(rng.integers(0, space.count, size=64, dtype=np.uint64))
    rels, val = space.decode(codes)
    truths = evaluate(formulas, rels, val, 2)
    for i, code in enumerate(codes):
        M = space.structure(int(code))
        for f, t in zip(formulas, truths):
            expect = truth_set(M, f)
            got = {M.worlds[j] for j in range(2) if t[i, j]}
            assert got == expect, (f, M)


def test_checker_agrees_with_nnf_on_random_structures():
    formulas = corpus(30, Profile(max_size=14, max_n=2, relations=("R",)))
    space = StructureSpace(2, ["p", "q"], ["R"])
    for code in range(0, space.count, 7):
        M = space.structure(code)
        for f in formulas:
            assert truth_set(M, f) == truth_set(M, to_nnf(f))
