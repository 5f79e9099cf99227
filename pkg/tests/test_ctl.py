import numpy as np
import pytest

from dynabs import Box, TransitionSystem, WorkingZone, check, parse_ctl, sat_set
from dynabs.ctl import And, CellAtom, CtlSyntaxError, ExitAtom, Not, Or, TrueF, Unary, Until

from oracles import oracle_sat
from synthdata import random_ctl_formula as random_formula
from synthdata import random_transition_system as random_ts
from synthdata import tiny_transition_system as tiny_ts


def chain_1_2():
    # Q1 -> Q2, Q2 -> Q2, sink self-loop
    return tiny_ts([[0, 1, 0], [0, 1, 0], [0, 0, 1]], 2)


def test_parse_simple_atoms():
    assert parse_ctl("EF Q2") == Unary("EF", CellAtom(2))
    assert parse_ctl("AX Q4") == Unary("AX", CellAtom(4))
    assert parse_ctl("EXIT") == ExitAtom()
    assert parse_ctl("true") == TrueF()
    assert parse_ctl("Q17") == CellAtom(17)


def test_parse_nested_example():
    assert parse_ctl("EF (Q6 & EX Q7)") == Unary("EF", And(CellAtom(6), Unary("EX", CellAtom(7))))


def test_parse_precedence_and_binds_tighter_than_or():
    assert parse_ctl("Q1 | Q2 & Q3") == Or(CellAtom(1), And(CellAtom(2), CellAtom(3)))
    assert parse_ctl("!Q1 & Q2") == And(Not(CellAtom(1)), CellAtom(2))


def test_parse_until_forms():
    assert parse_ctl("E[Q1 U Q2]") == Until("E", CellAtom(1), CellAtom(2))
    assert parse_ctl("A [ true U EXIT ]") == Until("A", TrueF(), ExitAtom())


def test_parse_unary_chains():
    assert parse_ctl("EX EX Q1") == Unary("EX", Unary("EX", CellAtom(1)))
    assert parse_ctl("AG ! Q2") == Unary("AG", Not(CellAtom(2)))


def test_parse_whitespace_insensitive():
    assert parse_ctl("EF(Q6&EX Q7)") == parse_ctl("  EF ( Q6 & EX   Q7 ) ")


def test_parse_errors_carry_position():
    with pytest.raises(CtlSyntaxError, match="position"):
        parse_ctl("EF (Q2")
    with pytest.raises(CtlSyntaxError, match="position"):
        parse_ctl("Q2 Q3")
    with pytest.raises(CtlSyntaxError, match="position"):
        parse_ctl("EF @2")
    with pytest.raises(CtlSyntaxError):
        parse_ctl("E[Q1 Q2]")
    with pytest.raises(CtlSyntaxError, match="FOO"):
        parse_ctl("FOO Q1")
    with pytest.raises(CtlSyntaxError):
        parse_ctl("")


def test_atom_out_of_range_reported():
    ts = chain_1_2()
    with pytest.raises(ValueError, match="Q9"):
        sat_set(ts, parse_ctl("EF Q9"))


def test_chain_examples():
    ts = chain_1_2()
    assert sat_set(ts, parse_ctl("EF Q2")) == {1, 2}
    assert sat_set(ts, parse_ctl("AX Q2")) == {1, 2}


def test_self_loop_ag():
    ts = tiny_ts([[1, 0], [0, 1]], 1)
    assert check(ts, parse_ctl("AG Q1"), 1)
    assert check(ts, parse_ctl("EG Q1"), 1)
    assert not check(ts, parse_ctl("EF EXIT"), 1)


def test_check_validates_initial():
    ts = chain_1_2()
    with pytest.raises(ValueError):
        check(ts, parse_ctl("EF Q1"), 0)
    with pytest.raises(ValueError):
        check(ts, parse_ctl("EF Q1"), 3)  # sink is not a valid initial cell


def test_exit_atom_semantics():
    zone = unit = WorkingZone(Box([0.0], [1.0]))
    ts = TransitionSystem(unit, (unit.omega,), np.array([[0, 1], [0, 1]], dtype=bool))
    assert check(ts, parse_ctl("AX EXIT"), 1)
    assert sat_set(ts, parse_ctl("EXIT")) == {2}


def test_duality_on_random_systems():
    rng = np.random.default_rng(0)
    for _ in range(40):
        ts = random_ts(rng)
        phi = random_formula(rng, ts.n_cells, 2)
        assert sat_set(ts, Unary("AX", phi)) == sat_set(ts, Not(Unary("EX", Not(phi))))
        assert sat_set(ts, Unary("AG", phi)) == sat_set(ts, Not(Unary("EF", Not(phi))))
        assert sat_set(ts, Unary("AF", phi)) == sat_set(ts, Not(Unary("EG", Not(phi))))


def test_ef_monotone_in_argument():
    rng = np.random.default_rng(1)
    for _ in range(40):
        ts = random_ts(rng)
        phi = CellAtom(1)
        psi = Or(CellAtom(1), ExitAtom())
        assert sat_set(ts, Unary("EF", phi)) <= sat_set(ts, Unary("EF", psi))


def test_fixpoint_agrees_with_path_oracle():
    rng = np.random.default_rng(7)
    seen_ops = set()
    for _ in range(150):
        ts = random_ts(rng)
        f = random_formula(rng, ts.n_cells, 3)
        seen_ops.update(type(n).__name__ for n in walk(f))
        assert sat_set(ts, f) == oracle_sat(ts, f), f"disagreement on {f}"
    assert {"Unary", "Until", "Not", "And", "Or"} <= seen_ops


def walk(f):
    yield f
    for attr in ("arg", "left", "right"):
        child = getattr(f, attr, None)
        if child is not None:
            yield from walk(child)


def test_formula_str_round_trips():
    rng = np.random.default_rng(3)
    for _ in range(60):
        f = random_formula(rng, 5, 3)
        assert parse_ctl(str(f)) == f
