from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from efgames.errors import FormulaParseError
from efgames.logic import (And, Eq, Exists, Forall, Less, Not, Or, PlusAtom,
                           Rel, evaluate, free_variables, is_bc_efo,
                           parse_formula, quantifier_depth, to_sexpr)
from efgames.structures import (PartialMap, Signature, apply_embedding,
                                identity_map, make_structure)


SIG = Signature(relations=(("R", 2),), constants=("c",), monadic=("Q",),
                addition=True)


class TestParsing:
    def test_exists_less(self):
        f = parse_formula("(E x (< x c))", SIG)
        assert f == Exists("x", Less("x", "c"))

    def test_plus_atom(self):
        assert parse_formula("(+ x x y)", SIG) == PlusAtom("x", "x", "y")

    def test_forall_or(self):
        f = parse_formula("(A y (or (< y x) (= y x)))", SIG)
        assert f == Forall("y", Or((Less("y", "x"), Eq("y", "x"))))

    def test_literals(self):
        f = parse_formula("(< 1 5/2)", SIG)
        assert f == Less(Fraction(1), Fraction(5, 2))

    def test_syntax_error_position(self):
        with pytest.raises(FormulaParseError) as err:
            parse_formula("(E x (< x", SIG)
        assert err.value.position >= 0

    def test_unknown_relation(self):
        with pytest.raises(FormulaParseError, match="unknown relation"):
            parse_formula("(rel Nope x)", SIG)

    def test_arity_mismatch(self):
        with pytest.raises(FormulaParseError, match="arity"):
            parse_formula("(rel R x)", SIG)

    def test_round_trip(self):
        text = "(and (E x (rel R x c)) (not (mon Q c)) (or (< 1 2) (= x x)))"
        f = parse_formula(text, SIG)
        assert parse_formula(to_sexpr(f), SIG) == f


class TestQuantifierDepth:
    def test_atom(self):
        assert quantifier_depth(parse_formula("(< x y)", SIG)) == 0

    def test_nested(self):
        assert quantifier_depth(parse_formula("(E x (A y (< x y)))", SIG)) == 2

    def test_max_over_branches(self):
        f = parse_formula("(and (E x (< x x)) (E y (E z (< y z))))", SIG)
        assert quantifier_depth(f) == 2

    def test_negation_transparent(self):
        f = parse_formula("(E x (< x c))", SIG)
        assert quantifier_depth(Not(f)) == quantifier_depth(f)


class TestBcEfo:
    def test_negated_existential_block(self):
        assert is_bc_efo(parse_formula("(not (E x (E y (< x y))))", SIG))

    def test_universal_inside(self):
        assert not is_bc_efo(parse_formula("(E x (A y (< y x)))", SIG))

    def test_boolean_combination(self):
        f = parse_formula("(and (E x (< x c)) (not (E y (< c y))))", SIG)
        assert is_bc_efo(f)

    def test_quantifier_free(self):
        assert is_bc_efo(parse_formula("(< x y)", SIG))

    def test_bare_forall(self):
        assert not is_bc_efo(parse_formula("(A x (= x x))", SIG))


class TestEvaluate:
    def test_even_sum_exists(self):
        s = make_structure(range(0, 5), addition=True)
        assert evaluate(parse_formula("(E x (+ x x 4))", s.signature), s)

    def test_odd_sum_missing(self):
        s = make_structure(range(0, 4), addition=True)
        assert not evaluate(parse_formula("(E x (+ x x 3))", s.signature), s)

    def test_tautology(self):
        s = make_structure(range(3))
        assert evaluate(parse_formula("(A y (= y y))", s.signature), s)

    def test_free_variable_assignment(self):
        s = make_structure(range(5))
        f = parse_formula("(A y (or (< y x) (= y x)))", s.signature)
        assert evaluate(f, s, {"x": Fraction(4)})
        assert not evaluate(f, s, {"x": Fraction(2)})

    def test_unbound_variable(self):
        s = make_structure(range(3))
        with pytest.raises(KeyError):
            evaluate(parse_formula("(< x 1)", s.signature), s)

    def test_literal_outside_universe(self):
        s = make_structure(range(3))
        with pytest.raises(ValueError):
            evaluate(parse_formula("(E x (< x 9))", s.signature), s)

    def test_window_quantification(self):
        from efgames.structures import Window
        s = make_structure(Window(0, 6), addition=True)
        assert evaluate(parse_formula("(E x (+ x x 6))", s.signature), s)
        # 3+4=7 leaves the window, so the triple is absent
        assert not evaluate(
            parse_formula("(E z (+ 3 4 z))", s.signature), s)

    def test_isomorphism_invariance(self, rng):
        base = make_structure([0, 2, 5], relations={"R": [(0, 5)]},
                              constants={"c": 2})
        shift = PartialMap.of({Fraction(p): Fraction(p + 10)
                               for p in (0, 2, 5)})
        moved = apply_embedding(base, shift)
        sig = base.signature
        formulas = ["(E x (rel R x c))", "(E x (E y (rel R x y)))",
                    "(A x (or (< x c) (= x c) (< c x)))",
                    "(E x (A y (or (< y x) (= y x))))"]
        for text in formulas:
            f = parse_formula(text, sig)
            assert evaluate(f, base) == evaluate(f, moved), text


@given(st.integers(2, 6), st.integers(0, 40))
@settings(max_examples=30, deadline=None, derandomize=True)
def test_de_morgan_preserved(n, seed):
    import random
    r = random.Random(seed)
    universe = range(n)
    s = make_structure(universe, relations={"U": [(p,) for p in r.sample(range(n), r.randint(0, n))]})
    body_x = Rel("U", ("x",))
    f1 = Not(And((body_x, Not(body_x))))
    f2 = Or((Not(body_x), body_x))
    for p in s.points():
        assert evaluate(f1, s, {"x": p}) == evaluate(f2, s, {"x": p})
    g1 = Not(Exists("x", body_x))
    g2 = Forall("x", Not(body_x))
    assert evaluate(g1, s) == evaluate(g2, s)
    assert evaluate(Not(Not(g1)), s) == evaluate(g1, s)
