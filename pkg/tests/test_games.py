import itertools
from fractions import Fraction

import pytest

from efgames.errors import BudgetExceededError
from efgames.games import (Agent, GameOracle, duplicator_wins_oracle, k_type,
                           play_ef_game, play_single_round_game,
                           relevant_window_points, single_round_oracle,
                           sweep_all_spoiler_plays)
from efgames.structures import (Window, linear_order, make_structure)


def copy_duplicator():
    """Answers with the spoiler's own point (sound when a == b)."""
    return Agent(role="duplicator", answer=lambda pos, side, pick: pick,
                 name="copy")


def fixed_spoiler(moves):
    it = iter(moves)
    return Agent(role="spoiler", choose=lambda pos: next(it), name="fixed")


class TestPlayEfGame:
    def test_copy_wins_on_equal_structures(self):
        s = make_structure(range(5), relations={"R": [(1, 3)]})
        sp = fixed_spoiler([("A", 1), ("B", 4), ("A", 3)])
        t = play_ef_game(s, s, 3, sp, copy_duplicator())
        assert t.duplicator_won

    def test_spoiler_wins_one_vs_two(self):
        a, b = linear_order(1), linear_order(2)
        oracle = GameOracle(a, b)
        t = play_ef_game(a, b, 2, oracle.extract_spoiler(2),
                         oracle.extract_duplicator(2))
        assert not t.duplicator_won

    def test_minimax_duplicator_wins_3_vs_6(self):
        a, b = linear_order(4), linear_order(7)
        oracle = GameOracle(a, b)
        t = play_ef_game(a, b, 2, oracle.extract_spoiler(2),
                         oracle.extract_duplicator(2))
        assert t.duplicator_won

    def test_forfeit_recorded(self):
        a = linear_order(2)

        def broken(pos, side, pick):
            from efgames.errors import StrategyError
            raise StrategyError("nope")

        t = play_ef_game(a, a, 1, fixed_spoiler([("A", 0)]),
                         Agent(role="duplicator", answer=broken))
        assert not t.duplicator_won and t.forfeit == "duplicator"


class TestOracle:
    def test_isomorphic_always_equivalent(self):
        a = make_structure([0, 3, 9], relations={"R": [(0, 9)]})
        b = make_structure([1, 4, 5], relations={"R": [(1, 5)]})
        for r in (1, 2, 3):
            assert duplicator_wins_oracle(a, b, r)

    def test_linear_order_law(self):
        # independent theory: n-chains and m-chains are r-equivalent iff
        # n == m or both have at least 2^r - 1 elements
        for r in (1, 2, 3):
            for n, m in itertools.product(range(1, 8), repeat=2):
                expect = n == m or (n >= 2 ** r - 1 and m >= 2 ** r - 1)
                assert duplicator_wins_oracle(
                    linear_order(n), linear_order(m), r) == expect, (r, n, m)

    def test_constants_checked_before_round_one(self):
        a = make_structure(range(4), constants={"c": 0}, monadic={"P": [0]})
        b = make_structure(range(4), constants={"c": 1}, monadic={"P": [0]})
        assert not duplicator_wins_oracle(a, b, 0)

    def test_monotone_in_rounds(self, rng):
        pool = [linear_order(n) for n in range(1, 6)]
        for a, b in itertools.combinations(pool, 2):
            wins = [duplicator_wins_oracle(a, b, r) for r in (1, 2, 3)]
            for earlier, later in zip(wins, wins[1:]):
                assert (not later) or earlier

    def test_budget_error_is_distinct(self):
        a, b = linear_order(6), linear_order(7)
        with pytest.raises(BudgetExceededError):
            duplicator_wins_oracle(a, b, 3, budget=10)

    def test_extracted_agents_realize_verdict(self, rng):
        # soundness: the minimax duplicator never loses a winnable game
        # against random spoilers, and the minimax spoiler always wins an
        # unwinnable one against random duplicators
        pairs = [(linear_order(3), linear_order(4), 2, True),
                 (linear_order(2), linear_order(3), 2, False),
                 (linear_order(7), linear_order(9), 3, True),
                 (linear_order(6), linear_order(7), 3, False)]
        for a, b, r, dup_wins in pairs:
            oracle = GameOracle(a, b)
            assert oracle.duplicator_wins(r) == dup_wins
            if dup_wins:
                bad = sweep_all_spoiler_plays(a, b, r,
                                              oracle.extract_duplicator(r))
                assert bad is None
            else:
                sp = oracle.extract_spoiler(r)
                for trial in range(10):
                    du = Agent(role="duplicator",
                               answer=lambda pos, side, pick:
                               rng.choice((b if side == "A" else a).points()))
                    t = play_ef_game(a, b, r, sp, du)
                    assert not t.duplicator_won


class TestKType:
    def test_depth_zero_is_constant_diagram(self):
        # depth 0 sees only the constants' atomic facts, matching the
        # 0-round winning condition
        a = make_structure(range(3), constants={"c": 0})
        b = make_structure(range(7), constants={"c": 2})
        assert k_type(a, 0) == k_type(b, 0)
        assert duplicator_wins_oracle(a, b, 0)
        p = make_structure(range(3), constants={"c": 0}, monadic={"P": [0]})
        q = make_structure(range(3), constants={"c": 0}, monadic={"P": [1]})
        assert k_type(p, 0) != k_type(q, 0)
        assert not duplicator_wins_oracle(p, q, 0)

    def test_shifted_windows_equal(self):
        a = make_structure(Window(0, 2), constants={"left": 0})
        b = make_structure(Window(10, 12), constants={"left": 10})
        assert k_type(a, 2) == k_type(b, 2)

    def test_anchored_sizes_distinct(self):
        a = make_structure(range(0, 3), constants={"left": 0})
        b = make_structure(range(0, 4), constants={"left": 0})
        assert k_type(a, 2) != k_type(b, 2)
        assert duplicator_wins_oracle(a, b, 2) is False

    def test_agreement_with_oracle(self, rng):
        pools = [
            [linear_order(n) for n in (2, 3, 4, 7)],
            [make_structure(range(4), relations={"U": [(1,)]}),
             make_structure(range(4), relations={"U": [(2,)]}),
             make_structure(range(5), relations={"U": [(2,)]})],
        ]
        for pool in pools:
            for a, b in itertools.combinations(pool, 2):
                for r in (1, 2):
                    assert ((k_type(a, r) == k_type(b, r))
                            == duplicator_wins_oracle(a, b, r)), (a, b, r)


class TestSingleRound:
    def test_copy_wins(self):
        s = make_structure(range(4), relations={"R": [(0, 3)]})
        sp = Agent(role="spoiler", choose=lambda pos: ("A", (0, 1, 3)))
        du = Agent(role="duplicator", answer=lambda pos, side, picks: picks)
        t = play_single_round_game(s, s, 3, sp, du)
        assert t.duplicator_won

    def test_pigeonhole(self):
        assert not single_round_oracle(linear_order(2), linear_order(3), 3)
        assert not single_round_oracle(linear_order(1), linear_order(2), 2)

    def test_r1_matches_one_round_classical(self, rng):
        pool = [linear_order(n) for n in (2, 3, 4)]
        pool += [make_structure(range(4), monadic={"P": [0]}),
                 make_structure(range(5), monadic={"P": [4]}),
                 make_structure(range(5), monadic={"P": [2]})]
        cases = 0
        for a, b in itertools.combinations(pool, 2):
            if a.signature != b.signature:
                continue
            assert (single_round_oracle(a, b, 1)
                    == duplicator_wins_oracle(a, b, 1))
            cases += 1
        for s in pool:
            assert single_round_oracle(s, s, 1)
            cases += 1
        assert cases >= 12

    def test_predicate_positions(self):
        a = make_structure(range(5), monadic={"P": [0]})
        b = make_structure(range(5), monadic={"P": [4]})
        # spoiler grabs the predicate point and the window minimum at once
        assert single_round_oracle(a, b, 1)
        assert not single_round_oracle(a, b, 2)


class TestWindowRestriction:
    def test_relevant_points_cover_exact_verdicts(self):
        # validation of the relevant-point device: restricted and full
        # enumeration agree on small windows
        cases = [
            (make_structure(Window(0, 8), monadic={"P": [2, 5]}),
             make_structure(Window(0, 8), monadic={"P": [3, 6]})),
            (make_structure(Window(0, 6), addition=True, constants={"z": 0}),
             make_structure(Window(0, 6), addition=True, constants={"z": 0})),
            (make_structure(Window(0, 7), relations={"R": [(1, 4)]}),
             make_structure(Window(0, 7), relations={"R": [(2, 6)]})),
        ]
        for a, b in cases:
            for r in (1, 2):
                assert (duplicator_wins_oracle(a, b, r, restrict_windows=True)
                        == duplicator_wins_oracle(a, b, r, restrict_windows=False))

    def test_relevant_points_include_landmarks(self):
        s = make_structure(Window(0, 20), monadic={"P": [7]},
                           constants={"c": 3})
        pts = relevant_window_points(s)
        for landmark in (0, 3, 7, 20):
            assert Fraction(landmark) in pts


class TestEquivalenceRelation:
    def test_oracle_is_equivalence(self):
        pool = [linear_order(n) for n in (1, 2, 3, 4)]
        for r in (1, 2):
            for a in pool:
                assert duplicator_wins_oracle(a, a, r)
            for a, b in itertools.permutations(pool, 2):
                assert (duplicator_wins_oracle(a, b, r)
                        == duplicator_wins_oracle(b, a, r))
            for a, b, c in itertools.permutations(pool, 3):
                if (duplicator_wins_oracle(a, b, r)
                        and duplicator_wins_oracle(b, c, r)):
                    assert duplicator_wins_oracle(a, c, r)
