import math
import random
from fractions import Fraction

import pytest

from efgames.errors import InfeasibleParameterError, PreconditionError, StrategyError
from efgames.games import final_verdict
from efgames.logic import parse_formula
from efgames.presburger import (PlainPlusContext, PlusContext,
                                SpectrumCertificate, _eventual_period,
                                check_conditions_C, check_conditions_pair,
                                check_semilinear, check_W, check_W_pair,
                                coefficient_values, compute_spectrum,
                                duplicator_move_plain, duplicator_move_with_P,
                                enumerate_combinations, evaluate_combination,
                                generate_P_lemma_a, generate_Q, l_of, c_of,
                                lcm_upto, lift_to_rationals, m_of, params,
                                plain_plus_agent, plus_game_structures,
                                q_integrality_certificate,
                                relevant_integer_picks,
                                rounds_for_translation,
                                translate_strategy_plus,
                                verify_strategy_invariants)
from efgames.structures import (PartialMap, Signature, Window, as_point,
                                is_partial_isomorphism, make_structure)
from efgames.games import GamePosition, Round


class TestParameters:
    def test_base_case(self):
        p = params(1)
        assert (p.m, p.l, p.c, p.g) == (2, 2, 2, Fraction(1, 2))

    def test_level_two(self):
        p = params(2)
        assert p.m == 2 * math.lcm(*range(1, 33))
        assert (p.l, p.c, p.g) == (3, 32, Fraction(5))

    def test_level_three_cheap_parts(self):
        assert l_of(3) == 5
        assert c_of(3) == 2 * 32 ** 4 == 2097152

    def test_rounds(self):
        assert [rounds_for_translation(k) for k in (0, 1, 2)] == [1, 5, 11]

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            params(0)

    def test_lcm_prime_power_path_matches_direct(self):
        # force the sieve path and compare against math.lcm
        for n in (1200, 2048):
            assert lcm_upto(n) == math.lcm(*range(1, n + 1))

    def test_level_four_modulus_infeasible(self):
        with pytest.raises(InfeasibleParameterError):
            m_of(4)


class TestCombinations:
    def test_coefficient_sets(self):
        assert coefficient_values(1, include_zero=True) == (
            Fraction(-1), Fraction(0), Fraction(1))
        assert len(coefficient_values(2, include_zero=True)) == 7

    def test_enumeration_count(self):
        combos = list(enumerate_combinations(("a1", "a2"), 2, 2, Fraction(1, 2)))
        assert len(combos) == 49  # 7 x 7 canonical assignments incl. empty
        assert len({tuple(c.terms) for c in combos}) == 49

    def test_evaluate(self):
        empty = next(iter(enumerate_combinations((), 1, 1, 0)))
        assert evaluate_combination(empty, lambda t: 0) == 0
        combo = [c for c in enumerate_combinations(("a",), 1, 2, 1)
                 if c.terms and c.terms[0][0] == Fraction(1, 2)][0]
        # (1/2) * 10 plus a gap of 1/2 is 11/2
        got = evaluate_combination(combo, lambda t: Fraction(10))
        assert got + Fraction(1, 2) == Fraction(11, 2)

    def test_two_term_arithmetic(self):
        combos = list(enumerate_combinations(("a1", "a2"), 2, 2, 0))
        target = [c for c in combos
                  if dict((r, d) for d, r in c.terms)
                  == {"a1": Fraction(2), "a2": Fraction(-1, 2)}]
        assert len(target) == 1
        vals = {"a1": Fraction(3), "a2": Fraction(4)}
        assert evaluate_combination(target[0], vals.__getitem__) == 4


class TestConditionCheckers:
    def test_pair_corollary_tuples(self):
        # (0, N) vs (0, N + m(1)) with N > 2 g(1) c(1)^2 = 4
        assert check_W_pair((0, 5), (0, 7), 1).ok

    def test_pair_congruence_witness(self):
        rep = check_W_pair((0, 4), (0, 7), 1)
        assert not rep.ok and "congruence" in rep.failure

    def test_lemma_a_sequence_passes(self):
        p = generate_P_lemma_a(0, 3, 2, 2, 2, Fraction(1, 2))
        assert check_W(p, [0], 1).ok

    def test_growth_violation_fails(self):
        rep = check_W([2, 4], [], 1)
        assert not rep.ok and rep.witness is not None

    def test_anchors_range(self):
        # arbitrary anchors below p0 = 0 are allowed alongside the sequence
        p = generate_P_lemma_a(0, 3, 2, 2, 2, Fraction(1, 2))
        assert check_W(p, [0], 1).ok

    def test_empty_p_always_passes(self):
        for k in (1, 2):
            assert check_W([], [0], k, mode="sampled", samples=200).ok

    def test_sampled_mode_flagged(self):
        rep = check_W([8, 760047884158058496000 * 2], [0], 1,
                      mode="sampled", samples=500)
        assert rep.mode == "sampled"

    def test_one_round_game_cross_check(self, rng):
        # checker verdict vs the real 1-round game on a window, for small
        # anchor pairs: W(1) families must win; this is the behavioural
        # reading of the checker
        fams = [((0, 5), (0, 7)), ((0, 6), (0, 8)), ((3, 9), (5, 11))]
        for av, bv in fams:
            rep = check_W_pair(av, bv, 1)
            if not rep.ok:
                continue
            won = _one_round_sweep(av, bv)
            assert won, (av, bv)


def _one_round_sweep(av, bv, lo=-90, hi=90):
    av = tuple(map(as_point, av))
    bv = tuple(map(as_point, bv))
    win = make_structure(Window(lo, hi), addition=True)
    for side, base in (("A", av), ("B", bv)):
        vals = sorted(set(
            evaluate_combination(s, lambda i: base[i])
            for s in enumerate_combinations(range(len(base)), 2, 2, 0)))
        for pick in relevant_integer_picks(vals, lo, hi, mid=2):
            ctx = PlainPlusContext(1, av, bv)
            ans = duplicator_move_plain(ctx, side, pick)
            pair = (pick, ans) if side == "A" else (ans, pick)
            try:
                m = PartialMap(tuple(zip(av, bv)) + (pair,))
            except ValueError:
                return False
            if not is_partial_isomorphism(win, win, m):
                return False
    return True


class TestGenerators:
    def test_q_values(self):
        q = generate_Q(4)
        assert q[0] == 0 and q[1] == 8
        assert q[2] == 2631680 * params(2).m

    def test_q_integrality(self):
        for i in range(4):
            assert q_integrality_certificate(i).integral
        cert = q_integrality_certificate(4)
        assert cert.integral and "factored" in cert.method

    def test_q5_out_of_range(self):
        with pytest.raises(InfeasibleParameterError):
            generate_Q(5)

    def test_p_sequence_base(self):
        p = generate_P_lemma_a(0, 4, 2, 2, 2, Fraction(1, 2))
        assert p[0] == 4
        # ratios at least (2l-1) * 2c^3 once positive, members congruent
        for prev, nxt in zip(p, p[1:]):
            assert nxt >= 3 * 16 * prev + 4
            assert (nxt - p[0]) % 2 == 0


class TestPlainStrategy:
    def test_echo_existing_pick(self):
        ctx = PlainPlusContext(1, (as_point(0), as_point(5)),
                               (as_point(0), as_point(7)))
        assert duplicator_move_plain(ctx, "A", 5) == 7
        ctx = PlainPlusContext(1, (as_point(0), as_point(5)),
                               (as_point(0), as_point(7)))
        assert duplicator_move_plain(ctx, "B", 7) == 5

    def test_double_anchor(self):
        ctx = PlainPlusContext(1, (as_point(0), as_point(5)),
                               (as_point(0), as_point(7)))
        assert duplicator_move_plain(ctx, "A", 10) == 14

    def test_gap_hit_answer(self):
        # pick 2 sits within g(1) of the value 5/2 = (1/2)*5, so the answer
        # is 7/2 + (2 - 5/2) = 3; the final map is a partial isomorphism
        ctx = PlainPlusContext(1, (as_point(0), as_point(5)),
                               (as_point(0), as_point(7)))
        ans = duplicator_move_plain(ctx, "A", 2)
        assert ans == 3
        win = make_structure(Window(-40, 40), addition=True)
        m = PartialMap.of({as_point(0): as_point(0), as_point(5): as_point(7),
                           as_point(2): ans})
        assert is_partial_isomorphism(win, win, m)

    def test_beyond_all_values_shifts(self):
        ctx = PlainPlusContext(1, (as_point(0), as_point(5)),
                               (as_point(0), as_point(7)))
        big = duplicator_move_plain(ctx, "A", 1000)
        assert big > 14 and big.denominator == 1


@pytest.fixture(scope="module")
def translated():
    a = make_structure(range(0, 50), relations={"R": [(3, 9)]})
    b = make_structure(range(0, 50), relations={"R": [(5, 20)]})
    qset = generate_Q(4)[:3]
    return translate_strategy_plus(a, b, 1, qset)


class TestFullStrategy:
    def test_embeddings_hit_positions(self, translated):
        alpha, beta, agent, config = translated
        assert alpha.targets() == config.p_set[:2]
        assert beta.targets() == config.p_set[:2]

    def test_precondition_rejected(self):
        a = make_structure(range(0, 50), relations={"R": [(3, 9)]})
        bad = make_structure(range(0, 50), relations={"R": [(5, 20), (1, 2)]})
        with pytest.raises(PreconditionError):
            translate_strategy_plus(a, bad, 1, generate_Q(4)[:3])

    def test_q_prefix_too_short(self):
        a = make_structure(range(0, 50), relations={"R": [(3, 9)]})
        with pytest.raises(PreconditionError, match="too short"):
            translate_strategy_plus(a, a, 1, generate_Q(4)[:2])

    def test_p_membership_and_congruence_cases(self, translated):
        alpha, beta, agent, config = translated
        ctx = PlusContext(config)
        # anchor pick answers itself
        assert duplicator_move_with_P(ctx, "A", 0) == 0
        ctx2 = PlusContext(config)
        # P pick gets a P answer through the order game
        ans = duplicator_move_with_P(ctx2, "A", config.p_set[0])
        assert ans in config.p_set
        ctx3 = PlusContext(config)
        # a wide-gap midpoint answers outside P
        gap_mid = (config.p_set[0] + config.p_set[1]) // 2
        ans3 = duplicator_move_with_P(ctx3, "A", gap_mid)
        assert ans3 not in set(config.p_set)

    def test_invariants_on_fresh_context(self, translated):
        *_, config = translated
        assert verify_strategy_invariants(PlusContext(config)).ok

    def test_invariants_catch_bracket_escape(self, translated):
        # an answer on the wrong side of a combination value violates the
        # single-pick order transfer (condition 4)
        from efgames.presburger import PlusRoundRecord
        *_, config = translated
        ctx = PlusContext(config)
        duplicator_move_with_P(ctx, "A", 2)
        good = ctx.rounds[-1]
        assert verify_strategy_invariants(ctx).ok
        ctx.rounds[-1] = PlusRoundRecord(good.side, good.pick,
                                         good.answer + 100,
                                         good.virtual_added, good.case)
        report = verify_strategy_invariants(ctx)
        assert not report.ok and report.failed_condition == 4

    def test_invariants_catch_parity_injection(self):
        # at two remaining rounds the first pair must be congruent mod m(1);
        # an odd offset trips condition (2) (synthetic context: the checker
        # does not need the move machinery)
        from efgames.presburger import PlusGameConfig, PlusRoundRecord
        q = generate_Q(4)
        small = make_structure([q[1], q[2]])
        config = PlusGameConfig(k=2, p_set=(q[1], q[2]), anchors=(as_point(0),),
                                small_a=small, small_b=small)
        ctx = PlusContext(config)
        ctx.rounds.append(PlusRoundRecord("A", as_point(2), as_point(5), (),
                                          "bracket"))
        report = verify_strategy_invariants(ctx)
        assert not report.ok and report.failed_condition == 2


class TestRationalLift:
    def test_integer_pick_passthrough(self):
        inner = plain_plus_agent((as_point(0), as_point(5)),
                                 (as_point(0), as_point(7)), 1)
        lifted = lift_to_rationals(inner)
        pos = GamePosition(None, None, (), 1)
        assert lifted.answer(pos, "A", as_point(10)) == 14

    def test_floor_decomposition(self):
        inner = plain_plus_agent((as_point(0), as_point(5)),
                                 (as_point(0), as_point(7)), 1)
        lifted = lift_to_rationals(inner)
        pos = GamePosition(None, None, (), 1)
        ans = lifted.answer(pos, "A", Fraction(5, 2))
        inner_ans = inner.answer(pos, "A", as_point(2))
        assert ans == inner_ans + Fraction(1, 2)

    def test_membership_preservation_sweep(self, rng):
        inner = plain_plus_agent((as_point(0), as_point(6)),
                                 (as_point(0), as_point(8)), 1)
        lifted = lift_to_rationals(inner)
        pos = GamePosition(None, None, (), 1)
        for _ in range(120):
            base = rng.randint(-30, 30)
            den = rng.randint(1, 6)
            num = rng.randint(0, den - 1)
            pick = Fraction(base) + Fraction(num, den)
            ans = lifted.answer(pos, "A", pick)
            assert (pick.denominator == 1) == (ans.denominator == 1)
            assert (ans - pick).denominator == 1


class TestSpectra:
    SIG = Signature(addition=True)

    def test_max_exists(self):
        phi = parse_formula("(E x (A y (or (< y x) (= y x))))", self.SIG)
        cert = compute_spectrum(phi, 40)
        assert cert.empirical_period == 1 and cert.empirical_preperiod == 0
        assert check_semilinear(cert)

    def test_even_max(self):
        phi = parse_formula(
            "(E x (and (E z (+ z z x)) (A y (or (< y x) (= y x)))))", self.SIG)
        cert = compute_spectrum(phi, 64)
        # brute-force oracle: N is in the spectrum iff N is even
        for n in range(1, 65):
            assert cert.member(n) == (n % 2 == 0)
        assert cert.empirical_period == 2
        assert check_semilinear(cert)

    def test_qd1_bounds(self):
        phi = parse_formula("(E x (+ x x x))", self.SIG)
        cert = compute_spectrum(phi, 32)
        assert cert.qdepth == 1
        assert cert.n0 == 4 and cert.period_bound == 2
        assert cert.empirical_preperiod <= 4
        assert 2 % cert.empirical_period == 0

    def test_primes_not_semilinear(self):
        primes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                  53, 59, 61}
        bits = tuple(n in primes for n in range(1, 65))
        pre, per = _eventual_period(bits)
        cert = SpectrumCertificate(bits, 64, 1, Fraction(4), 2, pre, per)
        assert not check_semilinear(cert)

    def test_monotone_consistency(self):
        phi = parse_formula(
            "(E x (and (E z (+ z z x)) (A y (or (< y x) (= y x)))))", self.SIG)
        small = compute_spectrum(phi, 24)
        large = compute_spectrum(phi, 40)
        assert large.bits[:24] == small.bits
