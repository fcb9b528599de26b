"""Duplicator strategies and combinatorial conditions for games with addition.

The machinery here revolves around bounded linear combinations.  An
(l, c, g)-combination over a term list is a formal sum  sum_i d_i * x_i + f
with at most l pairwise distinct terms, coefficients d_i drawn from
Q[c] = {u/u' : |u|,|u'| <= c, u' != 0}, and a symbolic gap |f| <= g.  The
conditions C(m, l, c, g) demand congruence mod m plus transfer of the order
of all combination values under every correspondence; W(k) is C at the
parameter quadruple produced by the recursion

    m(1)=2  m(k+1)=m(k)*lcm{1..2c(k)^4}      l(1)=2  l(k+1)=2l(k)-1
    c(1)=2  c(k+1)=2c(k)^4                   g(1)=1/2 g(k+1)=2g(k)c(k)^2+m(k)/2

with m(0)=1 for the bookkeeping of the final round.

Gap parameters range over real intervals and are never sampled.  For fixed
gapless values the universally quantified transfer condition

    for all f,h in [-g,+g]:  s1+f < s2+h  iff  t1+f < t2+h

reduces exactly to a three-way threshold test on ds = s2-s1 and dt = t2-t1:
it holds iff ds == dt, or both ds,dt > 2g, or both ds,dt <= -2g.  (Writing
d = h-f in [-2g,2g], the condition says ds+d > 0 iff dt+d > 0 for all d;
for ds < dt the failing d's are exactly (-dt,-ds] intersected with
[-2g,2g], which is empty iff ds > 2g or dt <= -2g.)  Note the asymmetry:
the bound is strict on the positive side and non-strict on the negative
side because < itself is strict.
"""

from __future__ import annotations

import itertools
import math
import random
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

from .errors import (BudgetExceededError, InfeasibleParameterError,
                     PreconditionError, StrategyError)
from .games import Agent, GameOracle, GamePosition, Round
from .logic import Formula, evaluate, quantifier_depth
from .structures import (OrderedStructure, PartialMap, Point, Window,
                         active_domain, as_point, database_order_structure,
                         jth_smallest_embedding, make_structure)

# ---------------------------------------------------------------------------
# Parameter recursions
# ---------------------------------------------------------------------------

# lcm{1..n} for n beyond this is astronomically large (the value has on the
# order of n/ln(10) digits); refuse rather than thrash.
LCM_FEASIBLE_LIMIT = 4_000_000


def lcm_upto(n: int) -> int:
    """Exact lcm{1..n}; prime-power product for large n."""
    if n < 1:
        raise ValueError("lcm_upto needs n >= 1")
    if n > LCM_FEASIBLE_LIMIT:
        raise InfeasibleParameterError(
            f"lcm{{1..{n}}} has ~{n // 2} digits and cannot be materialized")
    if n <= 1000:
        return math.lcm(*range(1, n + 1))
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, int(n ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p::p] = b"\x00" * len(sieve[p * p::p])
    factors = []
    for p in range(2, n + 1):
        if sieve[p]:
            q = p
            while q * p <= n:
                q *= p
            factors.append(q)
    # balanced product keeps the big-int multiplications near-equal in size
    while len(factors) > 1:
        factors = [factors[i] * factors[i + 1] if i + 1 < len(factors) else factors[i]
                   for i in range(0, len(factors), 2)]
    return factors[0] if factors else 1


@lru_cache(maxsize=None)
def l_of(k: int) -> int:
    if k < 1:
        raise ValueError("k >= 1 required")
    return 2 if k == 1 else 2 * l_of(k - 1) - 1


@lru_cache(maxsize=None)
def c_of(k: int) -> int:
    if k < 1:
        raise ValueError("k >= 1 required")
    return 2 if k == 1 else 2 * c_of(k - 1) ** 4


@lru_cache(maxsize=None)
def m_of(k: int) -> int:
    if k < 0:
        raise ValueError("k >= 0 required")
    if k == 0:
        return 1  # final-round bookkeeping
    if k == 1:
        return 2
    return m_of(k - 1) * lcm_upto(2 * c_of(k - 1) ** 4)


@lru_cache(maxsize=None)
def g_of(k: int) -> Fraction:
    if k < 1:
        raise ValueError("k >= 1 required")
    if k == 1:
        return Fraction(1, 2)
    return 2 * g_of(k - 1) * c_of(k - 1) ** 2 + Fraction(m_of(k - 1), 2)


@dataclass(frozen=True)
class GameParameters:
    k: int
    m: int
    l: int
    c: int
    g: Fraction


def params(k: int) -> GameParameters:
    """Exact parameter quadruple for the k-round game; k >= 1."""
    if k < 1:
        raise ValueError("parameters are defined for k >= 1")
    return GameParameters(k=k, m=m_of(k), l=l_of(k), c=c_of(k), g=g_of(k))


def rounds_for_translation(k: int) -> int:
    """Round budget of the order game backing a k-round addition game:
    r(0) = 1 and r(j+1) = r(j) + 2*l(j+1)."""
    if k < 0:
        raise ValueError("k >= 0 required")
    r = 1
    for j in range(1, k + 1):
        r += 2 * l_of(j)
    return r


# ---------------------------------------------------------------------------
# Bounded coefficients and combinations
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def coefficient_values(c: int, include_zero: bool = False) -> tuple:
    """Distinct values of Q[c], ascending (without 0 by default: a zero
    coefficient is the same as omitting the term)."""
    vals = {Fraction(u, v) for u in range(1, c + 1) for v in range(1, c + 1)}
    vals |= {-x for x in vals}
    if include_zero:
        vals.add(Fraction(0))
    return tuple(sorted(vals))


@dataclass(frozen=True)
class LinCombination:
    """A formal sum  sum_i coeff_i * term_i + gap  in canonical form:
    pairwise distinct term refs in ascending order, no zero coefficients."""
    terms: tuple[tuple[Fraction, object], ...]
    gap: Fraction = Fraction(0)
    bounds: tuple = ()   # the (l, c, g) it was enumerated under, if any

    def refs(self) -> tuple:
        return tuple(r for _, r in self.terms)


def evaluate_combination(s: LinCombination, valuation: Callable) -> Fraction:
    total = Fraction(s.gap)
    for coeff, ref in s.terms:
        total += coeff * as_point(valuation(ref))
    return total


def combination_count(n_terms: int, l: int, c: int) -> int:
    q = len(coefficient_values(c))
    return sum(math.comb(n_terms, j) * q ** j for j in range(0, min(l, n_terms) + 1))


def enumerate_combinations(terms: Sequence, l: int, c: int, g,
                           budget: int = 2_000_000):
    """All gapless (l, c, g)-combinations over `terms`, canonically ordered.
    Gaps stay symbolic: every yielded combination has gap 0 and carries the
    bound g for the threshold tests downstream."""
    g = Fraction(g)
    terms = tuple(terms)
    if combination_count(len(terms), l, c) > budget:
        raise BudgetExceededError(
            f"{combination_count(len(terms), l, c)} combinations exceed budget {budget}")
    coeffs = coefficient_values(c)
    for j in range(0, min(l, len(terms)) + 1):
        for support in itertools.combinations(range(len(terms)), j):
            for assignment in itertools.product(coeffs, repeat=j):
                yield LinCombination(
                    terms=tuple((d, terms[i]) for d, i in zip(assignment, support)),
                    gap=Fraction(0), bounds=(l, c, g))


def order_transfer_ok(ds, dt, two_g) -> bool:
    """The symbolic-gap transfer test described in the module docstring."""
    return ds == dt or (ds > two_g and dt > two_g) or (ds <= -two_g and dt <= -two_g)


# ---------------------------------------------------------------------------
# Condition checkers
# ---------------------------------------------------------------------------

@dataclass
class CheckReport:
    ok: bool
    mode: str                 # "exhaustive" | "sampled"
    checked: int = 0
    failure: Optional[str] = None
    witness: Optional[dict] = None

    def describe(self) -> str:
        head = "PASS" if self.ok else "FAIL"
        out = f"{head} [{self.mode}, {self.checked} checks]"
        if not self.ok:
            out += f": {self.failure}"
            if self.witness:
                for key, val in self.witness.items():
                    out += f"\n  {key}: {val}"
        return out


def _combination_blob(combo: LinCombination) -> str:
    parts = [f"{d}*{r}" for d, r in combo.terms]
    return " + ".join(parts) if parts else "0"


def check_conditions_pair(avec: Sequence, bvec: Sequence, m: int, l: int,
                          c: int, g, mode: str = "exhaustive",
                          samples: int = 10_000, rng: Optional[random.Random] = None,
                          budget: int = 4_000_000) -> CheckReport:
    """C(m,l,c,g) for two equally long tuples, combinations corresponding by
    position.  This is the game-prefix form of the conditions: avec plays
    the elements chosen in A, bvec those chosen in B."""
    avec = tuple(as_point(x) for x in avec)
    bvec = tuple(as_point(x) for x in bvec)
    if len(avec) != len(bvec):
        raise ValueError("tuples must have equal length")
    g = Fraction(g)
    two_g = 2 * g
    for i, (x, y) in enumerate(zip(avec, bvec)):
        if (x - y) % m != 0:
            return CheckReport(False, mode, i + 1, "congruence (*) fails",
                              {"index": i, "a": x, "b": y, "modulus": m})
    combos = list(enumerate_combinations(range(len(avec)), l, c, g, budget=budget))
    vals = [(evaluate_combination(s, lambda i: avec[i]),
             evaluate_combination(s, lambda i: bvec[i]), s) for s in combos]
    checked = 0
    if mode == "exhaustive":
        if len(vals) * len(vals) > budget:
            raise BudgetExceededError(
                f"{len(vals)}^2 combination pairs exceed budget; use sampled mode")
        pair_iter = itertools.product(vals, vals)
    else:
        rng = rng or random.Random(0)
        pair_iter = ((vals[rng.randrange(len(vals))], vals[rng.randrange(len(vals))])
                     for _ in range(samples))
    for (va1, vb1, s1), (va2, vb2, s2) in pair_iter:
        checked += 1
        if not order_transfer_ok(va2 - va1, vb2 - vb1, two_g):
            return CheckReport(False, mode, checked, "order transfer (**) fails",
                              {"s1": _combination_blob(s1), "s2": _combination_blob(s2),
                               "delta_a": va2 - va1, "delta_b": vb2 - vb1,
                               "gap_bound": g})
    return CheckReport(True, mode, checked)


def _correspondences(term_points, p_set, anchors):
    """All maps defined on `term_points` that fix anchors, send P-points to
    strictly increasing tuples in P, and preserve P-membership."""
    p_sorted = tuple(sorted(p_set))
    p_terms = tuple(sorted(t for t in term_points if t in p_set))
    fixed = {t: t for t in term_points if t not in p_set}
    for image in itertools.combinations(p_sorted, len(p_terms)):
        yield fixed | dict(zip(p_terms, image))


def check_conditions_C(p_set: Sequence, anchors: Sequence, m: int, l: int,
                       c: int, g, mode: str = "exhaustive",
                       samples: int = 10_000, rng: Optional[random.Random] = None,
                       budget: int = 4_000_000) -> CheckReport:
    """C(m,l,c,g) for a distinguished set P with fixed anchors.

    (*)  all pairs of P elements are congruent mod m;
    (**) for all combination pairs over P and the anchors, and every
         correspondence defined on their terms, the symbolic-gap order
         transfer holds.
    """
    p_set = tuple(sorted(as_point(x) for x in p_set))
    anchors = tuple(as_point(x) for x in anchors)
    if set(p_set) & set(anchors):
        raise ValueError("P and anchors must be disjoint")
    g = Fraction(g)
    two_g = 2 * g
    for x, y in itertools.combinations(p_set, 2):
        if (x - y) % m != 0:
            return CheckReport(False, mode, 0, "congruence (*) fails on P",
                              {"p": x, "q": y, "modulus": m})
    terms = tuple(sorted(set(p_set) | set(anchors)))
    checked = 0

    def transfer(s1, s2, pi):
        v1 = evaluate_combination(s1, lambda t: t)
        v2 = evaluate_combination(s2, lambda t: t)
        w1 = evaluate_combination(s1, lambda t: pi[t])
        w2 = evaluate_combination(s2, lambda t: pi[t])
        return order_transfer_ok(v2 - v1, w2 - w1, two_g), (v2 - v1, w2 - w1)

    if mode == "exhaustive":
        combos = [(evaluate_combination(s, lambda t: t), s)
                  for s in enumerate_combinations(terms, l, c, g, budget=budget)]
        for (v1, s1), (v2, s2) in itertools.product(combos, combos):
            term_pts = tuple(sorted(set(s1.refs()) | set(s2.refs())))
            for pi in _correspondences(term_pts, set(p_set), anchors):
                checked += 1
                if checked > budget:
                    raise BudgetExceededError(
                        "correspondence enumeration exceeds budget; use sampled mode")
                ok, deltas = transfer(s1, s2, pi)
                if not ok:
                    return CheckReport(False, mode, checked, "order transfer (**) fails",
                                      {"s1": _combination_blob(s1),
                                       "s2": _combination_blob(s2),
                                       "pi": sorted(pi.items()),
                                       "delta": deltas[0], "delta_image": deltas[1],
                                       "gap_bound": g})
    else:
        rng = rng or random.Random(0)
        for _ in range(samples):
            s1 = _random_combination(terms, l, c, rng)
            s2 = _random_combination(terms, l, c, rng)
            term_pts = tuple(sorted(set(s1.refs()) | set(s2.refs())))
            pis = list(_correspondences(term_pts, set(p_set), anchors))
            pi = pis[rng.randrange(len(pis))]
            checked += 1
            ok, deltas = transfer(s1, s2, pi)
            if not ok:
                return CheckReport(False, mode, checked, "order transfer (**) fails",
                                  {"s1": _combination_blob(s1),
                                   "s2": _combination_blob(s2),
                                   "pi": sorted(pi.items()),
                                   "delta": deltas[0], "delta_image": deltas[1],
                                   "gap_bound": g})
    return CheckReport(True, mode, checked)


def _random_combination(terms, l, c, rng) -> LinCombination:
    coeffs = coefficient_values(c)
    j = rng.randint(0, min(l, len(terms)))
    support = sorted(rng.sample(range(len(terms)), j))
    return LinCombination(
        terms=tuple((coeffs[rng.randrange(len(coeffs))], terms[i]) for i in support),
        gap=Fraction(0))


def check_W(p_set, anchors, k: int, **kwargs) -> CheckReport:
    p = params(k)
    return check_conditions_C(p_set, anchors, p.m, p.l, p.c, p.g, **kwargs)


def check_W_pair(avec, bvec, k: int, **kwargs) -> CheckReport:
    p = params(k)
    return check_conditions_pair(avec, bvec, p.m, p.l, p.c, p.g, **kwargs)


# ---------------------------------------------------------------------------
# Distinguished-set generators
# ---------------------------------------------------------------------------

def generate_P_lemma_a(p0: int, count: int, m: int, l: int, c: int, g) -> list[int]:
    """The minimal increasing sequence p_1 < ... < p_count with
    p_i >= (2l-1)*2c^3*p_{i-1} + 2gc^2 and all members congruent mod m
    (rounding up into p_1's residue class)."""
    if p0 < 0:
        raise ValueError("p0 must be nonnegative")
    g = Fraction(g)
    out: list[int] = []
    prev = p0
    residue = None
    for _ in range(count):
        bound = (2 * l - 1) * 2 * c ** 3 * prev + 2 * g * c ** 2
        nxt = math.ceil(bound)
        if residue is None:
            residue = nxt % m
        else:
            nxt += (residue - nxt) % m
        out.append(nxt)
        prev = nxt
    return out


def generate_Q(count: int) -> list[int]:
    """The self-similar set q_0 = 0,
    q_i = m(i) * ((2l(i)-1)*2c(i)^3*q_{i-1} + 2g(i)c(i)^2); exact integers,
    integrality asserted.  Only q_0..q_3 are materializable: q_4 needs
    m(4) = m(3)*lcm{1..2^85}, a number with ~10^25 digits.  Use
    q_integrality_certificate(4) for the next index."""
    if count > 4:
        raise InfeasibleParameterError(
            "q_4 and beyond require m(k) values that cannot be materialized")
    out = [0]
    for i in range(1, count):
        q = Fraction(m_of(i)) * ((2 * l_of(i) - 1) * 2 * c_of(i) ** 3 * out[-1]
                                 + 2 * g_of(i) * c_of(i) ** 2)
        assert q.denominator == 1, f"q_{i} failed integrality"
        out.append(q.numerator)
    return out


def approx_digit_count(n: int) -> int:
    """Decimal digit count without materializing the decimal string (huge
    values trip CPython's int-to-str guard)."""
    if n == 0:
        return 1
    return int(abs(n).bit_length() * 0.30102999566398) + 1


@dataclass(frozen=True)
class QIntegralityCertificate:
    index: int
    integral: bool
    method: str
    cofactor_digits: int = 0


def q_integrality_certificate(i: int) -> QIntegralityCertificate:
    """Exact integrality of q_i.  Up to i=3 by direct evaluation; for i=4 by
    the factorization q_4 = m(4) * X with m(4) an integer by construction
    (a product of lcms) and X = (2l(4)-1)*2c(4)^3*q_3 + 2g(4)c(4)^2
    computed exactly and checked integral."""
    if i < 0:
        raise ValueError("index must be nonnegative")
    if i <= 3:
        q = generate_Q(i + 1)[i]
        return QIntegralityCertificate(i, True, "direct", approx_digit_count(q))
    if i == 4:
        q3 = generate_Q(4)[3]
        cofactor = (2 * l_of(4) - 1) * 2 * c_of(4) ** 3 * q3 + 2 * g_of(4) * c_of(4) ** 2
        cofactor = Fraction(cofactor)
        ok = cofactor.denominator == 1
        return QIntegralityCertificate(4, ok, "factored: m(4) * integer cofactor",
                                       approx_digit_count(cofactor.numerator))
    raise InfeasibleParameterError(f"q_{i} integrality is out of desk range")


# ---------------------------------------------------------------------------
# Gapless value tables (strategy support)
# ---------------------------------------------------------------------------

def _value_table(terms: Sequence[Fraction], l: int, c: int,
                 budget: int = 2_000_000):
    """value -> canonical combination, for all gapless (l,c,.)-combinations
    over distinct `terms`; the first combination enumerated for a value is
    kept (enumeration order is canonical)."""
    table: dict[Fraction, LinCombination] = {}
    for combo in enumerate_combinations(tuple(terms), l, c, 0, budget=budget):
        v = evaluate_combination(combo, lambda t: t)
        table.setdefault(v, combo)
    return table


@lru_cache(maxsize=512)
def _paired_value_table(avec, bvec, l, c, budget=2_000_000):
    """(a-value -> b-value, ascending a-values) over index-corresponding
    combinations; raises StrategyError when one a-value maps to two
    b-values (that can only happen when the claimed conditions are
    violated).

    Indices where both tuples are 0 contribute nothing to either side and
    are skipped; this keeps the enumeration linear for the ubiquitous
    (0, N)-style anchor tuples."""
    live = tuple(i for i in range(len(avec)) if avec[i] != 0 or bvec[i] != 0)
    table: dict[Fraction, Fraction] = {}
    for combo in enumerate_combinations(live, l, c, 0, budget=budget):
        va = evaluate_combination(combo, lambda i: avec[i])
        vb = evaluate_combination(combo, lambda i: bvec[i])
        if va in table:
            if table[va] != vb:
                raise StrategyError(
                    f"inconsistent value map at {va}: {table[va]} vs {vb}; "
                    "conditions do not hold")
        else:
            table[va] = vb
    return table, tuple(sorted(table))


def _smallest_congruent_in(lo: Fraction, hi: Fraction, residue: int, mid: int):
    """Smallest integer in the open interval (lo, hi) congruent to residue
    mod mid, or None."""
    start = math.floor(lo) + 1
    start += (residue - start) % mid
    if start < hi and start > lo:
        return start
    return None


# ---------------------------------------------------------------------------
# The plain strategy (anchored tuples, no distinguished set)
# ---------------------------------------------------------------------------

@dataclass
class PlainPlusContext:
    """Replayable state of the anchored-tuple strategy: k total rounds,
    anchor tuples, and the picks so far."""
    k: int
    anchors_a: tuple[Fraction, ...]
    anchors_b: tuple[Fraction, ...]
    picks_a: tuple[Fraction, ...] = ()
    picks_b: tuple[Fraction, ...] = ()

    @property
    def round_index(self) -> int:
        return len(self.picks_a) + 1

    def avec(self):
        return self.anchors_a + self.picks_a

    def bvec(self):
        return self.anchors_b + self.picks_b


def duplicator_move_plain(ctx: PlainPlusContext, side: str, pick) -> Fraction:
    """One strategy round: answer the spoiler's integer pick so that the
    conditions W(k-i) keep holding.

    With S the gapless combination values over the prior picks at level
    (l(k-i+1), c(k-i+1)) and mid = m(k-i): a pick within g(k-i+1) of some
    value v is answered by image(v) + (pick - v); otherwise the pick is
    bracketed by its neighbouring values and answered by the smallest
    integer strictly inside the image bracket shrunk by the gap bound,
    congruent to the pick mod mid.  Picks beyond every value are answered
    by shifting along the nearest value.
    """
    pick = as_point(pick)
    i = ctx.round_index
    if i > ctx.k:
        raise StrategyError("no rounds left")
    lp, cp = l_of(ctx.k - i + 1), c_of(ctx.k - i + 1)
    reach = g_of(ctx.k - i + 1)
    mid = m_of(ctx.k - i)
    g_prime = reach - Fraction(mid, 2)
    if side == "A":
        xs, ys = ctx.avec(), ctx.bvec()
    else:
        xs, ys = ctx.bvec(), ctx.avec()
    table, values = _paired_value_table(xs, ys, lp, cp)

    # exact or near hit: pick = v + f' with |f'| <= reach
    lo_i = bisect_left(values, pick - reach)
    hi_i = bisect_right(values, pick + reach)
    candidates = values[lo_i:hi_i]
    if candidates:
        answers = []
        for v in candidates:
            ans = table[v] + (pick - v)
            if ans.denominator != 1:
                raise StrategyError(
                    f"non-integer answer {ans}; congruence conditions violated")
            if (ans - pick) % mid != 0:
                raise StrategyError("answer breaks the congruence invariant")
            answers.append(ans)
        return min(answers)

    below_i = bisect_left(values, pick)   # values[:below_i] < pick
    if 0 < below_i < len(values):
        v_lo, v_hi = values[below_i - 1], values[below_i]
        lo, hi = table[v_lo] + g_prime, table[v_hi] - g_prime
        ans = _smallest_congruent_in(lo, hi, int(pick) % mid, mid)
        if ans is None:
            raise StrategyError(
                f"no integer in ({lo}, {hi}) with residue {int(pick) % mid} mod {mid}; "
                "the bracket transfer failed, so the preconditions were not met")
        return Fraction(ans)
    # beyond every combination value: shift along the nearest one
    v = values[0] if below_i == 0 else values[-1]
    return pick + (table[v] - v)


def plain_plus_agent(anchors_a, anchors_b, k: int) -> Agent:
    """Stateless duplicator agent: the context is rebuilt from the game
    history every round."""
    anchors_a = tuple(as_point(x) for x in anchors_a)
    anchors_b = tuple(as_point(x) for x in anchors_b)

    def answer(pos: GamePosition, side, pick):
        ctx = PlainPlusContext(k, anchors_a, anchors_b,
                               pos.chosen_a, pos.chosen_b)
        return duplicator_move_plain(ctx, side, pick)

    return Agent(role="duplicator", answer=answer, name="plus-plain")


# ---------------------------------------------------------------------------
# The full strategy over a distinguished set P
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlusRoundRecord:
    side: str
    pick: Fraction
    answer: Fraction
    virtual_added: tuple[tuple[Fraction, Fraction], ...]  # (A-point, B-point)
    case: str   # "anchor-hit", "value-hit", "bracket", "shift"


@dataclass
class PlusGameConfig:
    """Fixed data of one translated game: the finite P prefix, the anchors
    (all below min P, fixed by every correspondence), the two order-game
    structures over P, and the total number of rounds."""
    k: int
    p_set: tuple[Fraction, ...]
    anchors: tuple[Fraction, ...]
    small_a: OrderedStructure
    small_b: OrderedStructure
    budget: int = 2_000_000

    def __post_init__(self):
        self.p_set = tuple(sorted(as_point(x) for x in self.p_set))
        self.anchors = tuple(as_point(x) for x in self.anchors)
        if set(self.p_set) & set(self.anchors):
            raise ValueError("P and anchors must be disjoint")
        if self.anchors and self.p_set and max(self.anchors) >= min(self.p_set):
            raise ValueError("anchors must lie below the distinguished set")
        self._oracle = GameOracle(self.small_a, self.small_b, budget=10_000_000)

    def oracle(self) -> GameOracle:
        return self._oracle


@dataclass
class PlusContext:
    config: PlusGameConfig
    rounds: list = field(default_factory=list)

    @property
    def round_index(self) -> int:
        return len(self.rounds) + 1

    def picks(self, side: str) -> tuple:
        if side == "A":
            return tuple(r.pick if r.side == "A" else r.answer for r in self.rounds)
        return tuple(r.pick if r.side == "B" else r.answer for r in self.rounds)

    def virtual_pairs(self) -> tuple:
        out = []
        for r in self.rounds:
            out.extend(r.virtual_added)
        return tuple(out)

    def correspondence(self) -> dict:
        """The current pi_i as a dict (A-side point -> B-side point):
        anchors and small-game constants, virtual pairs, and picks."""
        cfg = self.config
        pi = {a: a for a in cfg.anchors}
        for name in cfg.small_a.signature.constants:
            pi[cfg.small_a.constant(name)] = cfg.small_b.constant(name)
        for pa, pb in self.virtual_pairs():
            pi[pa] = pb
        for ra in self.rounds:
            a_pt = ra.pick if ra.side == "A" else ra.answer
            b_pt = ra.answer if ra.side == "A" else ra.pick
            pi[a_pt] = b_pt
        return pi


def _plus_move(ctx: PlusContext, side: str, pick) -> PlusRoundRecord:
    """Compute one round of the distinguished-set strategy; pure function of
    the context (the caller appends the record)."""
    cfg = ctx.config
    pick = as_point(pick)
    i = ctx.round_index
    if i > cfg.k:
        raise StrategyError("no rounds left")
    lp, cp = l_of(cfg.k - i + 1), c_of(cfg.k - i + 1)
    reach = g_of(cfg.k - i + 1)
    mid = m_of(cfg.k - i)
    g_prime = reach - Fraction(mid, 2)

    pi = ctx.correspondence()
    if side == "A":
        fwd = dict(pi)
    else:
        fwd = {b: a for a, b in pi.items()}
    own_terms = tuple(sorted(set(cfg.p_set) | set(cfg.anchors) | set(ctx.picks(side))))
    p_both = set(cfg.p_set)

    table = _value_table(own_terms, lp, cp, budget=cfg.budget)
    values = sorted(table)
    virtual_added: list[tuple[Fraction, Fraction]] = []
    virtual_pairs = list(ctx.virtual_pairs())

    def ensure_virtual(points, depth_budget_start):
        """Feed unmapped P-terms to the order game; answers come from the
        minimax oracle at the decremented depth."""
        oracle = cfg.oracle()
        for idx, p in enumerate(sorted(points)):
            if p in fwd:
                continue
            rounds_left = depth_budget_start - len(virtual_added)
            if rounds_left < 1:
                raise StrategyError("virtual order-game round budget exhausted")
            q = oracle.best_answer(tuple(virtual_pairs), rounds_left,
                                   side, p)
            if q is None:
                raise StrategyError(
                    "virtual order-game duplicator loses; the caller did not "
                    "grant the required round budget r(k)")
            pair = (p, q) if side == "A" else (q, p)
            virtual_pairs.append(pair)
            virtual_added.append(pair)
            fwd[p] = q

    def image_value(combo: LinCombination) -> Fraction:
        return evaluate_combination(combo, lambda t: fwd[t])

    depth_start = rounds_for_translation(cfg.k - i + 1)

    # Case: the pick is itself a term (a P element, anchor, or earlier pick).
    if pick in own_terms:
        ensure_virtual([p for p in (pick,) if p in p_both], depth_start)
        answer = fwd[pick]
        return PlusRoundRecord(side, pick, answer, tuple(virtual_added), "anchor-hit")

    candidates = [v for v in values if abs(pick - v) <= reach]
    if candidates:
        # pick = v + f'; answer through the image combination
        chosen = min(candidates, key=lambda v: (abs(pick - v), v))
        combo = table[chosen]
        ensure_virtual([t for t in combo.refs() if t in p_both], depth_start)
        answer = image_value(combo) + (pick - chosen)
        if answer.denominator != 1 or (answer - pick) % mid != 0:
            raise StrategyError("value-hit answer breaks integrality/congruence; "
                                "the conditions W(k) did not hold")
        if answer in p_both:
            raise StrategyError("answer landed in P for a pick outside it; "
                                "the conditions W(k) did not hold")
        return PlusRoundRecord(side, pick, answer, tuple(virtual_added), "value-hit")

    below = [v for v in values if v < pick]
    above = [v for v in values if v > pick]
    if below and above:
        v_lo, v_hi = max(below), min(above)
        c_lo, c_hi = table[v_lo], table[v_hi]
        ensure_virtual([t for t in set(c_lo.refs()) | set(c_hi.refs())
                        if t in p_both], depth_start)
        lo = image_value(c_lo) + g_prime
        hi = image_value(c_hi) - g_prime
        ans = _smallest_congruent_in(lo, hi, int(pick) % mid, mid)
        if ans is None:
            raise StrategyError(
                f"no integer in ({lo}, {hi}) with the pick's residue mod {mid}")
        answer = Fraction(ans)
        if answer in p_both:
            raise StrategyError("bracket answer landed in P; conditions violated")
        return PlusRoundRecord(side, pick, answer, tuple(virtual_added), "bracket")

    v = max(below) if below else min(above)
    combo = table[v]
    ensure_virtual([t for t in combo.refs() if t in p_both], depth_start)
    answer = pick + (image_value(combo) - v)
    if answer.denominator != 1:
        raise StrategyError("shift answer is not an integer; conditions violated")
    if answer in p_both:
        raise StrategyError("shift answer landed in P; conditions violated")
    return PlusRoundRecord(side, pick, answer, tuple(virtual_added), "shift")


def duplicator_move_with_P(ctx: PlusContext, side: str, pick):
    """Answer one spoiler pick and append the round to the context."""
    record = _plus_move(ctx, side, pick)
    ctx.rounds.append(record)
    return record.answer


def plus_agent(config: PlusGameConfig) -> Agent:
    """Stateless duplicator for the distinguished-set game: the context is
    replayed from the match history each round, so repeated virtual answers
    stay consistent by construction."""

    def context_after(history) -> PlusContext:
        ctx = PlusContext(config)
        for r in history:
            duplicator_move_with_P(ctx, r.spoiler_side, r.spoiler_point)
        return ctx

    def answer(pos: GamePosition, side, pick):
        ctx = context_after(pos.history)
        return duplicator_move_with_P(ctx, side, pick)

    agent = Agent(role="duplicator", answer=answer, name="plus-with-P")
    agent.context_after = context_after  # inspection hook for the harnesses
    return agent


# ---------------------------------------------------------------------------
# Strategy invariants (the five per-round conditions)
# ---------------------------------------------------------------------------

@dataclass
class InvariantReport:
    ok: bool
    failed_condition: Optional[int] = None
    detail: Optional[str] = None

    def describe(self) -> str:
        if self.ok:
            return "PASS: conditions (1)-(5) hold"
        return f"FAIL: condition ({self.failed_condition}): {self.detail}"


def _pi_extensions(pi: dict, new_terms, p_set, budget=200_000):
    """Extensions of pi to `new_terms` (all in P) that stay strictly
    increasing on P and keep images inside P."""
    new_terms = sorted(t for t in new_terms if t not in pi)
    if not new_terms:
        yield pi
        return
    p_sorted = sorted(p_set)
    used = {v for k, v in pi.items() if k in p_set}
    mapped = sorted((k, v) for k, v in pi.items() if k in p_set)
    candidates = [v for v in p_sorted if v not in used]
    count = 0
    for image in itertools.combinations(candidates, len(new_terms)):
        ext = dict(zip(new_terms, image))
        merged = sorted(mapped + list(ext.items()))
        if all(merged[j][1] < merged[j + 1][1] for j in range(len(merged) - 1)):
            count += 1
            if count > budget:
                raise BudgetExceededError("too many correspondence extensions")
            yield pi | ext


def verify_strategy_invariants(ctx: PlusContext) -> InvariantReport:
    """Check the five invariants the distinguished-set strategy maintains.

    (1) the virtual order game is still winnable at depth r(k-i);
    (2) every round's pair is congruent mod m(k-round);
    (3) pi_i is a database-respecting correspondence;
    (4) single-pick order transfer against every admissible combination and
        every extension of pi_i;
    (5) pairwise combination order transfer at the next level's parameters.
    """
    cfg = ctx.config
    i = len(ctx.rounds)
    k = cfg.k

    # (1)
    oracle = cfg.oracle()
    if not oracle.duplicator_wins(rounds_for_translation(k - i),
                                  pairs=ctx.virtual_pairs()):
        return InvariantReport(False, 1, "virtual order game lost at depth "
                               f"r({k - i})")
    # (2)
    for nu, r in enumerate(ctx.rounds, start=1):
        a_pt = r.pick if r.side == "A" else r.answer
        b_pt = r.answer if r.side == "A" else r.pick
        mod = m_of(k - nu)
        if (a_pt - b_pt) % mod != 0:
            return InvariantReport(False, 2,
                                   f"round {nu}: {a_pt} != {b_pt} mod {mod}")
    # (3)
    pi = ctx.correspondence()
    p_both = set(cfg.p_set)
    items = sorted(pi.items())
    for (x1, y1), (x2, y2) in itertools.combinations(items, 2):
        if x1 in p_both and x2 in p_both and (x1 < x2) != (y1 < y2):
            return InvariantReport(False, 3, "not <-preserving on P")
    for x, y in items:
        if (x in p_both) != (y in p_both):
            return InvariantReport(False, 3, f"P membership broken at {x} -> {y}")
    for a in cfg.anchors:
        if pi.get(a) != a:
            return InvariantReport(False, 3, f"anchor {a} not fixed")
    for name in cfg.small_a.signature.relation_names:
        ra, rb = cfg.small_a.relation(name), cfg.small_b.relation(name)
        dom = [x for x in pi if x in p_both]
        ar = cfg.small_a.signature.arity(name)
        for t in itertools.product(dom, repeat=ar):
            if (t in ra) != (tuple(pi[x] for x in t) in rb):
                return InvariantReport(False, 3, f"relation {name} broken at {t}")
    # (4) and (5) share the enumeration over combinations and pi-extensions
    terms_before = tuple(sorted(set(cfg.p_set) | set(cfg.anchors)
                                | set(ctx.picks("A")[:max(i - 1, 0)])))
    if i >= 1:
        r = ctx.rounds[-1]
        a_i = r.pick if r.side == "A" else r.answer
        b_i = r.answer if r.side == "A" else r.pick
        lp, cp = l_of(k - i + 1), c_of(k - i + 1)
        gp = g_of(k - i + 1) - Fraction(m_of(k - i), 2)
        for combo in enumerate_combinations(terms_before, lp, cp, gp,
                                            budget=cfg.budget):
            new_p = [t for t in combo.refs() if t in p_both and t not in pi]
            for ext in _pi_extensions(pi, new_p, cfg.p_set):
                v = evaluate_combination(combo, lambda t: t)
                w = evaluate_combination(combo, lambda t: ext[t])
                if not order_transfer_ok(v - a_i, w - b_i, gp):
                    return InvariantReport(
                        False, 4,
                        f"pick {a_i}/{b_i} vs {_combination_blob(combo)}: "
                        f"deltas {v - a_i} / {w - b_i}, gap {gp}")
    if i != k:
        lp, cp, gp = l_of(k - i), c_of(k - i), g_of(k - i)
        terms_now = tuple(sorted(set(terms_before) | set(ctx.picks("A"))))
        combos = list(enumerate_combinations(terms_now, lp, cp, gp,
                                             budget=cfg.budget))
        for s1, s2 in itertools.product(combos, combos):
            new_p = [t for t in set(s1.refs()) | set(s2.refs())
                     if t in p_both and t not in pi]
            for ext in _pi_extensions(pi, new_p, cfg.p_set):
                v1 = evaluate_combination(s1, lambda t: t)
                v2 = evaluate_combination(s2, lambda t: t)
                w1 = evaluate_combination(s1, lambda t: ext[t])
                w2 = evaluate_combination(s2, lambda t: ext[t])
                if not order_transfer_ok(v2 - v1, w2 - w1, 2 * gp):
                    return InvariantReport(
                        False, 5,
                        f"{_combination_blob(s1)} vs {_combination_blob(s2)}: "
                        f"deltas {v2 - v1} / {w2 - w1}, gap {gp}")
    return InvariantReport(True)


# ---------------------------------------------------------------------------
# Translation: order game -> addition game
# ---------------------------------------------------------------------------

def translate_strategy_plus(a: OrderedStructure, b: OrderedStructure, k: int,
                            qset: Sequence[int],
                            budget: int = 2_000_000):
    """Relocate two databases onto a self-similar set and return a duplicator
    for the addition game.

    Checks the order-game precondition at depth r(k) with the oracle, embeds
    the j-th smallest active-domain elements onto the j-th usable element of
    `qset` past the k-element anchor prefix, and returns (alpha, beta, agent,
    config)."""
    small_a = database_order_structure(a)
    small_b = database_order_structure(b)
    r_needed = rounds_for_translation(k)
    if not GameOracle(small_a, small_b).duplicator_wins(r_needed):
        raise PreconditionError(
            f"active domains are distinguishable in {r_needed} rounds")
    qset = [int(q) for q in qset]
    if sorted(qset) != qset or len(set(qset)) != len(qset):
        raise ValueError("qset must be strictly increasing")
    anchors = tuple(sorted({as_point(0), *map(as_point, qset[:k])}))
    p_set = tuple(as_point(q) for q in qset[k:])
    need = max(len(active_domain(a)), len(active_domain(b)))
    if len(p_set) < need:
        raise PreconditionError(
            f"qset prefix too short: need {need} positions past the anchors")
    alpha = jth_smallest_embedding(active_domain(a), p_set)
    beta = jth_smallest_embedding(active_domain(b), p_set)
    from .structures import apply_embedding
    emb_a = apply_embedding(small_a, alpha, universe=p_set)
    emb_b = apply_embedding(small_b, beta, universe=p_set)
    config = PlusGameConfig(k=k, p_set=p_set, anchors=anchors,
                            small_a=emb_a, small_b=emb_b, budget=budget)
    return alpha, beta, plus_agent(config), config


def plus_game_structures(config: PlusGameConfig, margin: int = 4):
    """The two window structures <Z, <, +, Q, anchors, embedded tau> the
    translated game is played on; the window covers every combination value
    the first round can reference."""
    lp, cp = l_of(config.k), c_of(config.k)
    terms = tuple(sorted(set(config.p_set) | set(config.anchors)))
    extreme = max((abs(v) for v in _value_table(terms, lp, cp,
                                                budget=config.budget)),
                  default=Fraction(0))
    bound = math.ceil(extreme + g_of(config.k) + m_of(config.k)) + margin
    window = Window(-bound, bound)
    qpts = tuple(sorted(set(config.p_set) | set(config.anchors)))

    def build(small: OrderedStructure) -> OrderedStructure:
        consts = dict(small.constants)
        consts.update({f"q{i}": a for i, a in enumerate(config.anchors)})
        return make_structure(
            window,
            constants=consts,
            relations={n: list(small.relation(n))
                       for n in small.signature.relation_names},
            monadic={"Q": qpts},
            addition=True)

    return build(config.small_a), build(config.small_b)


def relevant_integer_picks(values: Iterable[Fraction], lo: int, hi: int,
                           mid: int = 2) -> list[Fraction]:
    """Exhaustive spoiler move set for a window sweep: the integers around
    every combination value, `mid` consecutive integers inside every gap
    (one per residue class), and the window edges."""
    values = sorted(set(values))
    picks = set()
    for v in values:
        fl = math.floor(v)
        picks.update(range(fl - 1, fl + 3))
    for u, v in zip(values, values[1:]):
        start = math.floor((u + v) / 2)
        picks.update(range(start, start + max(mid, 1)))
    if values:
        picks.update(range(math.floor(values[0]) - 3, math.floor(values[0]) - 1))
        picks.update(range(math.ceil(values[-1]) + 1, math.ceil(values[-1]) + 3))
    picks.add(lo)
    picks.add(hi)
    return [Fraction(p) for p in sorted(picks) if lo <= p <= hi]


# ---------------------------------------------------------------------------
# Rational lifting
# ---------------------------------------------------------------------------

def lift_to_rationals(inner: Agent) -> Agent:
    """Wrap an integer-game duplicator for play over the rationals: a pick
    a = floor(a) + f is forwarded as floor(a) and the inner answer b' comes
    back as b' + f.  Integer picks therefore get integer answers, and more
    generally membership in any additive group containing 1 is preserved.
    The inner agent must derive its state from the game history only; the
    history it sees is the floored one."""

    def floored(history):
        return tuple(Round(r.spoiler_side,
                           Fraction(math.floor(r.spoiler_point)),
                           Fraction(math.floor(r.duplicator_point)))
                     for r in history)

    def answer(pos: GamePosition, side, pick):
        pick = as_point(pick)
        base = Fraction(math.floor(pick))
        frac = pick - base
        inner_pos = GamePosition(pos.a, pos.b, floored(pos.history),
                                 pos.rounds_left, pos.move_budget)
        reply = as_point(inner.answer(inner_pos, side, base))
        return reply + frac

    return Agent(role="duplicator", answer=answer,
                 name=f"rational-lift({inner.name})")


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumCertificate:
    """Membership of 1..nmax plus the empirical and the guaranteed
    periodicity data.  empirical_period == 0 means no eventual period was
    observable within nmax."""
    bits: tuple[bool, ...]
    nmax: int
    qdepth: int
    n0: Fraction          # guaranteed preperiod bound 2 g(k) c(k)^2
    period_bound: int     # guaranteed period m(k)
    empirical_preperiod: int
    empirical_period: int

    def member(self, n: int) -> bool:
        return self.bits[n - 1]


def compute_spectrum(phi: Formula, nmax: int, budget: int = 50_000_000) -> SpectrumCertificate:
    """Evaluate a {<,+}-sentence on <{0..N}, <, +> for N = 1..nmax and scan
    for the minimal empirical (preperiod, period) pair with at least two
    full periods of evidence."""
    k = max(quantifier_depth(phi), 1)
    if (nmax + 1) ** k * nmax > budget:
        raise BudgetExceededError("nmax too large for the evaluation budget")
    bits = []
    for n in range(1, nmax + 1):
        s = make_structure(range(0, n + 1), addition=True)
        bits.append(evaluate(phi, s))
    bits = tuple(bits)
    pre, per = _eventual_period(bits)
    return SpectrumCertificate(
        bits=bits, nmax=nmax, qdepth=k,
        n0=2 * g_of(k) * c_of(k) ** 2, period_bound=m_of(k),
        empirical_preperiod=pre, empirical_period=per)


def _eventual_period(bits: tuple[bool, ...]):
    """Minimal (preperiod, period) visible in bits (1-indexed membership);
    (nmax, 0) when nothing qualifies with two periods of evidence."""
    nmax = len(bits)

    def member(n):
        return bits[n - 1]

    for p in range(1, nmax // 2 + 1):
        largest_bad = 0
        for n in range(nmax - p, 0, -1):
            if member(n) != member(n + p):
                largest_bad = n
                break
        if largest_bad + 2 * p <= nmax:
            return largest_bad, p
    return nmax, 0


def check_semilinear(cert: SpectrumCertificate) -> bool:
    """True iff the certificate exhibits an eventual period that divides the
    guaranteed period and starts no later than the guaranteed preperiod."""
    if cert.empirical_period == 0:
        return False
    if cert.nmax <= cert.empirical_preperiod + 2 * cert.empirical_period:
        raise ValueError("insufficient nmax for the recorded period")
    p, n0 = cert.empirical_period, cert.empirical_preperiod
    for n in range(n0 + 1, cert.nmax - p + 1):
        if cert.member(n) != cert.member(n + p):
            return False
    return (cert.period_bound % p == 0) and (Fraction(n0) <= cert.n0)
