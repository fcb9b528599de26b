"""Ehrenfeucht-Fraisse games: match play, the exhaustive oracle, and types.

Two game variants are supported on a shared winning condition (the final
map, chosen pairs plus constants, must be a partial isomorphism):

* the classical r-round game, where spoiler and duplicator alternate one
  point per round, and
* the single-round r-move game, where the spoiler commits r points at once
  and the duplicator answers r points at once.

`GameOracle` decides both variants by exhaustive minimax search with
memoization and is the ground truth every strategy in this package is
checked against.  Positions are memoized by the canonical (sorted) tuple of
chosen pairs plus rounds left; pick order never affects the winning
condition, so this is a lossless collapse of the search space.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import BudgetExceededError, StrategyError
from .structures import (OrderedStructure, PartialMap, Point, Window,
                         as_point, is_partial_isomorphism)

DEFAULT_BUDGET = 10_000_000


@dataclass(frozen=True)
class Round:
    spoiler_side: str       # "A" or "B"
    spoiler_point: Point
    duplicator_point: Point


@dataclass(frozen=True)
class GamePosition:
    """State between rounds; `history` is the full record so that stateless
    agents can replay their own reasoning."""
    a: OrderedStructure
    b: OrderedStructure
    history: tuple[Round, ...]
    rounds_left: int
    move_budget: int = 0    # single-round variant only

    @property
    def chosen_a(self) -> tuple[Point, ...]:
        return tuple(r.spoiler_point if r.spoiler_side == "A" else r.duplicator_point
                     for r in self.history)

    @property
    def chosen_b(self) -> tuple[Point, ...]:
        return tuple(r.spoiler_point if r.spoiler_side == "B" else r.duplicator_point
                     for r in self.history)


@dataclass
class Agent:
    """A decision procedure for one role.

    Spoiler: choose(position) -> (side, point); duplicator:
    answer(position, side, point) -> point.  For the single-round game the
    callables produce and consume tuples of points instead.
    """
    role: str
    choose: Optional[Callable] = None
    answer: Optional[Callable] = None
    name: str = ""


@dataclass(frozen=True)
class GameTranscript:
    rounds: tuple[Round, ...]
    duplicator_won: bool
    final_map: Optional[PartialMap]
    forfeit: Optional[str] = None   # "spoiler" / "duplicator" when an agent failed

    def to_json_dict(self) -> dict:
        from .structures import format_point
        return {
            "rounds": [
                {"round": i + 1, "spoiler_side": r.spoiler_side,
                 "spoiler": format_point(r.spoiler_point),
                 "duplicator": format_point(r.duplicator_point)}
                for i, r in enumerate(self.rounds)],
            "verdict": "duplicator" if self.duplicator_won else "spoiler",
            "forfeit": self.forfeit,
            "final_map": None if self.final_map is None else
                [[format_point(x), format_point(y)] for x, y in self.final_map.pairs],
        }


def constant_pairs(a: OrderedStructure, b: OrderedStructure) -> tuple:
    return tuple((a.constant(n), b.constant(n)) for n in a.signature.constants)


def final_verdict(a, b, pairs) -> tuple[bool, Optional[PartialMap]]:
    """Winning condition on the chosen pairs plus constants."""
    all_pairs = set(constant_pairs(a, b)) | set(pairs)
    sources = [x for x, _ in all_pairs]
    targets = [y for _, y in all_pairs]
    if len(set(sources)) != len(all_pairs) or len(set(targets)) != len(all_pairs):
        return False, None
    m = PartialMap(tuple(all_pairs))
    return is_partial_isomorphism(a, b, m), m


def play_ef_game(a: OrderedStructure, b: OrderedStructure, r: int,
                 spoiler: Agent, duplicator: Agent) -> GameTranscript:
    """Run the classical r-round game; agent failures become forfeits."""
    if a.signature != b.signature:
        raise ValueError("structures do not share a signature")
    history: tuple[Round, ...] = ()
    for i in range(r):
        pos = GamePosition(a, b, history, rounds_left=r - i)
        try:
            side, pick = spoiler.choose(pos)
            pick = as_point(pick)
            if pick not in (a if side == "A" else b):
                raise StrategyError(f"spoiler point {pick} outside universe {side}")
        except StrategyError:
            return GameTranscript(history, True, None, forfeit="spoiler")
        try:
            reply = as_point(duplicator.answer(pos, side, pick))
            if reply not in (b if side == "A" else a):
                raise StrategyError(f"duplicator point {reply} outside universe")
        except StrategyError:
            return GameTranscript(history, False, None, forfeit="duplicator")
        history += (Round(side, pick, reply),)
    pairs = tuple(zip(GamePosition(a, b, history, 0).chosen_a,
                      GamePosition(a, b, history, 0).chosen_b))
    won, m = final_verdict(a, b, pairs)
    return GameTranscript(history, won, m)


def play_single_round_game(a, b, r: int, spoiler: Agent,
                           duplicator: Agent) -> GameTranscript:
    """Single-round variant: r spoiler points at once, r answers at once."""
    if a.signature != b.signature:
        raise ValueError("structures do not share a signature")
    pos = GamePosition(a, b, (), rounds_left=1, move_budget=r)
    try:
        side, picks = spoiler.choose(pos)
        picks = tuple(as_point(p) for p in picks)
        if len(picks) != r:
            raise StrategyError(f"spoiler must pick exactly {r} points")
        src = a if side == "A" else b
        if any(p not in src for p in picks):
            raise StrategyError("spoiler point outside universe")
    except StrategyError:
        return GameTranscript((), True, None, forfeit="spoiler")
    try:
        replies = tuple(as_point(p) for p in duplicator.answer(pos, side, picks))
        if len(replies) != r:
            raise StrategyError("duplicator must answer the same number of points")
        tgt = b if side == "A" else a
        if any(p not in tgt for p in replies):
            raise StrategyError("duplicator point outside universe")
    except StrategyError:
        return GameTranscript((), False, None, forfeit="duplicator")
    rounds = tuple(Round(side, p, q) for p, q in zip(picks, replies))
    if side == "A":
        pairs = tuple(zip(picks, replies))
    else:
        pairs = tuple(zip(replies, picks))
    won, m = final_verdict(a, b, pairs)
    return GameTranscript(rounds, won, m)


# ---------------------------------------------------------------------------
# Extension checks (incremental winning condition)
# ---------------------------------------------------------------------------

def extend_ok(a: OrderedStructure, b: OrderedStructure, pairs, p: Point,
              q: Point) -> bool:
    """Can (p, q) be added to an already-consistent pair set?

    Checks only the atoms that involve the new pair; with `pairs` already a
    partial isomorphism this is equivalent to re-checking everything.
    """
    lookup = dict(pairs)
    rev = {y: x for x, y in pairs}
    if p in lookup:
        return lookup[p] == q
    if q in rev:
        return False
    sig = a.signature
    if sig.order:
        for x, y in pairs:
            if (p < x) != (q < y) or (x < p) != (y < q):
                return False
    for name in sig.monadic:
        if (p in a.monadic_set(name)) != (q in b.monadic_set(name)):
            return False
    lookup = dict(pairs) | {p: q}
    dom = list(lookup)
    for name in sig.relation_names:
        ar = sig.arity(name)
        ra, rb = a.relation(name), b.relation(name)
        for t in itertools.product(dom, repeat=ar):
            if p not in t:
                continue
            if (t in ra) != (tuple(lookup[x] for x in t) in rb):
                return False
    if sig.addition:
        for x in dom:
            for y in dom:
                for z in dom:
                    if p not in (x, y, z):
                        continue
                    if (x + y == z) != (lookup[x] + lookup[y] == lookup[z]):
                        return False
    return True


# ---------------------------------------------------------------------------
# The exhaustive oracle
# ---------------------------------------------------------------------------

def relevant_window_points(s: OrderedStructure, extra=()) -> list[Point]:
    """Restricted move set for window universes: constants, relation and
    predicate members, already-chosen points, their one-step sum/difference
    closure, and one representative inside every remaining gap.  Purely an
    efficiency device; `restrict=False` disables it for validation."""
    w = s.universe
    assert isinstance(w, Window)
    base = {p for _, p in s.constants}
    for _, pts in s.monadic:
        base.update(pts)
    for _, tuples in s.relations:
        for t in tuples:
            base.update(t)
    base.update(as_point(p) for p in extra)
    base = {p for p in base if p in w}
    if s.signature.addition:
        closure = set(base)
        for x in base:
            for y in base:
                for v in (x + y, x - y, y - x):
                    if v in w:
                        closure.add(v)
            if (x / 2).denominator == 1 and x / 2 in w:
                closure.add(x / 2)
        base = closure
    base.add(Fraction(w.lo))
    base.add(Fraction(w.hi))
    pts = sorted(base)
    gaps = []
    for u, v in zip(pts, pts[1:]):
        mid = (u + v) // 2
        if u < mid < v:
            gaps.append(Fraction(mid))
    return sorted(set(pts) | set(gaps))


class GameOracle:
    """Exhaustive minimax decision of both game variants on a fixed pair of
    finite structures, with agents extracted from the winning strategy."""

    def __init__(self, a: OrderedStructure, b: OrderedStructure,
                 budget: int = DEFAULT_BUDGET, restrict_windows: bool = True):
        if a.signature != b.signature:
            raise ValueError("structures do not share a signature")
        self.a = a
        self.b = b
        self.budget = budget
        self.nodes = 0
        self.restrict_windows = restrict_windows
        self._memo: dict = {}
        self._const = constant_pairs(a, b)
        ok, _ = final_verdict(a, b, ())
        self._constants_consistent = ok

    def _spend(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceededError(
                f"oracle exceeded {self.budget} nodes; raise the budget or shrink the instance")

    def moves(self, side: str, pairs) -> list[Point]:
        s = self.a if side == "A" else self.b
        if isinstance(s.universe, Window) and self.restrict_windows:
            chosen = [x for x, _ in pairs] if side == "A" else [y for _, y in pairs]
            return relevant_window_points(s, extra=chosen)
        return s.points()

    def _all_pairs(self, pairs):
        return self._const + tuple(pairs)

    def duplicator_wins(self, r: int, pairs=()) -> bool:
        """True iff the duplicator survives r more rounds from `pairs`
        (which must already satisfy the winning condition)."""
        if not self._constants_consistent:
            return False
        return self._wins(tuple(sorted(pairs)), r)

    def _wins(self, pairs, rounds_left) -> bool:
        if rounds_left == 0:
            return True
        key = (pairs, rounds_left)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        self._spend()
        result = True
        for side in ("A", "B"):
            for pick in self.moves(side, pairs):
                if self._best_answers(pairs, rounds_left, side, pick, first_only=True):
                    continue
                result = False
                break
            if not result:
                break
        self._memo[key] = result
        return result

    def _best_answers(self, pairs, rounds_left, side, pick, first_only=False):
        """Winning duplicator answers in ascending order."""
        pick = as_point(pick)
        out = []
        other = "B" if side == "A" else "A"
        for q in self.moves(other, pairs):
            p_ab = (pick, q) if side == "A" else (q, pick)
            if not extend_ok(self.a, self.b, self._all_pairs(pairs), *p_ab):
                continue
            if self._wins(tuple(sorted(pairs + (p_ab,))), rounds_left - 1):
                out.append(q)
                if first_only:
                    return out
        return out

    def best_answer(self, pairs, rounds_left, side, pick) -> Optional[Point]:
        """Smallest winning answer to `pick`, or None (ties break low so
        transcripts are reproducible)."""
        answers = self._best_answers(tuple(sorted(pairs)), rounds_left, side, pick)
        return answers[0] if answers else None

    # -- extracted match-play agents ------------------------------------

    def extract_duplicator(self, r: int) -> Agent:
        def answer(pos: GamePosition, side, pick):
            pairs = tuple(zip(pos.chosen_a, pos.chosen_b))
            q = self.best_answer(pairs, pos.rounds_left, side, pick)
            if q is None:
                raise StrategyError("no winning duplicator answer")
            return q
        return Agent(role="duplicator", answer=answer, name="minimax-duplicator")

    def extract_spoiler(self, r: int) -> Agent:
        def choose(pos: GamePosition):
            pairs = tuple(sorted(zip(pos.chosen_a, pos.chosen_b)))
            for side in ("A", "B"):
                for pick in self.moves(side, pairs):
                    if not self._best_answers(pairs, pos.rounds_left, side, pick,
                                              first_only=True):
                        return side, pick
            return "A", self.moves("A", pairs)[0]  # no winning move; play on
        return Agent(role="spoiler", choose=choose, name="minimax-spoiler")

    # -- single-round variant -------------------------------------------

    def _distinct_sorted(self, picks):
        return tuple(sorted(set(picks)))

    def duplicator_answer_single(self, side: str, picks) -> Optional[tuple]:
        """An answer tuple to a single-round spoiler choice, or None.

        The answer is determined by an order/atom-preserving image of the
        distinct picks; backtracking over candidates in ascending order
        yields the lexicographically smallest valid answer.
        """
        picks = tuple(as_point(p) for p in picks)
        if not self._constants_consistent:
            return None
        distinct = self._distinct_sorted(picks)
        src, tgt = (self.a, self.b) if side == "A" else (self.b, self.a)
        const = self._const if side == "A" else tuple((y, x) for x, y in self._const)

        def swap(p, q):
            return (p, q) if side == "A" else (q, p)

        candidates = tgt.points()

        def backtrack(i, pairs, acc):
            if i == len(distinct):
                return dict(acc)
            p = distinct[i]
            for q in candidates:
                p_ab = swap(p, q)
                if extend_ok(self.a, self.b, self._all_pairs(pairs), *p_ab):
                    res = backtrack(i + 1, pairs + (p_ab,), acc + [(p, q)])
                    if res is not None:
                        return res
            return None

        image = backtrack(0, (), [])
        if image is None:
            return None
        return tuple(image[p] for p in picks)

    def single_round_wins(self, r: int) -> bool:
        """Exhaustive decision of the single-round r-move game."""
        if not self._constants_consistent:
            return False
        for side in ("A", "B"):
            src = self.a if side == "A" else self.b
            pts = src.points()
            if isinstance(src.universe, Window) and self.restrict_windows:
                pts = relevant_window_points(src)
            for picks in itertools.combinations_with_replacement(pts, r):
                self._spend()
                if self.duplicator_answer_single(side, picks) is None:
                    return False
        return True

    def extract_single_round_duplicator(self, r: int) -> Agent:
        def answer(pos: GamePosition, side, picks):
            reply = self.duplicator_answer_single(side, picks)
            if reply is None:
                raise StrategyError("no winning single-round answer")
            return reply
        return Agent(role="duplicator", answer=answer, name="single-round-minimax")


def duplicator_wins_oracle(a, b, r: int, budget: int = DEFAULT_BUDGET,
                           restrict_windows: bool = True) -> bool:
    return GameOracle(a, b, budget, restrict_windows).duplicator_wins(r)


def single_round_oracle(a, b, r: int, budget: int = DEFAULT_BUDGET,
                        restrict_windows: bool = True) -> bool:
    return GameOracle(a, b, budget, restrict_windows).single_round_wins(r)


# ---------------------------------------------------------------------------
# Canonical k-types
# ---------------------------------------------------------------------------

def _atomic_diagram(s: OrderedStructure, pts: tuple) -> tuple:
    """Value-free description of the constants followed by pts: order and
    equality pattern, relation/monadic membership, and (when + is active)
    the addition triples.  Two structures get equal diagrams exactly when
    the induced correspondence of their tagged points is a partial
    isomorphism."""
    tagged = tuple(p for _, p in s.constants) + tuple(pts)
    n = len(tagged)
    sig = s.signature
    facts = []
    for i in range(n):
        for j in range(n):
            if i < j or (i != j and not sig.order):
                if tagged[i] == tagged[j]:
                    facts.append(("eq", i, j))
            if sig.order and tagged[i] < tagged[j]:
                facts.append(("lt", i, j))
    for name in sig.monadic:
        members = s.monadic_set(name)
        for i in range(n):
            if tagged[i] in members:
                facts.append(("mon", name, i))
    for name in sig.relation_names:
        rel = s.relation(name)
        for idx in itertools.product(range(n), repeat=sig.arity(name)):
            if tuple(tagged[i] for i in idx) in rel:
                facts.append(("rel", name) + idx)
    if sig.addition:
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if tagged[i] + tagged[j] == tagged[k]:
                        facts.append(("plus", i, j, k))
    return tuple(sorted(facts))


class _TypeBudget:
    def __init__(self, budget):
        self.budget = budget
        self.nodes = 0

    def spend(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceededError("k_type exceeded its node budget")


def k_type(s: OrderedStructure, k: int, budget: int = DEFAULT_BUDGET) -> str:
    """Canonical identifier of s's k-round game class (constants are the
    distinguished points).  Equal identifiers coincide with oracle
    equivalence: the type is the atomic diagram together with the set of
    (k-1)-types of all one-point extensions, hashed level by level."""
    counter = _TypeBudget(budget)
    points = s.points()
    memo: dict = {}

    def tp(pts: tuple, depth: int) -> str:
        key = (pts, depth)
        hit = memo.get(key)
        if hit is not None:
            return hit
        counter.spend()
        diagram = repr(_atomic_diagram(s, pts))
        if depth == 0:
            payload = "0|" + diagram
        else:
            children = sorted({tp(pts + (p,), depth - 1) for p in points})
            payload = f"{depth}|{diagram}|" + ",".join(children)
        digest = hashlib.sha256(payload.encode()).hexdigest()[:32]
        memo[key] = digest
        return digest

    return tp((), k)


# ---------------------------------------------------------------------------
# Adversary sweeps (strategy validation harnesses)
# ---------------------------------------------------------------------------

def sweep_all_spoiler_plays(a, b, r: int, duplicator: Agent,
                            moves_a=None, moves_b=None):
    """Play the duplicator against every spoiler move sequence; returns the
    first losing transcript or None.  `moves_*` restrict the sweep (default:
    full universes, or the relevant points of a window)."""
    if moves_a is None:
        moves_a = (relevant_window_points(a) if isinstance(a.universe, Window)
                   else a.points())
    if moves_b is None:
        moves_b = (relevant_window_points(b) if isinstance(b.universe, Window)
                   else b.points())

    def rec(history):
        if len(history) == r:
            pairs = tuple(zip(GamePosition(a, b, history, 0).chosen_a,
                              GamePosition(a, b, history, 0).chosen_b))
            won, m = final_verdict(a, b, pairs)
            if not won:
                return GameTranscript(history, False, m)
            return None
        pos = GamePosition(a, b, history, rounds_left=r - len(history))
        for side, moves in (("A", moves_a), ("B", moves_b)):
            for pick in moves:
                try:
                    reply = as_point(duplicator.answer(pos, side, as_point(pick)))
                except StrategyError:
                    return GameTranscript(history, False, None, forfeit="duplicator")
                bad = rec(history + (Round(side, as_point(pick), reply),))
                if bad is not None:
                    return bad
        return None

    return rec(())
