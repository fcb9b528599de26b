"""Uniform-position extraction and the strategies built on it.

Two translations live here, both of the same shape: relocate the active
domains onto "special positions" chosen so that the surrounding context
looks the same everywhere, then split the game into a virtual order game on
the positions plus local games or type realizations around them.

* The monadic translation plays the classical k-round game over a context
  of unary predicates; the special positions are chosen so that all
  consecutive intervals share one interval k-type.
* The single-round translation works for arbitrary predicates; the special
  positions are chosen so that every h-element subset realizes the same set
  of complete atomic types, and answers are produced in one shot by
  realizing the spoiler tuple's type next to the virtual answers.

At desk scale the extractors search a finite window instead of invoking an
infinite Ramsey argument: the monadic extractor only guarantees equal
*consecutive* interval types (all the strategy consumes), and the
single-round extractor verifies subset colors exhaustively for pairs and by
sampling above that.  Extraction failures raise instead of degrading.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import ExtractionError, PreconditionError, StrategyError
from .games import Agent, GameOracle, GamePosition, k_type
from .structures import (OrderedStructure, PartialMap, Point, Window,
                         active_domain, as_point, database_order_structure,
                         jth_smallest_embedding, make_structure)


@dataclass(frozen=True)
class MonadicContext:
    """A window plus finitely many unary context predicates."""
    window: Window
    predicates: tuple[tuple[str, frozenset], ...]

    @staticmethod
    def of(window: Window, predicates) -> "MonadicContext":
        preds = tuple(sorted(
            (name, frozenset(as_point(p) for p in pts if as_point(p) in window))
            for name, pts in dict(predicates).items()))
        return MonadicContext(window, preds)

    def predicate_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.predicates)

    def membership_mask(self, p: Point) -> tuple[bool, ...]:
        return tuple(p in pts for _, pts in self.predicates)


@dataclass(frozen=True)
class SpecialPositions:
    cuts: tuple[Point, ...]
    kind: str                        # "monadic" | "single-round"
    interval_type: Optional[str] = None
    colors: tuple = ()               # (h, color) pairs for the single-round kind


# ---------------------------------------------------------------------------
# Interval types and the monadic extractor
# ---------------------------------------------------------------------------

def interval_structure(ctx: MonadicContext, lo, hi) -> OrderedStructure:
    """The substructure on [lo, hi) with lo as a distinguished constant."""
    lo, hi = as_point(lo), as_point(hi)
    pts = [Fraction(n) for n in range(int(lo), min(int(hi), ctx.window.hi + 1))]
    return make_structure(
        pts, constants={"left": lo},
        monadic={name: [p for p in pts if p in members]
                 for name, members in ctx.predicates})


def interval_k_type(ctx: MonadicContext, lo, hi, k: int,
                    _cache: Optional[dict] = None) -> str:
    """k-type of <[lo,hi), lo, <, predicates>.  Types are shift-invariant,
    so they are cached by the interval's predicate word."""
    lo, hi = int(lo), int(hi)
    if lo >= hi:
        raise ValueError("interval must be nonempty")
    word = tuple(ctx.membership_mask(Fraction(n))
                 for n in range(lo, min(hi, ctx.window.hi + 1)))
    if _cache is not None and (word, k) in _cache:
        return _cache[(word, k)]
    t = k_type(interval_structure(ctx, lo, hi), k)
    if _cache is not None:
        _cache[(word, k)] = t
    return t


def find_uniform_positions_monadic(ctx: MonadicContext, k: int,
                                   needed: int) -> SpecialPositions:
    """Cuts p_1 < ... < p_needed inside the window such that every
    consecutive interval [p_j, p_{j+1}) has one shared k-type, and so does
    the tail interval [p_needed, hi+1) that guards picks beyond the last
    cut.  Greedy scan over starting pairs; raises with the best count found
    when the window is exhausted."""
    cache: dict = {}
    lo, hi = ctx.window.lo, ctx.window.hi
    best = 0
    for p1 in range(lo, hi):
        for p2 in range(p1 + 1, hi + 1):
            target = interval_k_type(ctx, p1, p2, k, cache)
            cuts = [p1, p2]
            while len(cuts) < needed:
                nxt = None
                for q in range(cuts[-1] + 1, hi + 2):
                    if interval_k_type(ctx, cuts[-1], q, k, cache) == target:
                        nxt = q
                        break
                if nxt is None or nxt > hi:
                    break
                cuts.append(nxt)
            best = max(best, len(cuts))
            if len(cuts) < needed:
                continue
            # tail guard: everything at or above the last cut must still
            # look like the shared interval type
            if interval_k_type(ctx, cuts[-1], hi + 1, k, cache) == target:
                return SpecialPositions(tuple(Fraction(c) for c in cuts),
                                        "monadic", interval_type=target)
    raise ExtractionError(
        f"window exhausted: needed {needed} uniform cuts, found {best}",
        found=best)


# ---------------------------------------------------------------------------
# The monadic translation
# ---------------------------------------------------------------------------

@dataclass
class MonadicGameConfig:
    k: int
    ctx: MonadicContext
    positions: SpecialPositions
    small_a: OrderedStructure    # <P, <, alpha(tau)>
    small_b: OrderedStructure
    budget: int = 10_000_000

    def __post_init__(self):
        self._virtual_oracle = GameOracle(self.small_a, self.small_b,
                                          budget=self.budget)
        self._interval_oracles: dict = {}

    @property
    def cuts(self):
        return self.positions.cuts

    def interval_bounds(self, j: int) -> tuple[int, int]:
        """[p_j, p_{j+1}) for inner intervals; the tail interval runs to the
        window top."""
        cuts = self.cuts
        if j < len(cuts) - 1:
            return int(cuts[j]), int(cuts[j + 1])
        return int(cuts[-1]), self.ctx.window.hi + 1

    def interval_oracle(self, ja: int, jb: int) -> GameOracle:
        key = (ja, jb)
        if key not in self._interval_oracles:
            ia = interval_structure(self.ctx, *self.interval_bounds(ja))
            ib = interval_structure(self.ctx, *self.interval_bounds(jb))
            self._interval_oracles[key] = GameOracle(ia, ib, budget=self.budget)
        return self._interval_oracles[key]


def monadic_game_structures(config: MonadicGameConfig):
    """The full-window structures <U, <, Mon', alpha(tau)> and its b-side."""
    def build(small: OrderedStructure) -> OrderedStructure:
        return make_structure(
            config.ctx.window,
            constants=dict(small.constants),
            relations={n: list(small.relation(n))
                       for n in small.signature.relation_names},
            monadic={name: sorted(members)
                     for name, members in config.ctx.predicates})
    return build(config.small_a), build(config.small_b)


def translate_strategy_monadic(a: OrderedStructure, b: OrderedStructure,
                               k: int, ctx: MonadicContext,
                               budget: int = 10_000_000):
    """Relocate two databases onto uniform positions of a monadic context.

    Precondition (oracle-checked, depth k+1): the active-domain order
    structures are game-equivalent.  Returns (alpha, beta, agent, config);
    the agent answers below-p1 picks identically and everything else through
    the virtual order game plus the local interval games.
    """
    small_a = database_order_structure(a)
    small_b = database_order_structure(b)
    if not GameOracle(small_a, small_b).duplicator_wins(k + 1):
        raise PreconditionError(
            f"active domains are distinguishable in {k + 1} rounds")
    need = max(len(active_domain(a)), len(active_domain(b)))
    positions = find_uniform_positions_monadic(ctx, k, max(need, 2))
    alpha = jth_smallest_embedding(active_domain(a), positions.cuts)
    beta = jth_smallest_embedding(active_domain(b), positions.cuts)
    from .structures import apply_embedding
    emb_a = apply_embedding(small_a, alpha, universe=positions.cuts)
    emb_b = apply_embedding(small_b, beta, universe=positions.cuts)
    config = MonadicGameConfig(k=k, ctx=ctx, positions=positions,
                               small_a=emb_a, small_b=emb_b, budget=budget)
    return alpha, beta, monadic_agent(config), config


@dataclass
class _MonadicState:
    virtual_pairs: list          # cut-level pairs of the order game
    interval_picks: dict         # (ja, jb) -> list of (a_point, b_point)
    rounds_done: int


def _monadic_replay(config: MonadicGameConfig, history) -> _MonadicState:
    state = _MonadicState([], {}, 0)
    for r in history:
        _monadic_answer(config, state, r.spoiler_side, r.spoiler_point)
    return state


def _cut_index(config: MonadicGameConfig, p: Point) -> Optional[int]:
    """Index j with p in [p_j, p_{j+1}) (tail included); None below p_1."""
    cuts = config.cuts
    if p < cuts[0]:
        return None
    j = 0
    for idx, c in enumerate(cuts):
        if p >= c:
            j = idx
    return j


def _monadic_answer(config: MonadicGameConfig, state: _MonadicState,
                    side: str, pick) -> Point:
    pick = as_point(pick)
    i = state.rounds_done + 1
    if i > config.k:
        raise StrategyError("no rounds left")
    depth = config.k - i + 1
    cuts = config.cuts

    if pick < cuts[0]:
        state.rounds_done = i
        return pick  # identical answer below the first special position

    j = _cut_index(config, pick)
    # forward the interval's representative to the virtual order game
    oracle = config._virtual_oracle
    virt_pick = cuts[j]
    answer_cut = oracle.best_answer(tuple(state.virtual_pairs), depth,
                                    side, virt_pick)
    if answer_cut is None:
        raise StrategyError("virtual order game lost; precondition too weak")
    pair = (virt_pick, answer_cut) if side == "A" else (answer_cut, virt_pick)
    if pair not in state.virtual_pairs:
        state.virtual_pairs.append(pair)
    j_other = cuts.index(answer_cut)
    ja, jb = (j, j_other) if side == "A" else (j_other, j)

    int_oracle = config.interval_oracle(ja, jb)
    prior = state.interval_picks.get((ja, jb), [])
    pairs = tuple(prior)
    reply = int_oracle.best_answer(pairs, depth, side, pick)
    if reply is None:
        raise StrategyError("interval game lost; uniform types too weak")
    new_pair = (pick, reply) if side == "A" else (reply, pick)
    state.interval_picks.setdefault((ja, jb), []).append(new_pair)
    state.rounds_done = i
    return reply


def monadic_agent(config: MonadicGameConfig) -> Agent:
    def answer(pos: GamePosition, side, pick):
        state = _monadic_replay(config, pos.history)
        return _monadic_answer(config, state, side, pick)
    return Agent(role="duplicator", answer=answer, name="monadic-translation")


# ---------------------------------------------------------------------------
# Atomic types, subset colors, and the single-round extractor
# ---------------------------------------------------------------------------

def atomic_type(points: Sequence, ctx: MonadicContext) -> tuple:
    """Complete atomic type of a point tuple over {=, <} and the context
    predicates, as a canonical value-free tuple."""
    pts = [as_point(p) for p in points]
    n = len(pts)
    order = tuple(
        ("lt" if pts[i] < pts[j] else "eq" if pts[i] == pts[j] else "gt")
        for i in range(n) for j in range(i + 1, n))
    members = tuple(ctx.membership_mask(p) for p in pts)
    return (order, members)


def color_h_subset(y: Sequence, k: int, ctx: MonadicContext) -> frozenset:
    """All complete atomic types realizable as type(a_1..a_k, y_1..y_h) with
    the a's ranging over the whole window."""
    y = tuple(sorted(as_point(p) for p in y))
    points = list(ctx.window.points())
    return frozenset(atomic_type(tuple(abar) + y, ctx)
                     for abar in itertools.product(points, repeat=k))


def find_uniform_positions_bcefo(ctx: MonadicContext, r: int, k: int,
                                 needed: int, rng: Optional[random.Random] = None,
                                 samples_per_h: int = 12) -> SpecialPositions:
    """Positions whose h-element subsets all share one color, for h <= r.

    Greedy scan: from every starting point, repeatedly accept the smallest
    next position that keeps the singleton color and every pair color
    uniform; the full set is then verified exhaustively for h <= 2 and on
    sampled subsets above.  Pair colors are the binding constraint: the
    stretch between any two chosen positions must realize the same
    predicate patterns, so e.g. periodic predicates force wide gaps.
    """
    rng = rng or random.Random(0)
    points = list(ctx.window.points())
    col1_cache: dict = {}
    col2_cache: dict = {}

    def col1(p):
        if p not in col1_cache:
            col1_cache[p] = color_h_subset((p,), k, ctx)
        return col1_cache[p]

    def col2(p, q):
        if (p, q) not in col2_cache:
            col2_cache[(p, q)] = color_h_subset((p, q), k, ctx)
        return col2_cache[(p, q)]

    best = 0
    for start in points:
        ref1 = col1(start)
        seconds = [q for q in points if q > start and col1(q) == ref1]
        for second in seconds:
            chosen = [start, second]
            ref2 = col2(start, second)
            for q in points:
                if q <= chosen[-1]:
                    continue
                if col1(q) != ref1:
                    continue
                if any(col2(p, q) != ref2 for p in chosen):
                    continue
                chosen.append(q)
                if len(chosen) == needed:
                    break
            best = max(best, len(chosen))
            if len(chosen) < needed:
                continue
            ok, colors = _colors_uniform(tuple(chosen), r, k, ctx, rng,
                                         samples_per_h)
            if ok:
                return SpecialPositions(tuple(chosen), "single-round",
                                        colors=tuple(colors.items()))
    raise ExtractionError(
        f"window exhausted: no {needed} color-uniform positions", found=best)


def _colors_uniform(cuts, r, k, ctx, rng, samples_per_h):
    colors = {}
    for h in range(1, min(r, len(cuts)) + 1):
        subsets = list(itertools.combinations(cuts, h))
        if h > 2 and len(subsets) > samples_per_h:
            subsets = [subsets[0]] + rng.sample(subsets[1:], samples_per_h - 1)
        reference = None
        for y in subsets:
            col = color_h_subset(y, k, ctx)
            if reference is None:
                reference = col
            elif col != reference:
                return False, {}
        colors[h] = reference
    return True, colors


# ---------------------------------------------------------------------------
# The single-round translation
# ---------------------------------------------------------------------------

def gap_embedding(a: OrderedStructure, b: OrderedStructure, p_cuts: Sequence,
                  r: int):
    """Embed both active domains with gaps: the j-th smallest element goes to
    position p_{2rj} (1-based), leaving 2r-1 spare positions between any two
    images."""
    p_cuts = tuple(as_point(p) for p in p_cuts)
    need = 2 * r * max(len(active_domain(a)), len(active_domain(b)))
    if len(p_cuts) < need:
        raise PreconditionError(
            f"need {need} special positions for the gap embedding, have {len(p_cuts)}")
    targets = [p_cuts[2 * r * (j + 1) - 1] for j in range(len(p_cuts) // (2 * r))]
    alpha = jth_smallest_embedding(active_domain(a), targets)
    beta = jth_smallest_embedding(active_domain(b), targets)
    return alpha, beta


@dataclass
class BcefoGameConfig:
    """Single-round game data: k spoiler moves, context, positions, and the
    two embedded successor structures <P, <, first, last, Succ, tau>."""
    k: int
    ctx: MonadicContext
    positions: SpecialPositions
    small_a: OrderedStructure
    small_b: OrderedStructure
    budget: int = 10_000_000

    def __post_init__(self):
        self._oracle = GameOracle(self.small_a, self.small_b, budget=self.budget)

    @property
    def cuts(self):
        return self.positions.cuts


def successor_structure(cuts: Sequence[Point], relations, constants) -> OrderedStructure:
    """<P, <, first, last, Succ^P, tau>: the virtual-game structure.  The
    `last` constant is a finite-window guard: it pins the top position so
    that picks beyond every special position stay above every image."""
    cuts = tuple(sorted(as_point(p) for p in cuts))
    succ = [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]
    consts = dict(constants)
    consts["first"] = cuts[0]
    consts["last"] = cuts[-1]
    rels = dict(relations)
    rels["Succ"] = succ
    return make_structure(cuts, constants=consts, relations=rels)


def translate_strategy_bcefo(a: OrderedStructure, b: OrderedStructure, k: int,
                             ctx: MonadicContext, budget: int = 10_000_000):
    """Single-round translation for arbitrary unary context predicates.

    Precondition (oracle-checked): the active-domain structures are
    single-round equivalent at r = 2k + #constants.  Positions come from the
    color-uniform extractor at h_max = 2k + #constants + 2 (the +2 covers
    the first/last guard constants of the virtual structures)."""
    kappa = len(a.signature.constants)
    r = 2 * k + kappa
    small_a = database_order_structure(a)
    small_b = database_order_structure(b)
    if not GameOracle(small_a, small_b).single_round_wins(r):
        raise PreconditionError(
            f"active domains are single-round distinguishable with {r} moves")
    n = max(len(active_domain(a)), len(active_domain(b)))
    needed = 2 * r * n
    h_max = 2 * k + kappa + 2
    positions = find_uniform_positions_bcefo(ctx, h_max, k, needed)
    alpha, beta = gap_embedding(a, b, positions.cuts, r)
    from .structures import apply_embedding
    emb = lambda s, m: apply_embedding(s, m, universe=positions.cuts)
    small_emb_a = emb(small_a, alpha)
    small_emb_b = emb(small_b, beta)
    virt_a = successor_structure(positions.cuts,
                                 {n_: list(small_emb_a.relation(n_))
                                  for n_ in small_emb_a.signature.relation_names},
                                 dict(small_emb_a.constants))
    virt_b = successor_structure(positions.cuts,
                                 {n_: list(small_emb_b.relation(n_))
                                  for n_ in small_emb_b.signature.relation_names},
                                 dict(small_emb_b.constants))
    config = BcefoGameConfig(k=k, ctx=ctx, positions=positions,
                             small_a=virt_a, small_b=virt_b, budget=budget)
    return alpha, beta, bcefo_agent(config), config


def bcefo_game_structures(config: BcefoGameConfig):
    def build(small: OrderedStructure) -> OrderedStructure:
        return make_structure(
            config.ctx.window,
            constants={n: p for n, p in small.constants
                       if n not in ("first", "last")},
            relations={n: list(small.relation(n))
                       for n in small.signature.relation_names if n != "Succ"},
            monadic={name: sorted(members)
                     for name, members in config.ctx.predicates})
    return build(config.small_a), build(config.small_b)


def duplicator_single_round_bcefo(config: BcefoGameConfig, side: str,
                                  picks: Sequence) -> tuple:
    """Answer a full spoiler tuple at once.

    The picks' closest special positions plus the virtual constants go to
    the virtual single-round game; the answer tuple is then the smallest
    lexicographic realization of the spoiler tuple's complete atomic type
    anchored at the virtual answers (color uniformity guarantees one
    exists)."""
    picks = tuple(as_point(p) for p in picks)
    if len(picks) != config.k:
        raise StrategyError(f"expected {config.k} picks")
    cuts = config.cuts
    closest: set = set()
    for p in picks:
        if p < cuts[0]:
            closest.add(cuts[0])
        elif p >= cuts[-1]:
            closest.add(cuts[-1])
        else:
            j = max(i for i, c in enumerate(cuts) if c <= p)
            closest.add(cuts[j])
            closest.add(cuts[j + 1])
    virtual_picks = tuple(sorted(closest))
    reply = config._oracle.duplicator_answer_single(side, virtual_picks)
    if reply is None:
        raise StrategyError("virtual single-round game lost; precondition breach")
    vmap = dict(zip(virtual_picks, reply))
    small_own = config.small_a if side == "A" else config.small_b
    small_other = config.small_b if side == "A" else config.small_a
    for name in small_own.signature.constants:
        vmap[small_own.constant(name)] = small_other.constant(name)
    anchors_own = tuple(sorted(vmap))
    anchors_other = tuple(vmap[x] for x in anchors_own)
    target_type = atomic_type(picks + anchors_own, config.ctx)
    answer = _realize_type(picks, anchors_own, anchors_other, config.ctx)
    if answer is None:
        raise StrategyError(
            "no realization of the spoiler type at the virtual answers: "
            "color uniformity was violated (extraction bug)")
    assert atomic_type(answer + anchors_other, config.ctx) == target_type
    return answer


def _realize_type(picks, anchors_own, anchors_other, ctx) -> Optional[tuple]:
    """Smallest lexicographic tuple whose atomic type next to anchors_other
    matches the picks' type next to anchors_own."""
    points = list(ctx.window.points())
    k = len(picks)

    def compatible(partial):
        i = len(partial) - 1
        q = partial[i]
        p = picks[i]
        if ctx.membership_mask(q) != ctx.membership_mask(p):
            return False
        for j in range(i):
            if _cmp(picks[j], p) != _cmp(partial[j], q):
                return False
        for aj, bj in zip(anchors_own, anchors_other):
            if _cmp(p, aj) != _cmp(q, bj):
                return False
        return True

    def backtrack(partial):
        if len(partial) == k:
            return tuple(partial)
        for q in points:
            partial.append(q)
            if compatible(partial):
                res = backtrack(partial)
                if res is not None:
                    return res
            partial.pop()
        return None

    return backtrack([])


def _cmp(x, y):
    return -1 if x < y else (0 if x == y else 1)


def bcefo_agent(config: BcefoGameConfig) -> Agent:
    def answer(pos: GamePosition, side, picks):
        return duplicator_single_round_bcefo(config, side, picks)
    return Agent(role="duplicator", answer=answer, name="single-round-translation")
