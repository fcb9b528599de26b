"""Order-constraint relations over a dense order and their finite encodings.

A relation over the rationals that is definable from < and finitely many cut
points is constant on every grid cell refined by coordinate order types.  A
`RegionRelation` stores exactly that data: the cut list S and the set of
included (cell index vector, cell type) pairs, where a cell type records for
each coordinate whether it sits on its cell's left endpoint and how the
coordinates compare to each other.

On top of the regions this module provides quantifier elimination into the
cell normal form, the canonical minimal cut set, the encoding of a dense
structure as a finite structure over its cuts (and back), and the two
syntactic interpretations that translate structures and sentences between
the dense and the finite side.

Evaluation over the dense order is exact: quantifiers range over finitely
many candidate points (cuts, already-bound values, midpoints, and one point
beyond each extreme), which is complete because every formula in scope is
built from < and grid-constant relations.  The evaluator memoizes on the
order signature of the bound values, so deeply nested formulas stay
tractable.
"""

from __future__ import annotations

import itertools
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import InsufficiencyError, StructureFormatError
from .logic import (And, Eq, Exists, Forall, Formula, Less, Mon, Not, Or,
                    PlusAtom, Rel, atom_terms, free_variables, subformulas)
from .structures import (OrderedStructure, Point, as_point, format_point)

# ---------------------------------------------------------------------------
# Cell types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellType:
    """Relative position of an m-tuple inside its cell: per coordinate
    whether it equals the cell's left endpoint, plus the coordinates'
    mutual weak order as dense ranks."""
    eqs: tuple[bool, ...]
    ranks: tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.eqs)

    def code(self) -> str:
        return ("e" + "".join("1" if e else "0" for e in self.eqs)
                + "r" + "".join(str(r) for r in self.ranks))

    @staticmethod
    def from_code(code: str) -> "CellType":
        if not code.startswith("e") or "r" not in code:
            raise StructureFormatError(f"bad cell type code {code!r}")
        e_part, r_part = code[1:].split("r", 1)
        return CellType(tuple(ch == "1" for ch in e_part),
                        tuple(int(ch) for ch in r_part))


def _dense_rank_vectors(m: int):
    """All rank tuples of length m whose image is an initial segment of N
    (the weak orders on m coordinates)."""
    for ranks in itertools.product(range(m), repeat=m):
        used = sorted(set(ranks))
        if used == list(range(len(used))):
            yield ranks


def enumerate_types(m: int) -> list[CellType]:
    """All cell types for arity m, canonically ordered (m <= 3: the count is
    2^m times the number of weak orders, 2/12/104)."""
    if not 1 <= m <= 3:
        raise ValueError("cell types are enumerated for arity 1..3 only")
    out = []
    for ranks in _dense_rank_vectors(m):
        for eqs in itertools.product((False, True), repeat=m):
            out.append(CellType(tuple(eqs), tuple(ranks)))
    return sorted(out, key=lambda t: t.code())


def type_of(points: Sequence[Point], cuts: Sequence[Point],
            ivec: Sequence[int]) -> CellType:
    eqs = tuple(i >= 1 and points[j] == cuts[i - 1]
                for j, i in enumerate(ivec))
    order = sorted(set(points))
    ranks = tuple(order.index(p) for p in points)
    return CellType(eqs, ranks)


def locate(points: Sequence, cuts: Sequence) -> tuple:
    """Cell index vector, cell type, characteristic tuple, and representative
    of a point tuple with respect to a cut list.

    The index i_j is the largest i with S(i) <= x_j (0 when x_j lies below
    every cut); u_j = 0 exactly when i_j = 0, in which case the
    representative falls back to the smallest cut.
    """
    pts = [as_point(p) for p in points]
    cuts = sorted(as_point(c) for c in cuts)
    ivec = tuple(bisect_right(cuts, p) for p in pts)
    ctype = type_of(pts, cuts, ivec)
    upsilon = tuple(0 if i == 0 else 1 for i in ivec)
    # no representative exists without cut points; membership queries only
    # need the cell and type
    rep = tuple(cuts[max(i, 1) - 1] for i in ivec) if cuts else None
    return ivec, ctype, upsilon, rep


# ---------------------------------------------------------------------------
# Region relations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionRelation:
    """x is in the relation iff (cell index of x, type of x) is included."""
    arity: int
    cuts: tuple[Point, ...]
    included: frozenset   # of (ivec, CellType)

    def __post_init__(self):
        cuts = tuple(sorted({as_point(c) for c in self.cuts}))
        object.__setattr__(self, "cuts", cuts)
        for ivec, ctype in self.included:
            if len(ivec) != self.arity or ctype.arity != self.arity:
                raise ValueError("cell of wrong arity")
            if any(not 0 <= i <= len(cuts) for i in ivec):
                raise ValueError("cell index out of range")

    def contains(self, points) -> bool:
        ivec, ctype, _, _ = locate(points, self.cuts)
        return (ivec, ctype) in self.included


def region_from_tuples(tuples: Iterable, cuts: Sequence = ()) -> RegionRelation:
    """A finite relation as a region: every tuple pins all coordinates onto
    cut points."""
    tuples = [tuple(as_point(x) for x in t) for t in tuples]
    if not tuples:
        raise ValueError("use empty_region for an empty finite relation")
    arity = len(tuples[0])
    all_cuts = set(as_point(c) for c in cuts)
    for t in tuples:
        all_cuts.update(t)
    all_cuts = tuple(sorted(all_cuts))
    included = set()
    for t in tuples:
        ivec, ctype, _, _ = locate(t, all_cuts)
        if not all(ctype.eqs):
            raise ValueError("finite-relation tuple not on the cut grid")
        included.add((ivec, ctype))
    return RegionRelation(arity, all_cuts, frozenset(included))


def empty_region(arity: int, cuts: Sequence = ()) -> RegionRelation:
    return RegionRelation(arity, tuple(as_point(c) for c in cuts), frozenset())


def full_region(arity: int, cuts: Sequence = ()) -> RegionRelation:
    cuts = tuple(sorted(as_point(c) for c in cuts))
    included = set()
    for ivec in itertools.product(range(len(cuts) + 1), repeat=arity):
        for ctype in enumerate_types(arity):
            if realizable_witness(cuts, ivec, ctype) is not None:
                included.add((ivec, ctype))
    return RegionRelation(arity, cuts, frozenset(included))


def realizable_witness(cuts: Sequence[Point], ivec: Sequence[int],
                       ctype: CellType) -> Optional[tuple]:
    """A concrete tuple in the given cell with the given type, or None when
    the combination is contradictory.  Witnesses are deterministic:
    midpoints of the bounding cuts, with min(cuts)-1 below everything and
    max(cuts)+1 above."""
    cuts = sorted(as_point(c) for c in cuts)
    m = len(ivec)
    lows, highs = [], []
    for j in range(m):
        i = ivec[j]
        lows.append(cuts[i - 1] if i >= 1 else None)          # closed end
        highs.append(cuts[i] if i < len(cuts) else None)      # open end
    values: dict[int, Fraction] = {}
    prev = None
    for rank in range(max(ctype.ranks) + 1 if m else 0):
        group = [j for j in range(m) if ctype.ranks[j] == rank]
        eq_vals = set()
        for j in group:
            if ctype.eqs[j]:
                if ivec[j] == 0:
                    return None   # equality with the -infinity endpoint
                eq_vals.add(cuts[ivec[j] - 1])
        if len(eq_vals) > 1:
            return None
        if eq_vals:
            v = eq_vals.pop()
            for j in group:
                if not ctype.eqs[j]:
                    lo, hi = lows[j], highs[j]
                    if (lo is not None and v <= lo) or (hi is not None and v >= hi):
                        return None
            if prev is not None and v <= prev:
                return None
        else:
            lo = prev
            hi = None
            for j in group:
                glo, ghi = lows[j], highs[j]
                if glo is not None and (lo is None or glo > lo):
                    lo = glo   # open bound: value must exceed the endpoint
                if ghi is not None and (hi is None or ghi < hi):
                    hi = ghi
            if lo is not None and hi is not None:
                if lo >= hi:
                    return None
                v = (lo + hi) / 2
            elif lo is None and hi is None:
                v = (cuts[0] - 1) if cuts else Fraction(0)
                if prev is not None:
                    v = prev + 1
            elif lo is None:
                v = hi - 1
                if prev is not None and v <= prev:
                    return None
            else:
                v = lo + 1
        for j in group:
            values[j] = v
        prev = v
    return tuple(values[j] for j in range(m))


def region_cells(cuts: Sequence[Point], arity: int):
    """All realizable (ivec, type, witness) triples over a cut list."""
    cuts = tuple(sorted(as_point(c) for c in cuts))
    for ivec in itertools.product(range(len(cuts) + 1), repeat=arity):
        for ctype in enumerate_types(arity):
            w = realizable_witness(cuts, ivec, ctype)
            if w is not None:
                yield ivec, ctype, w


def refit_region(region: RegionRelation, cuts: Sequence[Point]) -> RegionRelation:
    """The same point set described over a (finer or different) cut list;
    exact only when the new cuts are sufficient, which callers must ensure
    (use is_sufficient)."""
    cuts = tuple(sorted(set(as_point(c) for c in cuts)))
    included = set()
    for ivec, ctype, w in region_cells(cuts, region.arity):
        if region.contains(w):
            included.add((ivec, ctype))
    return RegionRelation(region.arity, cuts, frozenset(included))


def region_equal(r1: RegionRelation, r2: RegionRelation) -> bool:
    if r1.arity != r2.arity:
        return False
    combined = tuple(sorted(set(r1.cuts) | set(r2.cuts)))
    for _, _, w in region_cells(combined, r1.arity):
        if r1.contains(w) != r2.contains(w):
            return False
    return True


def is_sufficient(region: RegionRelation, cuts: Sequence[Point]):
    """None when the region is constant on every cell-type of `cuts`;
    otherwise the offending (ivec, type) pair."""
    cuts = tuple(sorted(set(as_point(c) for c in cuts)))
    combined = tuple(sorted(set(cuts) | set(region.cuts)))
    seen: dict = {}
    for _, _, w in region_cells(combined, region.arity):
        ivec, ctype, _, _ = locate(w, cuts)
        member = region.contains(w)
        key = (ivec, ctype)
        if key in seen and seen[key] != member:
            return key
        seen[key] = member
    return None


# ---------------------------------------------------------------------------
# Dense structures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DenseStructure:
    """A structure over the dense order: named constants plus region
    relations (finite relations are regions whose cells pin every
    coordinate)."""
    constants: tuple[tuple[str, Point], ...]
    relations: tuple[tuple[str, RegionRelation], ...]

    @staticmethod
    def of(constants: Mapping = (), relations: Mapping = ()) -> "DenseStructure":
        return DenseStructure(
            tuple(sorted((n, as_point(p)) for n, p in dict(constants).items())),
            tuple(sorted(dict(relations).items())))

    def constant(self, name: str) -> Point:
        for n, p in self.constants:
            if n == name:
                return p
        raise KeyError(name)

    def relation(self, name: str) -> RegionRelation:
        for n, r in self.relations:
            if n == name:
                return r
        raise KeyError(name)

    def relation_names(self):
        return tuple(n for n, _ in self.relations)

    def grid(self) -> tuple[Point, ...]:
        pts = {p for _, p in self.constants}
        for _, r in self.relations:
            pts.update(r.cuts)
        return tuple(sorted(pts))


def dense_equal(s1: DenseStructure, s2: DenseStructure) -> bool:
    if dict(s1.constants) != dict(s2.constants):
        return False
    if set(s1.relation_names()) != set(s2.relation_names()):
        return False
    return all(region_equal(s1.relation(n), s2.relation(n))
               for n in s1.relation_names())


# ---------------------------------------------------------------------------
# Exact evaluation over the dense order
# ---------------------------------------------------------------------------

class DenseEvaluator:
    """Tarskian truth over the rationals for formulas built from <, =, and
    grid-constant relations.

    Quantifiers range over a complete finite candidate set (cuts, bound
    values, midpoints, one point past each extreme).  Results are memoized
    per subformula on the order signature of its free-variable values
    relative to the grid: assignments with equal signatures are related by
    an order automorphism fixing the grid, so they satisfy the same
    formulas.
    """

    def __init__(self, s: DenseStructure, extra_grid: Sequence = ()):
        self.s = s
        self.grid = tuple(sorted(set(s.grid()) | {as_point(p) for p in extra_grid}))
        self._const_names = {n for n, _ in s.constants}
        self._memo: dict = {}
        self._free: dict = {}
        # memo keys use id(node); pin every evaluated tree so CPython cannot
        # recycle an id while the evaluator lives
        self._roots: list = []

    def free_vars(self, f: Formula) -> tuple:
        key = id(f)
        if key not in self._free:
            self._free[key] = tuple(v for v in sorted(free_variables(f))
                                    if v not in self._const_names)
        return self._free[key]

    def _sig(self, f: Formula, env: dict):
        vals = [env[v] for v in self.free_vars(f)]
        cells = tuple((bisect_right(self.grid, v),
                       bool(self.grid and v in self.grid)) for v in vals)
        order = sorted(set(vals))
        ranks = tuple(order.index(v) for v in vals)
        return cells, ranks

    def candidates(self, env: dict) -> list[Point]:
        vals = sorted(set(self.grid) | set(env.values()))
        if not vals:
            return [Fraction(0)]
        out = [vals[0] - 1]
        for u, v in zip(vals, vals[1:]):
            out.append(u)
            out.append((u + v) / 2)
        out.append(vals[-1])
        out.append(vals[-1] + 1)
        return out

    def _value(self, term, env):
        if isinstance(term, Fraction):
            return term
        if term in env:
            return env[term]
        return self.s.constant(term)

    def evaluate(self, f: Formula, assignment: Optional[dict] = None) -> bool:
        self._roots.append(f)
        env = {k: as_point(v) for k, v in (assignment or {}).items()}
        return self._eval(f, env)

    def _eval(self, f: Formula, env: dict) -> bool:
        if isinstance(f, Less):
            return self._value(f.left, env) < self._value(f.right, env)
        if isinstance(f, Eq):
            return self._value(f.left, env) == self._value(f.right, env)
        if isinstance(f, Rel):
            pts = tuple(self._value(t, env) for t in f.terms)
            return self.s.relation(f.name).contains(pts)
        if isinstance(f, (PlusAtom, Mon)):
            raise ValueError("addition and monadic atoms have no dense semantics here")
        key = (id(f), self._sig(f, env))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if isinstance(f, Not):
            result = not self._eval(f.body, env)
        elif isinstance(f, And):
            result = all(self._eval(g, env) for g in f.parts)
        elif isinstance(f, Or):
            result = any(self._eval(g, env) for g in f.parts)
        elif isinstance(f, (Exists, Forall)):
            want = isinstance(f, Exists)
            result = not want
            sub = {k: v for k, v in env.items()}
            for cand in self.candidates(env):
                sub[f.var] = cand
                if self._eval(f.body, sub) == want:
                    result = want
                    break
        else:
            raise TypeError(f"not a formula: {f}")
        self._memo[key] = result
        return result


def evaluate_dense(f: Formula, s: DenseStructure,
                   assignment: Optional[dict] = None,
                   extra_grid: Sequence = ()) -> bool:
    return DenseEvaluator(s, extra_grid).evaluate(f, assignment)


# ---------------------------------------------------------------------------
# Quantifier elimination into the cell normal form
# ---------------------------------------------------------------------------

def qe_normalize(phi: Formula, cuts: Sequence, var_order: Optional[Sequence[str]] = None,
                 structure: Optional[DenseStructure] = None) -> RegionRelation:
    """The region of tuples satisfying phi over the dense order.

    phi may use <, =, literal cut constants from `cuts`, and (when
    `structure` is given) its region relations.  Every cell-type of the cut
    grid gets one witness evaluation; constancy on cells makes this exact.
    """
    cuts = tuple(sorted(as_point(c) for c in cuts))
    s = structure or DenseStructure.of()
    for term in _formula_literals(phi):
        if term not in cuts:
            raise ValueError(f"literal constant {term} outside the cut set")
    free = tuple(sorted(free_variables(phi))) if var_order is None else tuple(var_order)
    m = len(free)
    if m == 0:
        raise ValueError("need at least one free variable")
    ev = DenseEvaluator(s, extra_grid=cuts)
    included = set()
    for ivec, ctype, w in region_cells(cuts, m):
        if ev.evaluate(phi, dict(zip(free, w))):
            included.add((ivec, ctype))
    return RegionRelation(m, cuts, frozenset(included))


def _formula_literals(f: Formula):
    from .logic import ATOMS
    if isinstance(f, ATOMS):
        return [t for t in atom_terms(f) if isinstance(t, Fraction)]
    out = []
    for g in subformulas(f):
        out.extend(_formula_literals(g))
    return out


# ---------------------------------------------------------------------------
# Canonical cut sets
# ---------------------------------------------------------------------------

def canonical_S(region: RegionRelation) -> tuple[Point, ...]:
    """The minimal cut set sufficient for the region: a point s stays iff
    some substitution pattern witnesses a one-sided membership change
    across s.  Evaluated symbolically on the region description: the other
    coordinates range over cell representatives, the moving coordinate over
    {s - eps, s, s + eps}."""
    m = region.arity
    cuts = region.cuts
    if not cuts:
        return ()
    reps = set(cuts)
    allv = sorted(cuts)
    reps.add(allv[0] - 1)
    reps.add(allv[-1] + 1)
    for u, v in zip(allv, allv[1:]):
        reps.add((u + v) / 2)
    keep = []
    for s in cuts:
        others = sorted(reps - {s})
        eps = min(abs(s - o) for o in others) / 2
        probes = (s - eps, s, s + eps)
        found = False
        for mask_size in range(1, m + 1):
            for mask in itertools.combinations(range(m), mask_size):
                rest = [j for j in range(m) if j not in mask]
                for assign in itertools.product(others, repeat=len(rest)):
                    base = [None] * m
                    for j, val in zip(rest, assign):
                        base[j] = val
                    vals = []
                    for probe in probes:
                        t = list(base)
                        for j in mask:
                            t[j] = probe
                        vals.append(region.contains(tuple(t)))
                    if not (vals[0] == vals[1] == vals[2]):
                        found = True
                        break
                if found:
                    break
            if found:
                break
        if found:
            keep.append(s)
    return tuple(keep)


# ---------------------------------------------------------------------------
# Finite encodings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RelationEncoding:
    """rep_S(R): for each (cell type, characteristic tuple) the set of cell
    representatives whose cell meets the relation."""
    name: str
    arity: int
    families: tuple   # ((type_code, upsilon, tuple-of-representatives), ...)

    def family(self, type_code: str, upsilon) -> frozenset:
        for code, u, reps in self.families:
            if code == type_code and u == tuple(upsilon):
                return frozenset(reps)
        return frozenset()


def rep_of_relation(region: RegionRelation, cuts: Sequence,
                    name: str = "R") -> RelationEncoding:
    cuts = tuple(sorted(set(as_point(c) for c in cuts)))
    bad = is_sufficient(region, cuts)
    if bad is not None:
        raise InsufficiencyError(
            f"cut set not sufficient for {name}: cell {bad[0]} type {bad[1].code()} mixed",
            cell=bad)
    fams: dict = {}
    for ivec, ctype, w in region_cells(cuts, region.arity):
        if region.contains(w):
            _, _, upsilon, rep = locate(w, cuts)
            fams.setdefault((ctype.code(), upsilon), set()).add(rep)
    families = tuple(sorted((code, u, tuple(sorted(reps)))
                            for (code, u), reps in fams.items()))
    return RelationEncoding(name, region.arity, families)


@dataclass(frozen=True)
class RepStructure:
    """The finite encoding of a dense structure: its canonical cut set, its
    constants, and one finite relation per (source relation, cell type,
    characteristic tuple)."""
    constants: tuple[tuple[str, Point], ...]
    s_points: tuple[Point, ...]
    encodings: tuple[RelationEncoding, ...]

    def as_dense(self) -> DenseStructure:
        rels = {"S": region_from_tuples([(p,) for p in self.s_points],
                                        cuts=self.s_points)}
        if not self.s_points:
            rels["S"] = empty_region(1)
        for enc in self.encodings:
            for code, u, reps in enc.families:
                rels[type_relation_name(enc.name, code, u)] = (
                    region_from_tuples(reps, cuts=self.s_points)
                    if reps else empty_region(enc.arity, self.s_points))
            for ctype in enumerate_types(enc.arity):
                for u in itertools.product((0, 1), repeat=enc.arity):
                    key = type_relation_name(enc.name, ctype.code(), u)
                    if key not in rels:
                        rels[key] = empty_region(enc.arity, self.s_points)
        return DenseStructure.of(dict(self.constants), rels)


def type_relation_name(rel: str, type_code: str, upsilon) -> str:
    return f"{rel}__{type_code}__" + "".join(str(int(u)) for u in upsilon)


def rep_structure(s: DenseStructure) -> RepStructure:
    """The canonical representation: cuts are the union of the constants and
    every relation's canonical cut set."""
    s_points = {p for _, p in s.constants}
    for name in s.relation_names():
        s_points.update(canonical_S(s.relation(name)))
    s_points = tuple(sorted(s_points))
    encodings = tuple(rep_of_relation(s.relation(name), s_points, name)
                      for name in s.relation_names())
    return RepStructure(constants=s.constants, s_points=s_points,
                        encodings=encodings)


# ---------------------------------------------------------------------------
# Interpretations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interpretation:
    """Defining formulas for every target symbol, over the source
    vocabulary plus <.  Relation formulas use the canonical free variables
    x1..xm."""
    constant_formulas: tuple[tuple[str, Formula], ...]
    relation_formulas: tuple[tuple[str, int, Formula], ...]

    def constant_formula(self, name):
        for n, f in self.constant_formulas:
            if n == name:
                return f
        raise KeyError(name)

    def relation_formula(self, name):
        for n, ar, f in self.relation_formulas:
            if n == name:
                return ar, f
        raise KeyError(name)


def _xvars(m: int) -> list[str]:
    return [f"x{j + 1}" for j in range(m)]


def _order_pattern_formula(xs: Sequence[str], ctype: CellType) -> list[Formula]:
    out = []
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            ri, rj = ctype.ranks[i], ctype.ranks[j]
            if ri == rj:
                out.append(Eq(xs[i], xs[j]))
            elif ri < rj:
                out.append(Less(xs[i], xs[j]))
            else:
                out.append(Less(xs[j], xs[i]))
    return out


def _leq(a, b) -> Formula:
    return Or((Less(a, b), Eq(a, b)))


def _shared_s_atoms(s_formula: Optional[Formula]):
    """One membership formula object per variable name; sharing the objects
    across all family formulas lets the dense evaluator memoize the (large,
    inlined) membership definition once instead of per copy."""
    cache: dict = {}

    def s_atom(var) -> Formula:
        if var not in cache:
            cache[var] = (Rel("S", (var,)) if s_formula is None
                          else substitute(s_formula, {"x1": var}))
        return cache[var]

    return s_atom


def _representative_block(xs, ys, ctype, upsilon, s_atom) -> list[Formula]:
    """y_j is the representative of x_j: the largest S-point <= x_j when
    u_j = 1 (equality exactly per the type flag), the smallest S-point when
    u_j = 0 (and then x_j lies below every S-point)."""
    parts: list[Formula] = []
    for x, y, eq, u in zip(xs, ys, ctype.eqs, upsilon):
        parts.append(s_atom(y))
        if u == 1:
            if eq:
                parts.append(Eq(x, y))
            else:
                parts.append(Less(y, x))
            parts.append(Not(Exists("z", And((
                s_atom("z"), Less(y, "z"), _leq("z", x))))))
        else:
            parts.append(Forall("z", Or((Not(s_atom("z")),
                                         _leq(y, "z")))))
            parts.append(Less(x, y))
            if eq:
                parts.append(Eq(x, y))   # contradictory on purpose: the
                                          # (u=0, equality) cell is empty
    return parts


def interpretation_phi(relations: Sequence[tuple[str, int]],
                       constants: Sequence[str]) -> Interpretation:
    """Decode: defines each source symbol over the type-extension vocabulary
    {S, R__t__u} plus <.  R(x) holds iff for the type t and characteristic
    u of x, the representative satisfies R__t__u."""
    const_formulas = tuple((c, Eq("x1", c)) for c in constants)
    rel_formulas = []
    s_atom = _shared_s_atoms(None)
    for name, m in relations:
        xs = _xvars(m)
        ys = [f"y{j + 1}" for j in range(m)]
        disjuncts = []
        for ctype in enumerate_types(m):
            for u in itertools.product((0, 1), repeat=m):
                body = _order_pattern_formula(xs, ctype)
                body += _representative_block(xs, ys, ctype, u, s_atom)
                body.append(Rel(type_relation_name(name, ctype.code(), u),
                                tuple(ys)))
                inner: Formula = And(tuple(body)) if len(body) > 1 else body[0]
                for y in reversed(ys):
                    inner = Exists(y, inner)
                disjuncts.append(inner)
        rel_formulas.append((name, m, Or(tuple(disjuncts))))
    return Interpretation(const_formulas, tuple(rel_formulas))


def boundary_formula(name: str, m: int) -> Formula:
    """The condition-(*) formula: x is a boundary point of the relation,
    i.e. some substitution pattern changes membership one-sidedly across x.
    Free variable: x1."""
    x = "x1"
    bullets_all = []
    for mask_size in range(1, m + 1):
        for mask in itertools.combinations(range(m), mask_size):
            rest = [j for j in range(m) if j not in mask]
            avars = [f"a{j + 1}" for j in rest]

            def r_at(sub):
                args = []
                ai = iter(avars)
                for j in range(m):
                    args.append(sub if j in mask else next(ai))
                return Rel(name, tuple(args))

            left = lambda g: Forall("s", Or((Not(And((Less("p", "s"), Less("s", x)))), g)))
            right = lambda g: Forall("s", Or((Not(And((Less(x, "s"), Less("s", "q")))), g)))
            punct = lambda g: Forall("s", Or((Not(And((Less("p", "s"), Less("s", "q"),
                                                       Not(Eq("s", x))))), g)))
            b1 = And((left(r_at("s")), right(Not(r_at("s")))))
            b2 = And((left(Not(r_at("s"))), right(r_at("s"))))
            b3 = And((punct(r_at("s")), Not(r_at(x))))
            b4 = And((punct(Not(r_at("s"))), r_at(x)))
            body: Formula = Or((b1, b2, b3, b4))
            if rest:
                side = [Not(Eq(a, x)) for a in avars]
                body = And(tuple(side) + (body,))
                for a in reversed(avars):
                    body = Exists(a, body)
            bullets_all.append(body)
    core = Or(tuple(bullets_all)) if len(bullets_all) > 1 else bullets_all[0]
    return Exists("p", Exists("q", And((Less("p", x), Less(x, "q"), core))))


def interpretation_phi_prime(relations: Sequence[tuple[str, int]],
                             constants: Sequence[str]) -> Interpretation:
    """Encode: defines the type-extension vocabulary over the source one.
    S(x) is 'x is a constant or a boundary point of some relation';
    R__t__u(y) is 'y lies in S and is the representative of some x in R
    with type t and characteristic u'."""
    s_parts = [Eq("x1", c) for c in constants]
    s_parts += [boundary_formula(name, m) for name, m in relations]
    phi_s = Or(tuple(s_parts)) if len(s_parts) > 1 else s_parts[0]
    rel_formulas = [("S", 1, phi_s)]
    s_atom = _shared_s_atoms(phi_s)
    for name, m in relations:
        ys = _xvars(m)                      # formal variables of R__t__u
        xs = [f"w{j + 1}" for j in range(m)]
        for ctype in enumerate_types(m):
            for u in itertools.product((0, 1), repeat=m):
                body = [Rel(name, tuple(xs))]
                body += _order_pattern_formula(xs, ctype)
                body += _representative_block(xs, ys, ctype, u, s_atom)
                inner: Formula = And(tuple(body))
                for w in reversed(xs):
                    inner = Exists(w, inner)
                rel_formulas.append((type_relation_name(name, ctype.code(), u),
                                     m, inner))
    return Interpretation(tuple((c, Eq("x1", c)) for c in constants),
                          tuple(rel_formulas))


# ---------------------------------------------------------------------------
# Applying interpretations and rewriting sentences
# ---------------------------------------------------------------------------

def substitute(f: Formula, mapping: Mapping[str, object]) -> Formula:
    """Capture-avoiding substitution of terms for free variables.

    Subformulas that the mapping does not touch are returned by identity,
    so evaluator memo tables keyed on object identity keep working across
    substituted copies (this matters: the boundary formulas are large and
    get inlined many times)."""
    mapping = {k: v for k, v in mapping.items() if k != v}
    free_cache: dict = {}
    counter = [0]

    def free(g) -> frozenset:
        key = id(g)
        if key not in free_cache:
            free_cache[key] = free_variables(g)
        return free_cache[key]

    def walk(g: Formula, mp: dict) -> Formula:
        mp = {k: v for k, v in mp.items() if k in free(g)}
        if not mp:
            return g
        def term(t):
            if isinstance(t, Fraction):
                return t
            return mp.get(t, t)
        if isinstance(g, Less):
            return Less(term(g.left), term(g.right))
        if isinstance(g, Eq):
            return Eq(term(g.left), term(g.right))
        if isinstance(g, PlusAtom):
            return PlusAtom(term(g.a), term(g.b), term(g.c))
        if isinstance(g, Rel):
            return Rel(g.name, tuple(term(t) for t in g.terms))
        if isinstance(g, Mon):
            return Mon(g.name, term(g.term))
        if isinstance(g, Not):
            return Not(walk(g.body, mp))
        if isinstance(g, And):
            return And(tuple(walk(part, mp) for part in g.parts))
        if isinstance(g, Or):
            return Or(tuple(walk(part, mp) for part in g.parts))
        if isinstance(g, (Exists, Forall)):
            inner_mp = {k: v for k, v in mp.items() if k != g.var}
            var = g.var
            if any(v == var for v in inner_mp.values()):
                counter[0] += 1
                var = f"{g.var}__r{counter[0]}"
                inner_mp[g.var] = var
            body = walk(g.body, inner_mp)
            return (Exists if isinstance(g, Exists) else Forall)(var, body)
        raise TypeError(f"not a formula: {g}")

    return walk(f, dict(mapping))


def apply_interpretation(psi: Interpretation,
                         s: Union[OrderedStructure, DenseStructure],
                         extra_grid: Sequence = ()):
    """Build the target structure defined by psi's formulas over s.

    Finite structures are evaluated pointwise; dense structures cell-wise
    (one witness per realizable cell-type of s's grid), which is exact
    because all defining formulas are grid-constant."""
    if isinstance(s, OrderedStructure):
        from .logic import evaluate as fin_eval
        pts = s.points()
        consts = {}
        for name, f in psi.constant_formulas:
            hits = [p for p in pts if fin_eval(f, s, {"x1": p})]
            if len(hits) != 1:
                raise ValueError(f"constant formula for {name} defines "
                                 f"{len(hits)} points")
            consts[name] = hits[0]
        rels = {}
        for name, ar, f in psi.relation_formulas:
            xs = _xvars(ar)
            rels[name] = [t for t in itertools.product(pts, repeat=ar)
                          if fin_eval(f, s, dict(zip(xs, t)))]
        from .structures import make_structure
        return make_structure(s.universe, constants=consts, relations=rels)

    ev = DenseEvaluator(s, extra_grid)
    grid = ev.grid
    consts = {}
    for name, f in psi.constant_formulas:
        hits = [p for p in grid if ev.evaluate(f, {"x1": p})]
        off_grid = [c for c in ev.candidates({}) if c not in grid
                    and ev.evaluate(f, {"x1": c})]
        if len(hits) != 1 or off_grid:
            raise ValueError(f"constant formula for {name} defines no single point")
        consts[name] = hits[0]
    rels = {}
    for name, ar, f in psi.relation_formulas:
        xs = _xvars(ar)
        included = set()
        for ivec, ctype, w in region_cells(grid, ar):
            if ev.evaluate(f, dict(zip(xs, w))):
                included.add((ivec, ctype))
        rels[name] = RegionRelation(ar, grid, frozenset(included))
    return DenseStructure.of(consts, rels)


def rewrite_sentence(psi: Interpretation, chi: Formula) -> Formula:
    """Replace every target atom by its defining formula, so that
    s |= rewrite(chi) iff psi(s) |= chi."""
    const_names = {n for n, _ in psi.constant_formulas}

    def walk(f: Formula) -> Formula:
        if isinstance(f, Rel):
            ar, body = psi.relation_formula(f.name)
            xs = _xvars(ar)
            return substitute(body, dict(zip(xs, f.terms)))
        if isinstance(f, Eq):
            if isinstance(f.right, str) and f.right in const_names:
                return substitute(psi.constant_formula(f.right), {"x1": f.left})
            if isinstance(f.left, str) and f.left in const_names:
                return substitute(psi.constant_formula(f.left), {"x1": f.right})
            return f
        if isinstance(f, (Less, PlusAtom, Mon)):
            return f
        if isinstance(f, Not):
            return Not(walk(f.body))
        if isinstance(f, And):
            return And(tuple(walk(g) for g in f.parts))
        if isinstance(f, Or):
            return Or(tuple(walk(g) for g in f.parts))
        if isinstance(f, Exists):
            return Exists(f.var, walk(f.body))
        if isinstance(f, Forall):
            return Forall(f.var, walk(f.body))
        raise TypeError(f"not a formula: {f}")

    return walk(chi)


# ---------------------------------------------------------------------------
# Region files
# ---------------------------------------------------------------------------

REGION_HEADER = "efregions 1"


def print_dense_structure(s: DenseStructure) -> str:
    lines = [REGION_HEADER]
    for code_t in sorted({ct.code() for _, r in s.relations
                          for _, ct in r.included}):
        ct = CellType.from_code(code_t)
        lines.append(f"# type {code_t}: eq-flags {ct.eqs} ranks {ct.ranks}")
    for name, p in s.constants:
        lines.append(f"constant {name} {format_point(p)}")
    for name, region in s.relations:
        lines.append(f"region {name} {region.arity}")
        lines.append("cuts " + " ".join(format_point(c) for c in region.cuts))
        for ivec, ctype in sorted(region.included,
                                  key=lambda it: (it[0], it[1].code())):
            lines.append("cell " + " ".join(map(str, ivec)) + " " + ctype.code())
        lines.append("end")
    return "\n".join(lines) + "\n"


def parse_dense_structure(text: str) -> DenseStructure:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != REGION_HEADER:
        raise StructureFormatError(f"expected header {REGION_HEADER!r}")
    constants, relations = {}, {}
    i = 1
    while i < len(lines):
        tokens = lines[i].split()
        if tokens[0] == "constant":
            constants[tokens[1]] = as_point(tokens[2])
        elif tokens[0] == "region":
            name, arity = tokens[1], int(tokens[2])
            i += 1
            cut_tokens = lines[i].split()
            if cut_tokens[0] != "cuts":
                raise StructureFormatError("region block must start with cuts")
            cuts = tuple(as_point(t) for t in cut_tokens[1:])
            included = set()
            i += 1
            while lines[i] != "end":
                cell = lines[i].split()
                if cell[0] != "cell":
                    raise StructureFormatError(f"unexpected line {lines[i]!r}")
                ivec = tuple(int(t) for t in cell[1:-1])
                included.add((ivec, CellType.from_code(cell[-1])))
                i += 1
            relations[name] = RegionRelation(arity, cuts, frozenset(included))
        else:
            raise StructureFormatError(f"unknown directive {tokens[0]!r}")
        i += 1
    return DenseStructure.of(constants, relations)
