"""Finite linearly ordered relational structures over exact rational points.

Everything downstream (games, strategies, checkers) operates on the types in
this module.  Points are `fractions.Fraction` values even when a game is
played over an integer window: integrality is a property one can test, not a
type, because the rational floor-lifting and the gap parameters of the
addition strategies need exact rational arithmetic.

A structure's universe is either an explicit sorted tuple of points or an
integer window [lo, hi].  Windows simulate unbounded universes at desk scale;
anything that would reference a point outside the window raises instead of
silently truncating.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .errors import StructureFormatError

Point = Fraction


def as_point(value) -> Point:
    """Coerce ints / strings like '7' or '3/4' to an exact rational point."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a point")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational point")


def format_point(p: Point) -> str:
    """Canonical text form: integer if integral, else p/q in lowest terms."""
    if p.denominator == 1:
        return str(p.numerator)
    return f"{p.numerator}/{p.denominator}"


@dataclass(frozen=True)
class Signature:
    """Relation and constant symbols plus the active built-ins.

    `relations` holds database relation symbols with their arities;
    `monadic` holds the names of built-in unary predicates supplied by the
    context (these are *not* part of the active domain).  `order` and
    `addition` flag the built-ins < and +.
    """

    relations: tuple[tuple[str, int], ...] = ()
    constants: tuple[str, ...] = ()
    monadic: tuple[str, ...] = ()
    order: bool = True
    addition: bool = False

    def __post_init__(self):
        names = [n for n, _ in self.relations] + list(self.constants) + list(self.monadic)
        if len(set(names)) != len(names):
            raise ValueError("duplicate symbol names in signature")
        for name, ar in self.relations:
            if ar < 1:
                raise ValueError(f"relation {name} has non-positive arity {ar}")
        object.__setattr__(self, "relations", tuple(sorted(self.relations)))
        object.__setattr__(self, "constants", tuple(sorted(self.constants)))
        object.__setattr__(self, "monadic", tuple(sorted(self.monadic)))

    def arity(self, name: str) -> int:
        for n, ar in self.relations:
            if n == name:
                return ar
        raise KeyError(name)

    @property
    def relation_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.relations)


@dataclass(frozen=True)
class Window:
    """Integer interval [lo, hi] standing in for an unbounded universe.

    `unbounded_above` marks a window that simulates an infinitely increasing
    universe; it does not enlarge the set of legal points.
    """

    lo: int
    hi: int
    unbounded_above: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty window")

    def __contains__(self, p) -> bool:
        p = as_point(p)
        return p.denominator == 1 and self.lo <= p.numerator <= self.hi

    def points(self) -> Iterator[Point]:
        for n in range(self.lo, self.hi + 1):
            yield Fraction(n)

    def size(self) -> int:
        return self.hi - self.lo + 1


Universe = Union[tuple, Window]


@dataclass(frozen=True)
class OrderedStructure:
    """A finite structure: universe, constants and relation interpretations.

    All fields are canonically sorted tuples, so equality is structural and
    instances are hashable and safe to share.
    """

    signature: Signature
    universe: Universe
    constants: tuple[tuple[str, Point], ...] = ()
    relations: tuple[tuple[str, tuple[tuple[Point, ...], ...]], ...] = ()
    monadic: tuple[tuple[str, tuple[Point, ...]], ...] = ()

    def __post_init__(self):
        if not isinstance(self.universe, Window):
            pts = tuple(as_point(p) for p in self.universe)
            if any(pts[i] >= pts[i + 1] for i in range(len(pts) - 1)):
                raise ValueError("explicit universe must be strictly increasing")
            object.__setattr__(self, "universe", pts)
        object.__setattr__(self, "constants", tuple(sorted(self.constants)))
        object.__setattr__(
            self, "relations",
            tuple(sorted((n, tuple(sorted(ts))) for n, ts in self.relations)))
        object.__setattr__(
            self, "monadic",
            tuple(sorted((n, tuple(sorted(ps))) for n, ps in self.monadic)))
        self._validate()

    def _validate(self):
        sig = self.signature
        if {n for n, _ in self.constants} != set(sig.constants):
            raise ValueError("constants do not match signature")
        if {n for n, _ in self.relations} != set(sig.relation_names):
            raise ValueError("relations do not match signature")
        if {n for n, _ in self.monadic} != set(sig.monadic):
            raise ValueError("monadic predicates do not match signature")
        for _, p in self.constants:
            if p not in self:
                raise ValueError(f"constant value {p} outside universe")
        for name, tuples in self.relations:
            ar = sig.arity(name)
            for t in tuples:
                if len(t) != ar:
                    raise ValueError(f"tuple {t} has wrong arity for {name}")
                for p in t:
                    if p not in self:
                        raise ValueError(f"{name} tuple component {p} outside universe")
        for name, pts in self.monadic:
            for p in pts:
                if p not in self:
                    raise ValueError(f"monadic {name} member {p} outside universe")

    # -- access helpers -------------------------------------------------

    def __contains__(self, p) -> bool:
        p = as_point(p)
        if isinstance(self.universe, Window):
            return p in self.universe
        return p in self.universe

    def points(self) -> list[Point]:
        if isinstance(self.universe, Window):
            return list(self.universe.points())
        return list(self.universe)

    def universe_size(self) -> int:
        if isinstance(self.universe, Window):
            return self.universe.size()
        return len(self.universe)

    def constant(self, name: str) -> Point:
        for n, p in self.constants:
            if n == name:
                return p
        raise KeyError(name)

    def relation(self, name: str) -> frozenset:
        for n, ts in self.relations:
            if n == name:
                return frozenset(ts)
        raise KeyError(name)

    def monadic_set(self, name: str) -> frozenset:
        for n, ps in self.monadic:
            if n == name:
                return frozenset(ps)
        raise KeyError(name)


def make_structure(universe,
                   constants: Optional[Mapping[str, object]] = None,
                   relations: Optional[Mapping[str, Iterable[Sequence]]] = None,
                   monadic: Optional[Mapping[str, Iterable]] = None,
                   addition: bool = False,
                   order: bool = True) -> OrderedStructure:
    """Convenience constructor; infers the signature from the interpretations."""
    constants = dict(constants or {})
    relations = {n: [tuple(as_point(x) for x in t) for t in ts]
                 for n, ts in (relations or {}).items()}
    monadic = {n: [as_point(x) for x in ps] for n, ps in (monadic or {}).items()}
    arities = {}
    for n, ts in relations.items():
        ars = {len(t) for t in ts}
        if len(ars) > 1:
            raise ValueError(f"mixed arities in relation {n}")
        arities[n] = ars.pop() if ars else 1
    sig = Signature(relations=tuple(arities.items()),
                    constants=tuple(constants),
                    monadic=tuple(monadic),
                    order=order, addition=addition)
    if not isinstance(universe, Window):
        universe = tuple(sorted({as_point(p) for p in universe}))
    return OrderedStructure(
        signature=sig,
        universe=universe,
        constants=tuple((n, as_point(v)) for n, v in constants.items()),
        relations=tuple((n, tuple(ts)) for n, ts in relations.items()),
        monadic=tuple((n, tuple(ps)) for n, ps in monadic.items()),
    )


def linear_order(n: int, lo: int = 0) -> OrderedStructure:
    """The pure linear order on n consecutive integers starting at lo."""
    return make_structure(range(lo, lo + n))


@dataclass(frozen=True)
class PartialMap:
    """A functional, injective list of point pairs."""

    pairs: tuple[tuple[Point, Point], ...]

    def __post_init__(self):
        pairs = tuple(sorted({(as_point(a), as_point(b)) for a, b in self.pairs}))
        sources = [a for a, _ in pairs]
        targets = [b for _, b in pairs]
        if len(set(sources)) != len(pairs):
            raise ValueError("map is not functional")
        if len(set(targets)) != len(pairs):
            raise ValueError("map is not injective")
        object.__setattr__(self, "pairs", pairs)

    @staticmethod
    def of(mapping) -> "PartialMap":
        if isinstance(mapping, Mapping):
            return PartialMap(tuple(mapping.items()))
        return PartialMap(tuple(mapping))

    def __call__(self, p) -> Point:
        p = as_point(p)
        for a, b in self.pairs:
            if a == p:
                return b
        raise KeyError(p)

    def domain(self) -> tuple[Point, ...]:
        return tuple(a for a, _ in self.pairs)

    def targets(self) -> tuple[Point, ...]:
        return tuple(sorted(b for _, b in self.pairs))

    def inverse(self) -> "PartialMap":
        return PartialMap(tuple((b, a) for a, b in self.pairs))

    def compose(self, then: "PartialMap") -> "PartialMap":
        """The map p -> then(self(p)); self's targets must lie in then's domain."""
        return PartialMap(tuple((a, then(b)) for a, b in self.pairs))

    def extended(self, a, b) -> "PartialMap":
        return PartialMap(self.pairs + ((as_point(a), as_point(b)),))


def identity_map(points: Iterable) -> PartialMap:
    return PartialMap(tuple((as_point(p), as_point(p)) for p in points))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def active_domain(s: OrderedStructure) -> frozenset:
    """All points occurring in constants or database relation tuples.

    Built-in monadic predicates belong to the context, not the database,
    so their members are excluded.
    """
    pts = {p for _, p in s.constants}
    for _, tuples in s.relations:
        for t in tuples:
            pts.update(t)
    return frozenset(pts)


def is_order_preserving(m: PartialMap) -> bool:
    """True iff a < a' exactly when m(a) < m(a') for all pairs."""
    pairs = m.pairs
    for i, (a, b) in enumerate(pairs):
        for a2, b2 in pairs[i + 1:]:
            if (a < a2) != (b < b2):
                return False
    return True


def is_partial_isomorphism(a: OrderedStructure, b: OrderedStructure,
                           m: PartialMap) -> bool:
    """Decide whether m is a partial isomorphism between a and b.

    Requires m to cover every constant (c^a -> c^b), to preserve order, and
    to preserve membership of every database relation, every built-in
    monadic predicate, and (when + is active) every addition triple over
    the domain of m, in both directions.
    """
    if a.signature != b.signature:
        raise ValueError("structures do not share a signature")
    sig = a.signature
    lookup = dict(m.pairs)
    for name in sig.constants:
        ca, cb = a.constant(name), b.constant(name)
        if lookup.get(ca) != cb:
            return False
    if sig.order and not is_order_preserving(m):
        return False
    dom = list(lookup)
    for name in sig.monadic:
        ma, mb = a.monadic_set(name), b.monadic_set(name)
        for p in dom:
            if (p in ma) != (lookup[p] in mb):
                return False
    for name in sig.relation_names:
        ar = sig.arity(name)
        ra, rb = a.relation(name), b.relation(name)
        for t in _tuples_over(dom, ar):
            if (t in ra) != (tuple(lookup[x] for x in t) in rb):
                return False
    if sig.addition:
        for x in dom:
            for y in dom:
                for z in dom:
                    if (x + y == z) != (lookup[x] + lookup[y] == lookup[z]):
                        return False
    return True


def _tuples_over(points, arity):
    if arity == 0:
        yield ()
        return
    for p in points:
        for rest in _tuples_over(points, arity - 1):
            yield (p,) + rest


def apply_embedding(s: OrderedStructure, m: PartialMap,
                    universe=None) -> OrderedStructure:
    """Rewrite s along an order-preserving map covering its active domain.

    The result lives over `universe` (default: m's target points, plus the
    source universe points fixed by m when m is an identity there).  Built-in
    monadic members must also be covered; uncovered points raise.
    """
    if not is_order_preserving(m):
        raise ValueError("embedding must be order-preserving")
    lookup = dict(m.pairs)
    missing = [p for p in sorted(active_domain(s)) if p not in lookup]
    if missing:
        raise ValueError(f"active-domain element {missing[0]} not covered by embedding")
    if universe is None:
        if all(a == b for a, b in m.pairs) and set(lookup) >= set(s.points()):
            universe = s.universe
        else:
            universe = tuple(m.targets())
    new_monadic = []
    for name, pts in s.monadic:
        mapped = []
        for p in pts:
            if p not in lookup:
                raise ValueError(f"monadic member {p} not covered by embedding")
            mapped.append(lookup[p])
        new_monadic.append((name, tuple(sorted(mapped))))
    return OrderedStructure(
        signature=s.signature,
        universe=universe,
        constants=tuple((n, lookup[p]) for n, p in s.constants),
        relations=tuple((n, tuple(tuple(lookup[x] for x in t) for t in ts))
                        for n, ts in s.relations),
        monadic=tuple(new_monadic),
    )


def is_n_embeddable(s: OrderedStructure) -> bool:
    """Every structure representable here is finite, hence order-embeds
    into the naturals; windows flagged as virtually unbounded qualify by
    their flag semantics.  Provided for interface completeness."""
    return True


def database_order_structure(s: OrderedStructure) -> OrderedStructure:
    """The order reduct on the active domain: <adom(s), <, tau>.  Built-ins
    are dropped; this is the structure the small order game is played on."""
    dom = tuple(sorted(active_domain(s)))
    sig = Signature(relations=s.signature.relations,
                    constants=s.signature.constants,
                    monadic=(), order=True, addition=False)
    return OrderedStructure(signature=sig, universe=dom,
                            constants=s.constants, relations=s.relations,
                            monadic=())


def jth_smallest_embedding(dom: Iterable, targets: Sequence) -> PartialMap:
    """Map the j-th smallest element of dom to targets[j]."""
    dom = sorted(as_point(p) for p in dom)
    if len(dom) > len(targets):
        raise ValueError(f"need {len(dom)} target positions, have {len(targets)}")
    return PartialMap(tuple((p, as_point(targets[j])) for j, p in enumerate(dom)))


# ---------------------------------------------------------------------------
# Line-oriented structure files
# ---------------------------------------------------------------------------

FORMAT_HEADER = "efstruct 1"


def print_structure(s: OrderedStructure) -> str:
    """Canonical text form; parse_structure inverts it bit-exactly."""
    lines = [FORMAT_HEADER]
    builtins = []
    if s.signature.order:
        builtins.append("<")
    if s.signature.addition:
        builtins.append("+")
    if builtins:
        lines.append("builtins " + " ".join(builtins))
    if isinstance(s.universe, Window):
        w = s.universe
        tail = " unbounded-above" if w.unbounded_above else ""
        lines.append(f"universe window {w.lo} {w.hi}{tail}")
    else:
        lines.append("universe explicit " + " ".join(format_point(p) for p in s.universe))
    for name, p in s.constants:
        lines.append(f"constant {name} {format_point(p)}")
    for name, pts in s.monadic:
        lines.append(f"monadic {name}")
        for p in pts:
            lines.append(format_point(p))
        lines.append("end")
    for name, tuples in s.relations:
        lines.append(f"relation {name} {s.signature.arity(name)}")
        for t in tuples:
            lines.append(" ".join(format_point(p) for p in t))
        lines.append("end")
    return "\n".join(lines) + "\n"


def parse_structure(text: str) -> OrderedStructure:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != FORMAT_HEADER:
        raise StructureFormatError(f"expected header {FORMAT_HEADER!r}")
    order, addition = False, False
    universe = None
    constants, relations, monadic = {}, {}, {}
    arities = {}
    i = 1
    while i < len(lines):
        tokens = lines[i].split()
        kind = tokens[0]
        try:
            if kind == "builtins":
                order = "<" in tokens[1:]
                addition = "+" in tokens[1:]
            elif kind == "universe":
                if tokens[1] == "explicit":
                    universe = tuple(as_point(t) for t in tokens[2:])
                elif tokens[1] == "window":
                    universe = Window(int(tokens[2]), int(tokens[3]),
                                      unbounded_above="unbounded-above" in tokens[4:])
                else:
                    raise StructureFormatError(f"unknown universe kind {tokens[1]!r}")
            elif kind == "constant":
                constants[tokens[1]] = as_point(tokens[2])
            elif kind == "monadic":
                name = tokens[1]
                i += 1
                pts = []
                while lines[i] != "end":
                    pts.extend(as_point(t) for t in lines[i].split())
                    i += 1
                monadic[name] = pts
            elif kind == "relation":
                name, ar = tokens[1], int(tokens[2])
                arities[name] = ar
                i += 1
                tuples = []
                while lines[i] != "end":
                    t = tuple(as_point(x) for x in lines[i].split())
                    if len(t) != ar:
                        raise StructureFormatError(
                            f"tuple of arity {len(t)} in relation {name} declared {ar}")
                    tuples.append(t)
                    i += 1
                relations[name] = tuples
            else:
                raise StructureFormatError(f"unknown directive {kind!r}")
        except (IndexError, ValueError) as exc:
            raise StructureFormatError(f"bad line {lines[i]!r}: {exc}") from exc
        i += 1
    if universe is None:
        raise StructureFormatError("missing universe block")
    sig = Signature(relations=tuple(arities.items()), constants=tuple(constants),
                    monadic=tuple(monadic), order=order, addition=addition)
    return OrderedStructure(
        signature=sig, universe=universe,
        constants=tuple(constants.items()),
        relations=tuple((n, tuple(ts)) for n, ts in relations.items()),
        monadic=tuple((n, tuple(ps)) for n, ps in monadic.items()),
    )
