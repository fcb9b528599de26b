"""First-order formulas over ordered numeric structures.

The AST covers atoms over {<, =, +(ternary), database relations, built-in
monadic predicates}, Boolean connectives and the two quantifiers.  Terms are
variables, declared constant names, or rational literals that must resolve
to universe points at evaluation time.

Formulas parse from s-expressions:

    formula := atom | (not f) | (and f f+) | (or f f+) | (E var f) | (A var f)
    atom    := (< t t) | (= t t) | (+ t t t) | (rel NAME t+) | (mon NAME t)

Quantifiers always range over the structure's finite universe; for window
universes that means every integer in the window.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .errors import FormulaParseError
from .structures import OrderedStructure, Point, Signature, as_point, format_point

# -- terms -------------------------------------------------------------

Term = Union[str, Fraction]  # variable / constant name, or a literal point


@dataclass(frozen=True)
class Less:
    left: Term
    right: Term


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class PlusAtom:
    """t1 + t2 = t3, the ternary guise of addition."""
    a: Term
    b: Term
    c: Term


@dataclass(frozen=True)
class Rel:
    name: str
    terms: tuple[Term, ...]


@dataclass(frozen=True)
class Mon:
    name: str
    term: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Formula = Union[Less, Eq, PlusAtom, Rel, Mon, Not, And, Or, Exists, Forall]

ATOMS = (Less, Eq, PlusAtom, Rel, Mon)


def atom_terms(f: Formula) -> tuple[Term, ...]:
    if isinstance(f, Less):
        return (f.left, f.right)
    if isinstance(f, Eq):
        return (f.left, f.right)
    if isinstance(f, PlusAtom):
        return (f.a, f.b, f.c)
    if isinstance(f, Rel):
        return f.terms
    if isinstance(f, Mon):
        return (f.term,)
    raise TypeError(f"not an atom: {f}")


def subformulas(f: Formula):
    if isinstance(f, ATOMS):
        return ()
    if isinstance(f, Not):
        return (f.body,)
    if isinstance(f, (And, Or)):
        return f.parts
    return (f.body,)


def free_variables(f: Formula, sig: Optional[Signature] = None) -> frozenset:
    """Variables not bound by a quantifier (constant names excluded if sig given)."""
    consts = set(sig.constants) if sig else set()

    def walk(g, bound):
        if isinstance(g, ATOMS):
            return {t for t in atom_terms(g)
                    if isinstance(t, str) and t not in bound and t not in consts}
        if isinstance(g, (Exists, Forall)):
            return walk(g.body, bound | {g.var})
        out = set()
        for part in subformulas(g):
            out |= walk(part, bound)
        return out

    return frozenset(walk(f, set()))


def quantifier_depth(f: Formula) -> int:
    if isinstance(f, ATOMS):
        return 0
    if isinstance(f, (Exists, Forall)):
        return 1 + quantifier_depth(f.body)
    return max((quantifier_depth(g) for g in subformulas(f)), default=0)


def is_quantifier_free(f: Formula) -> bool:
    return quantifier_depth(f) == 0


def is_bc_efo(f: Formula) -> bool:
    """Boolean combination of purely existential formulas.

    A component is purely existential when its quantifier prefix is a
    (possibly empty) block of Exists over a quantifier-free matrix; the
    check is syntactic, so e.g. Exists(x, Forall(y, ...)) does not qualify.
    """
    def is_efo(g):
        while isinstance(g, Exists):
            g = g.body
        return is_quantifier_free(g)

    if is_efo(f):
        return True
    if isinstance(f, Not):
        return is_bc_efo(f.body)
    if isinstance(f, (And, Or)):
        return all(is_bc_efo(g) for g in f.parts)
    return False


# -- parsing -----------------------------------------------------------

def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append((ch, i))
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append((text[i:j], i))
            i = j
    return tokens


def _read_sexpr(tokens, pos):
    if pos >= len(tokens):
        raise FormulaParseError("unexpected end of input", tokens[-1][1] if tokens else 0)
    tok, at = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise FormulaParseError("unclosed parenthesis", at)
            if tokens[pos][0] == ")":
                return (items, at), pos + 1
            item, pos = _read_sexpr(tokens, pos)
            items.append(item)
    if tok == ")":
        raise FormulaParseError("unexpected ')'", at)
    return (tok, at), pos + 1


def _is_literal(token: str) -> bool:
    body = token[1:] if token[:1] == "-" else token
    return body.replace("/", "", 1).isdigit() and body != ""


def parse_formula(text: str, sig: Signature) -> Formula:
    """Parse and validate against a signature; rejects unknown symbols and
    arity mismatches with the character position of the offence."""
    tokens = _tokenize(text)
    expr, pos = _read_sexpr(tokens, 0)
    if pos != len(tokens):
        raise FormulaParseError("trailing input after formula", tokens[pos][1])
    return _build(expr, sig, frozenset())


def _term(expr, sig, bound) -> Term:
    node, at = expr
    if isinstance(node, list):
        raise FormulaParseError("expected a term, found a list", at)
    if _is_literal(node):
        return as_point(node)
    return node  # variable or constant name; atoms validate constants lazily


def _build(expr, sig: Signature, bound) -> Formula:
    node, at = expr
    if not isinstance(node, list):
        raise FormulaParseError(f"bare token {node!r} is not a formula", at)
    if not node:
        raise FormulaParseError("empty form", at)
    head, head_at = node[0]
    if isinstance(head, list):
        raise FormulaParseError("formula head must be a symbol", head_at)
    args = node[1:]

    if head == "not":
        if len(args) != 1:
            raise FormulaParseError("not takes one formula", at)
        return Not(_build(args[0], sig, bound))
    if head in ("and", "or"):
        if len(args) < 2:
            raise FormulaParseError(f"{head} takes at least two formulas", at)
        parts = tuple(_build(a, sig, bound) for a in args)
        return And(parts) if head == "and" else Or(parts)
    if head in ("E", "A"):
        if len(args) != 2:
            raise FormulaParseError(f"{head} takes a variable and a formula", at)
        var_node, var_at = args[0]
        if isinstance(var_node, list) or _is_literal(var_node):
            raise FormulaParseError("quantified variable must be an identifier", var_at)
        body = _build(args[1], sig, bound | {var_node})
        return Exists(var_node, body) if head == "E" else Forall(var_node, body)
    if head == "<":
        if len(args) != 2:
            raise FormulaParseError("< takes two terms", at)
        return Less(_term(args[0], sig, bound), _term(args[1], sig, bound))
    if head == "=":
        if len(args) != 2:
            raise FormulaParseError("= takes two terms", at)
        return Eq(_term(args[0], sig, bound), _term(args[1], sig, bound))
    if head == "+":
        if len(args) != 3:
            raise FormulaParseError("+ takes three terms", at)
        return PlusAtom(*(_term(a, sig, bound) for a in args))
    if head == "rel":
        if len(args) < 2:
            raise FormulaParseError("rel takes a name and terms", at)
        name_node, name_at = args[0]
        if isinstance(name_node, list):
            raise FormulaParseError("relation name must be a symbol", name_at)
        if name_node not in sig.relation_names:
            raise FormulaParseError(f"unknown relation {name_node!r}", name_at)
        terms = tuple(_term(a, sig, bound) for a in args[1:])
        if len(terms) != sig.arity(name_node):
            raise FormulaParseError(
                f"relation {name_node} expects arity {sig.arity(name_node)}", at)
        return Rel(name_node, terms)
    if head == "mon":
        if len(args) != 2:
            raise FormulaParseError("mon takes a name and one term", at)
        name_node, name_at = args[0]
        if name_node not in sig.monadic:
            raise FormulaParseError(f"unknown monadic predicate {name_node!r}", name_at)
        return Mon(name_node, _term(args[1], sig, bound))
    raise FormulaParseError(f"unknown form {head!r}", head_at)


def to_sexpr(f: Formula) -> str:
    def term(t):
        return format_point(t) if isinstance(t, Fraction) else t

    if isinstance(f, Less):
        return f"(< {term(f.left)} {term(f.right)})"
    if isinstance(f, Eq):
        return f"(= {term(f.left)} {term(f.right)})"
    if isinstance(f, PlusAtom):
        return f"(+ {term(f.a)} {term(f.b)} {term(f.c)})"
    if isinstance(f, Rel):
        return "(rel " + f.name + " " + " ".join(term(t) for t in f.terms) + ")"
    if isinstance(f, Mon):
        return f"(mon {f.name} {term(f.term)})"
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.body)})"
    if isinstance(f, And):
        return "(and " + " ".join(to_sexpr(g) for g in f.parts) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(to_sexpr(g) for g in f.parts) + ")"
    if isinstance(f, Exists):
        return f"(E {f.var} {to_sexpr(f.body)})"
    if isinstance(f, Forall):
        return f"(A {f.var} {to_sexpr(f.body)})"
    raise TypeError(f"not a formula: {f}")


# -- evaluation --------------------------------------------------------

Assignment = dict


def evaluate(f: Formula, s: OrderedStructure,
             assignment: Optional[Assignment] = None) -> bool:
    """Tarskian truth over s's finite universe.

    Raises KeyError for unbound variables and ValueError for literal points
    outside the universe.  Addition atoms hold exactly when the three values
    are universe points with v1 + v2 = v3, which clips + to the window.
    """
    env = dict(assignment or {})
    consts = dict(s.constants)
    points = s.points()

    def val(t: Term) -> Point:
        if isinstance(t, Fraction):
            if t not in s:
                raise ValueError(f"literal point {t} outside universe")
            return t
        if t in env:
            return env[t]
        if t in consts:
            return consts[t]
        raise KeyError(f"unbound variable {t!r}")

    def run(g) -> bool:
        if isinstance(g, Less):
            return val(g.left) < val(g.right)
        if isinstance(g, Eq):
            return val(g.left) == val(g.right)
        if isinstance(g, PlusAtom):
            return val(g.a) + val(g.b) == val(g.c)
        if isinstance(g, Rel):
            return tuple(val(t) for t in g.terms) in s.relation(g.name)
        if isinstance(g, Mon):
            return val(g.term) in s.monadic_set(g.name)
        if isinstance(g, Not):
            return not run(g.body)
        if isinstance(g, And):
            return all(run(p) for p in g.parts)
        if isinstance(g, Or):
            return any(run(p) for p in g.parts)
        if isinstance(g, Exists):
            shadow = env.get(g.var)
            had = g.var in env
            for p in points:
                env[g.var] = p
                if run(g.body):
                    _restore(env, g.var, shadow, had)
                    return True
            _restore(env, g.var, shadow, had)
            return False
        if isinstance(g, Forall):
            shadow = env.get(g.var)
            had = g.var in env
            for p in points:
                env[g.var] = p
                if not run(g.body):
                    _restore(env, g.var, shadow, had)
                    return False
            _restore(env, g.var, shadow, had)
            return True
        raise TypeError(f"not a formula: {g}")

    return run(f)


def _restore(env, var, shadow, had):
    if had:
        env[var] = shadow
    else:
        env.pop(var, None)
