import random

import pytest

from efgames.structures import make_structure


@pytest.fixture
def rng():
    return random.Random(0)


def random_database(rng, max_points=6, lo=0, hi=30, unary=True, binary=True):
    """A small database over an explicit integer universe: one unary and/or
    one binary relation on a few points."""
    universe = sorted(rng.sample(range(lo, hi), rng.randint(2, max_points)))
    rels = {}
    if unary:
        rels["U"] = [(p,) for p in rng.sample(universe, rng.randint(0, min(2, len(universe))))]
    if binary:
        pairs = [(a, b) for a in universe for b in universe]
        rels["E"] = rng.sample(pairs, rng.randint(0, 2))
    return make_structure(universe, relations=rels)
