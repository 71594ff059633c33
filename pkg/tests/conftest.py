import random

import pytest

from morasslab.forcing import Condition, BlockMap, build_fragment, seed_condition
from morasslab.morass import LevelData, MorassFragment
from morasslab.ordinal import OMEGA, ZERO, omega_times, parse_ordinal


def o(text: str):
    return parse_ordinal(text)


@pytest.fixture(scope="session")
def frag0():
    """Two-level fragment: theta_0 = w split at 0, top w*2."""
    return MorassFragment(1, (LevelData(OMEGA, ZERO, OMEGA),), o("w*2"))


@pytest.fixture(scope="session")
def tower3():
    """Three direct-extension steps: thetas w, w*2, w*4, top w*8, all splits at 0."""
    levels = (
        LevelData(o("w"), ZERO, o("w")),
        LevelData(o("w*2"), ZERO, o("w*2")),
        LevelData(o("w*4"), ZERO, o("w*4")),
    )
    return MorassFragment(3, levels, o("w*8"))


@pytest.fixture(scope="session")
def mixed_fragment():
    """Fragment with a nonzero split point, from an overlapping amalgamation."""
    from morasslab.forcing import amalgamate

    p = Condition(
        MorassFragment(0, (), o("w*2")),
        BlockMap(((0, OMEGA), (1, OMEGA))),
    )
    q = Condition(p.frag, BlockMap(((0, OMEGA), (2, OMEGA))))
    return amalgamate(p, q).frag


def random_tasks(rng: random.Random, max_block: int = 8, max_tail: int = 10):
    count = rng.randint(1, 4)
    return [
        (rng.randrange(max_block), omega_times(rng.randrange(4), rng.randrange(max_tail)))
        for _ in range(count)
    ]


@pytest.fixture(scope="session")
def built_conditions():
    """A small pool of driver-built conditions for module tests."""
    rng = random.Random(20240817)
    out = []
    for _ in range(12):
        out.append(build_fragment(seed_condition(), random_tasks(rng), 16))
    return out
