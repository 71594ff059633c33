"""The persistent function family and the persistency game engine.

Members of the family are finite partial functions from the fragment's
universe into level indices, subject to two constraints: values propagate
downward along ``preceq_at``, and every fiber has a common ``preceq``
upper bound inside the universe.  The challenger names universe elements;
the defender answers with growing family members covering them.  The
defender implemented here follows the explicit two-rule strategy whose
soundness rests on the at-most-one-candidate claim checked by
:func:`claim_check`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from . import intervals
from .morass import (
    MorassFragment,
    mu,
    preceq_at,
    predecessor_pieces,
    predecessor_vector,
    preimage_of_interval,
)
from .ordinal import OrdinalCNF, parse_ordinal, random_ordinal_below, render_ordinal


class PersistencyError(ValueError):
    pass


@dataclass(frozen=True)
class PFunc:
    """A finite partial function from universe elements to level indices."""

    entries: tuple[tuple[OrdinalCNF, int], ...] = ()

    def __post_init__(self) -> None:
        keys = [k for k, _ in self.entries]
        if sorted(keys) != list(keys) or len(set(keys)) != len(keys):
            raise PersistencyError("entries must be sorted by key, without repeats")
        if any(v < 0 for _, v in self.entries):
            raise PersistencyError("values are level indices (naturals)")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[OrdinalCNF, int]]) -> "PFunc":
        seen: dict[OrdinalCNF, int] = {}
        for k, v in pairs:
            if k in seen and seen[k] != v:
                raise PersistencyError(f"conflicting values for {k}")
            seen[k] = v
        return cls(tuple(sorted(seen.items(), key=lambda kv: kv[0].terms)))

    def as_dict(self) -> dict[OrdinalCNF, int]:
        return dict(self.entries)

    def domain(self) -> tuple[OrdinalCNF, ...]:
        return tuple(k for k, _ in self.entries)

    def get(self, key: OrdinalCNF) -> int | None:
        for k, v in self.entries:
            if k == key:
                return v
        return None

    def restrict(self, keys: Iterable[OrdinalCNF]) -> "PFunc":
        keep = set(keys)
        return PFunc(tuple((k, v) for k, v in self.entries if k in keep))

    def extends(self, other: "PFunc") -> bool:
        mine = self.as_dict()
        return all(mine.get(k) == v for k, v in other.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def max_value(self) -> int:
        return max((v for _, v in self.entries), default=-1)


EMPTY_PFUNC = PFunc()


@lru_cache(maxsize=65536)
def fiber_bound(
    frag: MorassFragment, fiber: frozenset[OrdinalCNF]
) -> OrdinalCNF | None:
    """Least common preceq-upper bound of a finite set within the universe.

    At each level the bound's predecessor must dominate the fiber's maximum
    there; the admissible elements per level form a finite interval union
    (predecessor maps are piecewise translations), and the fiber is bounded
    iff the intersection over all levels is nonempty.
    """
    if not fiber:
        return None
    vecs = [predecessor_vector(frag, x) for x in fiber]
    constraints = []
    for beta in range(frag.height + 1):
        m = max(v[beta] for v in vecs)
        theta_b = frag.theta_at(beta)
        if beta == frag.height:
            constraints.append(((m, theta_b),))
        else:
            constraints.append(
                preimage_of_interval(predecessor_pieces(frag, beta), m, theta_b)
            )
    return intervals.first_point(intervals.intersect_all(constraints))


def in_family(frag: MorassFragment, f: PFunc) -> bool:
    """Membership test for the fragment's persistent family.

    (1) whenever f(eta) = a and xi sits below eta with equal level-a
        predecessors, then f(xi) = a too;
    (2) every fiber has a common preceq-upper bound within the universe.
    """
    for k, _ in f.entries:
        frag.check_element(k)
    vecs = {
        k: tuple(x.terms for x in predecessor_vector(frag, k)) for k, _ in f.entries
    }
    height = frag.height

    def _preceq_at(alpha: int, x: OrdinalCNF, y: OrdinalCNF) -> bool:
        vx, vy = vecs[x], vecs[y]
        if any(a > b for a, b in zip(vx, vy)):
            return False
        pin = min(alpha, height)
        return vx[pin] == vy[pin]

    for eta, alpha in f.entries:
        for xi, val in f.entries:
            if xi == eta:
                continue
            if _preceq_at(alpha, xi, eta) and val != alpha:
                return False
    fibers: dict[int, set[OrdinalCNF]] = {}
    for k, v in f.entries:
        fibers.setdefault(v, set()).add(k)
    for members in fibers.values():
        if len(members) > 1 and fiber_bound(frag, frozenset(members)) is None:
            return False
    return True


def downward_closed_check(frag: MorassFragment, f: PFunc, g: PFunc) -> bool:
    """With f a subfunction of g: membership of g implies membership of f."""
    if not g.extends(f):
        raise PersistencyError("f must be a subfunction of g")
    return in_family(frag, f) or not in_family(frag, g)


@dataclass(frozen=True)
class PersistencyTranscript:
    rounds: tuple[tuple[OrdinalCNF, PFunc], ...]
    stuck_at: int | None = None

    @property
    def won(self) -> bool:
        return self.stuck_at is None

    def final_position(self) -> PFunc:
        return self.rounds[-1][1] if self.rounds else EMPTY_PFUNC

    def to_json(self) -> dict:
        return {
            "rounds": [
                {
                    "challenge": render_ordinal(xi),
                    "response": {
                        "pairs": [[render_ordinal(k), v] for k, v in resp.entries]
                    },
                }
                for xi, resp in self.rounds
            ],
            "outcome": "win" if self.won else {"stuck_at": self.stuck_at},
        }


def transcript_from_json(obj: dict) -> PersistencyTranscript:
    rounds = tuple(
        (
            parse_ordinal(rnd["challenge"]),
            PFunc.from_pairs(
                (parse_ordinal(k), int(v)) for k, v in rnd["response"]["pairs"]
            ),
        )
        for rnd in obj["rounds"]
    )
    outcome = obj["outcome"]
    stuck = None if outcome == "win" else int(outcome["stuck_at"])
    return PersistencyTranscript(rounds, stuck)


ForallPlayer = Callable[[int, tuple], OrdinalCNF]


def play_persistency(
    frag: MorassFragment,
    forall_player: ForallPlayer,
    exists_player,
    rounds: int,
) -> PersistencyTranscript:
    """Referee the persistency game for a fixed number of rounds.

    Each response must belong to the family, extend every previous
    response, and cover the round's challenge; any failure (including a
    None response) ends the game as stuck at that round.
    """
    played: list[tuple[OrdinalCNF, PFunc]] = []
    previous = EMPTY_PFUNC
    for j in range(rounds):
        xi = forall_player(j, tuple(played))
        frag.check_element(xi)
        response = exists_player.respond(xi)
        legal = (
            isinstance(response, PFunc)
            and response.get(xi) is not None
            and response.extends(previous)
            and in_family(frag, response)
        )
        if not legal:
            return PersistencyTranscript(tuple(played), stuck_at=j)
        played.append((xi, response))
        previous = response
    return PersistencyTranscript(tuple(played))


class MorassExistsPlayer:
    """The explicit defender strategy.

    On challenge xi: if some earlier challenge dominates it at that
    challenge's assigned value (take the earliest), reuse the value;
    otherwise pick the least natural strictly above every value used so
    far and every least-common-cover level with an earlier challenge.
    """

    def __init__(self, frag: MorassFragment):
        self.frag = frag
        self.history: list[tuple[OrdinalCNF, int]] = []

    def respond(self, xi: OrdinalCNF) -> PFunc:
        choice = None
        for xi_i, alpha_i in self.history:
            if preceq_at(self.frag, alpha_i, xi, xi_i):
                choice = alpha_i
                break
        if choice is None:
            floor = -1
            for xi_i, alpha_i in self.history:
                floor = max(floor, alpha_i, mu(self.frag, xi_i, xi))
            choice = floor + 1
        self.history.append((xi, choice))
        return PFunc.from_pairs(self.history)


def morass_strategy(frag: MorassFragment) -> MorassExistsPlayer:
    return MorassExistsPlayer(frag)


def claim_check(history: Sequence[tuple[OrdinalCNF, int]], frag: MorassFragment) -> bool:
    """At every stage, at most one already-used value admits a dominating witness."""
    for j in range(len(history)):
        xi_j = history[j][0]
        candidates = set()
        for i in range(j):
            xi_i, alpha_i = history[i]
            if preceq_at(frag, alpha_i, xi_j, xi_i):
                candidates.add(alpha_i)
        if len(candidates) > 1:
            return False
    return True


Sampler = Callable[[PFunc, OrdinalCNF], PFunc | None]


class GreedyExistsPlayer:
    """Plays whatever the sampler produces; legality is left to the referee."""

    def __init__(self, sampler: Sampler):
        self.sampler = sampler
        self.position = EMPTY_PFUNC

    def respond(self, xi: OrdinalCNF) -> PFunc | None:
        nxt = self.sampler(self.position, xi)
        if nxt is not None:
            self.position = nxt
        return nxt


def greedy_strategy(sampler: Sampler) -> GreedyExistsPlayer:
    return GreedyExistsPlayer(sampler)


def family_extension_sampler(frag: MorassFragment, max_value: int) -> Sampler:
    """Sampler over the whole family: first legal extension by value order."""

    def sample(position: PFunc, xi: OrdinalCNF) -> PFunc | None:
        if position.get(xi) is not None:
            return position
        for v in range(max_value + 1):
            cand = PFunc.from_pairs(tuple(position.entries) + ((xi, v),))
            if in_family(frag, cand):
                return cand
        return None

    return sample


def broken_player() -> GreedyExistsPlayer:
    """A defender that always answers with the empty function (always illegal)."""
    return greedy_strategy(lambda position, xi: EMPTY_PFUNC)


def random_challenges(frag: MorassFragment, seed: int) -> ForallPlayer:
    """Deterministic pseudo-random challenger over the fragment's universe."""
    import random as _random

    rng = _random.Random(seed)

    def player(_j: int, _prior: tuple) -> OrdinalCNF:
        return random_ordinal_below(frag.top_theta, rng)

    return player


def scripted_challenges(moves: Sequence[OrdinalCNF]) -> ForallPlayer:
    """Replays a fixed list; repeats the final move if the script runs out."""
    if not moves:
        raise PersistencyError("script must contain at least one challenge")

    def player(j: int, _prior: tuple) -> OrdinalCNF:
        return moves[min(j, len(moves) - 1)]

    return player
