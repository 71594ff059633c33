import json
import random

import pytest

from morasslab.efgame import (
    EFConfig,
    EFGameError,
    WEIGHT_PRESETS,
    ef_exists_strategy,
    play_ef,
    random_forall,
    scripted_forall,
    transcript_to_json,
)
from morasslab.structures import (
    OrdElement,
    SetElement,
    classify_partial_iso,
    enumerate_layer,
    make_ab,
    normalize_u,
)
from oracles import all_challenge_sequences, ef_game_solver

from conftest import o


@pytest.fixture
def ab(frag0):
    return make_ab(frag0, [o("0"), o("1")])


def test_config_validation():
    with pytest.raises(EFGameError):
        EFConfig(rounds=0, move_cap=1)
    with pytest.raises(EFGameError):
        EFConfig(rounds=1, move_cap=0)


def test_first_move_maps_constant(ab):
    a_struct, b_struct, f_star = ab
    config = EFConfig(rounds=1, move_cap=2)
    adv = scripted_forall([((a_struct.constant,), (b_struct.constant,))])
    t = play_ef(a_struct, b_struct, adv, ef_exists_strategy(a_struct, b_struct), config)
    assert t.won
    psi = t.final_map()
    assert psi[a_struct.constant] == b_struct.constant
    assert psi[b_struct.constant] == a_struct.constant


def test_ord_challenges_get_identity(ab):
    a_struct, b_struct, _ = ab
    config = EFConfig(rounds=1, move_cap=3)
    elems = (OrdElement(o("0")), OrdElement(o("w+1")))
    t = play_ef(
        a_struct,
        b_struct,
        scripted_forall([(elems, ())]),
        ef_exists_strategy(a_struct, b_struct),
        config,
    )
    assert t.won
    psi = t.final_map()
    assert all(psi[e] == e for e in elems)


def test_two_round_nested_layers(ab):
    a_struct, b_struct, _ = ab
    base = a_struct.constant.u
    bigger = normalize_u(base + (o("w+1"),))
    config = EFConfig(rounds=2, move_cap=2)
    moves = [
        ((a_struct.constant,), (b_struct.constant,)),
        ((SetElement(bigger),), (SetElement(bigger, frozenset({1})),)),
    ]
    t = play_ef(
        a_struct, b_struct, scripted_forall(moves), ef_exists_strategy(a_struct, b_struct), config
    )
    assert t.won
    first, second = (dict(r.response) for r in t.rounds)
    assert all(second.get(k) == v for k, v in first.items())
    for rnd in t.rounds:
        cls = classify_partial_iso(dict(rnd.response), a_struct, b_struct)
        assert cls.is_shift_family and cls.coherent and cls.n_psi == 1


def test_empty_round_is_legal(ab):
    a_struct, b_struct, _ = ab
    config = EFConfig(rounds=2, move_cap=2)
    moves = [((a_struct.constant,), ()), ((), ())]
    t = play_ef(
        a_struct, b_struct, scripted_forall(moves), ef_exists_strategy(a_struct, b_struct), config
    )
    assert t.won and len(t.rounds) == 2


class _NonExtendingPlayer:
    def __init__(self, a_struct, b_struct):
        self.inner = ef_exists_strategy(a_struct, b_struct)
        self.round = 0

    def respond(self, ca, cb):
        self.round += 1
        if self.round == 2:
            return {}
        return self.inner.respond(ca, cb)


def test_referee_flags_non_extension(ab):
    a_struct, b_struct, _ = ab
    config = EFConfig(rounds=2, move_cap=2)
    adv = scripted_forall(
        [((a_struct.constant,), ()), ((OrdElement(o("0")),), ())]
    )
    t = play_ef(a_struct, b_struct, adv, _NonExtendingPlayer(a_struct, b_struct), config)
    assert not t.won and t.loss_at == 1
    assert "extend" in t.reason


def test_scripted_pads_with_empty_rounds(ab):
    a_struct, b_struct, _ = ab
    config = EFConfig(rounds=3, move_cap=2)
    adv = scripted_forall([((a_struct.constant,), (b_struct.constant,))])
    t = play_ef(a_struct, b_struct, adv, ef_exists_strategy(a_struct, b_struct), config)
    assert t.won and len(t.rounds) == 3
    assert t.rounds[2].challenge_a == ()


def test_random_adversary_deterministic(frag0):
    def run():
        a_struct, b_struct, _ = make_ab(frag0, [o("0"), o("1")])
        config = EFConfig(rounds=6, move_cap=4)
        adv = random_forall(a_struct, b_struct, config, seed=99)
        t = play_ef(a_struct, b_struct, adv, ef_exists_strategy(a_struct, b_struct), config)
        return json.dumps(transcript_to_json(t, a_struct), sort_keys=True)

    assert run() == run()


def test_strategy_soundness_sampled(built_conditions):
    rng = random.Random(2024)
    for cond in built_conditions[:3]:
        a_struct, b_struct, _ = make_ab(cond.frag, [o("0"), o("1")])
        for preset in WEIGHT_PRESETS:
            config = EFConfig(rounds=rng.randint(2, 8), move_cap=rng.randint(1, 6))
            adv = random_forall(
                a_struct, b_struct, config, seed=rng.randrange(10**6), weights=WEIGHT_PRESETS[preset]
            )
            t = play_ef(a_struct, b_struct, adv, ef_exists_strategy(a_struct, b_struct), config)
            assert t.won, (t.loss_at, t.reason)
            for rnd in t.rounds:
                cls = classify_partial_iso(dict(rnd.response), a_struct, b_struct)
                assert cls.identity_on_ord and cls.is_shift_family and cls.coherent
                assert cls.n_psi == 1


def test_simulation_chain_is_monotone(ab, frag0):
    from morasslab.persistency import in_family

    a_struct, b_struct, _ = ab
    config = EFConfig(rounds=6, move_cap=4)
    player = ef_exists_strategy(a_struct, b_struct)
    adv = random_forall(a_struct, b_struct, config, seed=31)
    previous = player.current_function()
    for j in range(config.rounds):
        ca, cb = adv(j, {})
        player.respond(ca, cb)
        current = player.current_function()
        assert current.extends(previous)
        assert in_family(frag0, current)
        previous = current


def test_exhaustive_tree_confirms_winning_strategy(ab):
    a_struct, b_struct, f_star = ab
    base = a_struct.constant.u
    layer = enumerate_layer(a_struct, base)
    star = layer.index_of(f_star)
    g = next(i for i in range(len(layer)) if i != star)
    pool = (
        a_struct.constant,
        b_struct.constant,
        SetElement(base, frozenset({g})),
        SetElement(base, frozenset({g, star})),
        OrdElement(o("0")),
        OrdElement(o("1")),
    )
    rounds = 2
    win, freeze = ef_game_solver(a_struct, b_struct, pool, rounds)
    assert win((), 0)
    # the implemented defender never leaves the winning region
    moves = [(e, side) for e in pool for side in "ab"]
    for seq in all_challenge_sequences(moves, rounds):
        player = ef_exists_strategy(a_struct, b_struct)
        position = ()
        for r, (elem, side) in enumerate(seq):
            ca, cb = ((elem,), ()) if side == "a" else ((), (elem,))
            psi = player.respond(ca, cb)
            position = freeze(psi)
            assert win(position, r + 1), (seq, r)
