from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from efgcorr.fixtures import random_game, signaling_plan, signaling_profile, signaling_reject, single_leaf_game
from efgcorr.game import GameError
from efgcorr.reductions import parse_qbf, reduce_qbf
from efgcorr.strategy import (
    CorrelationPlan,
    PartialStrategy,
    ScaleError,
    apply_deviation,
    consistent,
    enumerate_partial,
    enumerate_profiles,
    enumerate_pure_strategies,
    expected_payoffs,
    leaf_distribution,
    parse_plan,
    plan_to_json,
    profile,
    pure_strategy,
    recommends,
)

from support import random_plan, walk_payoffs, walk_reaches


def test_applicant_has_four_strategies_in_lexicographic_order(signaling):
    got = [s.choices for s in enumerate_pure_strategies(signaling, 1)]
    assert got == [
        (("I_S", "E_S"), ("I_W", "E_W")),
        (("I_S", "E_S"), ("I_W", "G_W")),
        (("I_S", "G_S"), ("I_W", "E_W")),
        (("I_S", "G_S"), ("I_W", "G_W")),
    ]


def test_player_without_sets_has_one_empty_strategy():
    g = single_leaf_game()
    assert [s.choices for s in enumerate_pure_strategies(g, 1)] == [()]


def test_universal_player_strategy_count_in_qbf_game():
    g = reduce_qbf(parse_qbf("exists x1\nforall y1\nterm x1\nterm y1\n"))
    assert len(list(enumerate_pure_strategies(g, 3))) == 6


def test_enumeration_cap(signaling):
    with pytest.raises(ScaleError):
        list(enumerate_pure_strategies(signaling, 1, cap=3))
    with pytest.raises(ScaleError):
        enumerate_profiles(signaling, cap=15)
    assert len(enumerate_profiles(signaling)) == 16


def test_strategy_validation(signaling):
    with pytest.raises(GameError):
        pure_strategy(signaling, 1, {"I_S": "E_S"})
    with pytest.raises(GameError):
        pure_strategy(signaling, 1, {"I_S": "E_S", "I_W": "A_E"})
    with pytest.raises(GameError):
        pure_strategy(signaling, 3, {})


def test_apply_deviation(three_player):
    g = three_player
    sigma = profile(g, {"I1": "a", "L3": "c", "R3": "d", "I2": "b", "I4": "e"})
    assert apply_deviation(sigma, PartialStrategy.of(1, {})) == sigma
    swap = apply_deviation(sigma, PartialStrategy.of(1, {"I1": "abar"}))
    changed = {I for I in g.infosets if swap.get(I) != sigma.get(I)}
    assert changed == {"I1"}
    beta = PartialStrategy.of(1, {"R3": "dbar"})  # the sets reachable from R3
    dev = apply_deviation(sigma, beta)
    assert dev.get("L3") == "c" and dev.get("I1") == "a" and dev.get("R3") == "dbar"
    assert dev[2] == sigma[2] and dev[3] == sigma[3]
    assert apply_deviation(dev, beta) == dev


def test_consistency_indicators(signaling):
    sigma = signaling_reject(signaling)
    assert consistent(signaling, sigma, "S_G_R")
    assert not consistent(signaling, sigma, "S_G_A")
    assert consistent(signaling, sigma, ())
    assert not recommends(sigma, "I_E", "A_E")
    assert consistent(signaling, sigma, signaling.histories["S_G_R"])
    alpha = sigma[1]
    assert consistent(signaling, alpha, alpha)
    with pytest.raises(GameError):
        consistent(signaling, alpha, sigma[2])


def test_expected_payoffs_of_named_plans(signaling):
    assert expected_payoffs(signaling, signaling_plan(signaling)) == ((Fraction(7, 2), Fraction(13, 2)), 10)
    reject = CorrelationPlan.dirac(signaling_reject(signaling))
    assert expected_payoffs(signaling, reject) == ((0, 6), 6)
    assert expected_payoffs(single_leaf_game(5), CorrelationPlan.dirac(profile(single_leaf_game(5), {}))) == ((5,), 5)


def test_plan_validation(signaling):
    a = signaling_reject(signaling)
    b = signaling_profile(signaling, "E_S", "E_W", "A_E", "R_G")
    with pytest.raises(GameError):
        CorrelationPlan(((a, Fraction(1, 2)), (a, Fraction(1, 2))))
    with pytest.raises(GameError):
        CorrelationPlan(((a, Fraction(1)), (b, Fraction(0))))
    with pytest.raises(GameError):
        CorrelationPlan(((a, Fraction(1, 2)),))


def test_plan_json_round_trip(signaling):
    mu = signaling_plan(signaling)
    doc = json.dumps(plan_to_json(mu))
    assert parse_plan(signaling, doc) == mu
    bad = json.loads(doc)
    bad["plan"][0]["prob"] = "0"
    with pytest.raises(GameError):
        parse_plan(signaling, bad)
    with pytest.raises(GameError):
        parse_plan(signaling, {"plan": [{"prob": "1", "profile": {"1": {"I_S": "E_S"}}}]})


def test_partial_enumeration_domain(three_player):
    got = list(enumerate_partial(three_player, 1, ("R3", "I1")))
    assert len(got) == 4
    assert all(s.domain == {"I1", "R3"} for s in got)


@given(st.integers(0, 10**6))
def test_payoffs_match_a_plain_tree_walk(seed):
    rng = random.Random(seed)
    g = random_game(rng, players=rng.choice([1, 2, 3]), max_nodes=14)
    profiles = enumerate_profiles(g, cap=10**4)
    for sigma in rng.sample(profiles, min(3, len(profiles))):
        assert expected_payoffs(g, CorrelationPlan.dirac(sigma))[0] == walk_payoffs(g, sigma.table)
        for v in g.leaves:
            assert consistent(g, sigma, v) == walk_reaches(g, sigma.table, v)
            assert consistent(g, sigma, g.histories[v]) == consistent(g, sigma, v)


@given(st.integers(0, 10**6))
def test_expected_payoffs_are_linear_in_the_plan(seed):
    rng = random.Random(seed)
    g = random_game(rng, players=2, max_nodes=12)
    mu, nu = random_plan(rng, g), random_plan(rng, g)
    t = Fraction(rng.randint(1, 9), 10)
    mixed: dict = {}
    for plan, w in ((mu, t), (nu, 1 - t)):
        for s, p in plan:
            key = s.key
            prev = mixed.get(key, (s, Fraction(0)))
            mixed[key] = (s, prev[1] + w * p)
    mix = CorrelationPlan.of(mixed.values())
    (u_mu, o_mu), (u_nu, o_nu) = expected_payoffs(g, mu), expected_payoffs(g, nu)
    u_mix, o_mix = expected_payoffs(g, mix)
    assert u_mix == tuple(t * a + (1 - t) * b for a, b in zip(u_mu, u_nu))
    assert o_mix == t * o_mu + (1 - t) * o_nu
    assert sum(leaf_distribution(g, mix).values()) == 1
