from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from efgcorr.fixtures import random_game, signaling_profile, signaling_reject
from efgcorr.game import CHANCE, LEAF, PLAYER, Edge, GameError, InfoSet, Node, make_game
from efgcorr.nash_etr import (
    BehavioralProfile,
    check_behavioral,
    emit_etr,
    evaluate,
    parse_behavioral,
)
from efgcorr.strategy import CorrelationPlan, enumerate_profiles, enumerate_pure_strategies
from efgcorr.verify import verify


def _walk(game, beta, i, pure):
    """Player i's expected payoff when i follows ``pure`` and the rest follow ``beta``."""
    def go(v):
        node = game.nodes[v]
        if node.kind == LEAF:
            return node.payoff[i - 1]
        if node.kind == CHANCE:
            return sum(e.prob * go(e.child) for e in node.edges)
        if node.player == i:
            return go(node.child(pure[node.infoset]))
        return sum(beta.prob(node.infoset, e.action) * go(e.child) for e in node.edges)
    return go(game.root)


def _random_behavioral(rng, game):
    out = {}
    for I, info in game.infosets.items():
        w = [rng.randint(0, 3) for _ in info.actions]
        if not any(w):
            w[0] = 1
        out[I] = {a: Fraction(k, sum(w)) for a, k in zip(info.actions, w)}
    return BehavioralProfile.of(out)


def test_signaling_system_shape(signaling):
    etr = emit_etr(signaling, 6)
    assert len(etr.x_variables) == 8
    assert {"U1", "U2"} <= set(etr.variables)
    assert etr.degree == 2
    assert len(etr.variables) == 24 and len(etr.constraints) == 35
    assert etr.constraints[-1].name == "threshold"


def test_reject_profile_is_nash_at_six_not_seven(signaling):
    beta = BehavioralProfile.pure(signaling_reject(signaling))
    assert check_behavioral(signaling, beta, 6).ok
    ev = evaluate(signaling, beta)
    assert ev.utilities == (0, 6)
    assert not emit_etr(signaling, 6).violations(ev.values)
    verdict = check_behavioral(signaling, beta, 7)
    assert not verdict.ok and "below" in verdict.reason
    assert emit_etr(signaling, 7).violations(ev.values) == ["threshold"]


def test_always_accept_is_rejected(signaling):
    beta = BehavioralProfile.pure(signaling_profile(signaling, "G_S", "G_W", "A_E", "A_G"))
    verdict = check_behavioral(signaling, beta)
    assert not verdict.ok
    assert (verdict.witness.player, verdict.witness.honest, verdict.witness.deviation) == (2, 5, 6)


def test_pure_chance_game_has_constant_payoffs():
    g = make_game(2, [], [Node("c", CHANCE, (Edge("a", prob=Fraction(1, 3)), Edge("b", prob=Fraction(2, 3)))),
                          Node("a", LEAF, payoff=(3, 0)), Node("b", LEAF, payoff=(0, 3))], "c")
    etr = emit_etr(g, 0)
    assert etr.x_variables == () and etr.degree == 1
    ev = evaluate(g, BehavioralProfile.of({}))
    assert ev.utilities == (1, 2) and check_behavioral(g, BehavioralProfile.of({}), 3).ok


def test_monomial_degrees_follow_player_moves(three_player):
    g = three_player
    etr = emit_etr(g, 0)
    payoff_row = next(c for c in etr.constraints if c.name == "payoff_1")
    degrees = sorted(len(m) for m, _ in payoff_row.poly if m != ("U1",))
    moves = sorted(sum(len(h) for h in g.histories[v]) for v in g.leaves if g.payoff(v, 1))
    assert degrees == moves


def test_matching_pennies_needs_mixing():
    acts = ("H", "T")
    nodes = [Node("r", PLAYER, tuple(Edge(f"p{a}", a) for a in acts), 1, "I1")]
    for a in acts:
        nodes.append(Node(f"p{a}", PLAYER, tuple(Edge(f"{a}{b}", b) for b in acts), 2, "I2"))
        for b in acts:
            win = 1 if a == b else -1
            nodes.append(Node(f"{a}{b}", LEAF, payoff=(Fraction(win), Fraction(-win))))
    g = make_game(2, [InfoSet("I1", 1, acts), InfoSet("I2", 2, acts)], nodes, "r")
    half = {"H": Fraction(1, 2), "T": Fraction(1, 2)}
    assert check_behavioral(g, BehavioralProfile.of({"I1": half, "I2": half}), 0).ok
    for sigma in enumerate_profiles(g):
        assert not check_behavioral(g, BehavioralProfile.pure(sigma)).ok


def test_profile_validation(signaling):
    with pytest.raises(GameError):
        BehavioralProfile.of({"I_S": {"E_S": Fraction(1, 2)}})
    with pytest.raises(GameError):
        BehavioralProfile.of({"I_S": {"E_S": 2, "G_S": -1}})
    with pytest.raises(GameError):
        check_behavioral(signaling, BehavioralProfile.of({"I_S": {"E_S": 1}}))
    doc = BehavioralProfile.pure(signaling_reject(signaling)).to_json(signaling)
    assert parse_behavioral(signaling, json.dumps(doc)) == BehavioralProfile.pure(signaling_reject(signaling))
    doc["1"]["I_S"] = {"Z": "1"}
    with pytest.raises(GameError):
        parse_behavioral(signaling, doc)


def test_smtlib_output(signaling):
    text = emit_etr(signaling, "13/2").to_smtlib()
    assert text.startswith("(set-logic QF_NRA)\n")
    assert "(declare-fun |x[I_S][E_S]| () Real)" in text
    assert "(/ 13 2)" in text
    assert text.rstrip().endswith("(check-sat)\n(get-model)")
    assert text == emit_etr(signaling, "13/2").to_smtlib()


@given(st.integers(0, 10**6))
def test_best_response_equals_pure_maximum(seed):
    rng = random.Random(seed)
    g = random_game(rng, players=rng.choice([2, 3]), max_nodes=14)
    beta = _random_behavioral(rng, g)
    ev = evaluate(g, beta)
    violated = emit_etr(g, ev.objective).violations(ev.values)
    assert all(name.startswith("incentive_") for name in violated)
    assert (not violated) == check_behavioral(g, beta).ok
    for i in range(1, g.players + 1):
        best = max(_walk(g, beta, i, dict(s.choices)) for s in enumerate_pure_strategies(g, i))
        assert ev.best_response[i - 1] == best
        assert _walk(g, beta, i, dict(ev.responses[i - 1].choices)) == best


@given(st.integers(0, 10**6))
def test_deterministic_candidates_agree_with_pure_nash(seed):
    rng = random.Random(seed)
    g = random_game(rng, players=2, max_nodes=14)
    profiles = enumerate_profiles(g, cap=10**4)
    for sigma in rng.sample(profiles, min(4, len(profiles))):
        assert check_behavioral(g, BehavioralProfile.pure(sigma)).ok == verify(g, CorrelationPlan.dirac(sigma), "nash").ok
