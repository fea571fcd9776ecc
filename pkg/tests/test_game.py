from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from efgcorr.fixtures import random_game, signaling_without_chance, single_leaf_game
from efgcorr.game import (
    EMPTY,
    GameError,
    format_rational,
    infoset_reach_order,
    parse_game,
    parse_rational,
)
from efgcorr.reductions import parse_qbf, reduce_qbf
from efgcorr.strategy import enumerate_profiles, outcome

from support import walk_reaches


def test_signaling_shape(signaling):
    assert signaling.players == 2
    assert len(signaling.leaves) == 8
    assert signaling.members["I_E"] == ("N1", "N3")
    assert signaling.members["I_G"] == ("N2", "N4")
    assert signaling.player_infosets[1] == ("I_S", "I_W")


def test_single_leaf_game_is_valid():
    g = single_leaf_game(0)
    assert g.leaves == ("v",)
    assert g.payoff("v", 1) == 0


def test_perfect_recall_violation_names_the_set_and_both_histories():
    with pytest.raises(GameError) as exc:
        signaling_without_chance()
    msg = str(exc.value)
    assert "perfect recall" in msg
    assert "I_E" in msg or "I_G" in msg
    assert "(I_0,a)" in msg and "(I_0,b)" in msg


def test_chance_reach(signaling):
    assert signaling.chance_reach("root") == 1
    assert signaling.chance_reach("S_E_A") == Fraction(1, 2)
    with pytest.raises(GameError):
        signaling.chance_reach("nowhere")


def test_chance_reach_lower_bound_on_qbf_games():
    phi = parse_qbf("exists x1\nforall y1\nexists x2\nforall y2\nterm x1 -y2\nterm y1 x2 -x1\nterm -y1 -x2\n")
    g = reduce_qbf(phi)
    assert min(g.chance_reach(v) for v in g.leaves) >= Fraction(1, 12)


def test_player_histories_on_three_player_tree(three_player):
    g = three_player
    assert g.history("l1", 1) == (("I1", "a"), ("L3", "c"))
    assert g.histories["l1"] == ((("I1", "a"), ("L3", "c")), (("I2", "b"),), (("I4", "e"),))
    assert g.history("r4", 2) == (("I2", "b"),)
    assert g.histories["r4"] == ((("I1", "abar"),), (("I2", "b"),), EMPTY)
    assert all(g.history("root", i) == EMPTY for i in (1, 2, 3))
    with pytest.raises(GameError):
        g.history("l1", 4)
    with pytest.raises(GameError):
        g.history("zz", 1)


def test_infoset_history_matches_members(three_player):
    g = three_player
    for I, members in g.members.items():
        i = g.player_of(I)
        assert all(g.history(v, i) == g.infoset_history(I) for v in members)


def test_reach_order(three_player, signaling):
    order = infoset_reach_order(three_player, 1)
    assert order.leq("I1", "L3") and order.leq("I1", "R3")
    assert not order.leq("L3", "R3") and not order.leq("R3", "L3")
    assert all(order.leq(order.ROOT, I) for I in ("I1", "L3", "R3"))
    assert not order.leq("I1", order.ROOT)
    company = infoset_reach_order(signaling, 2)
    assert not company.leq("I_E", "I_G") and not company.leq("I_G", "I_E")
    assert company.leq("I_E", "I_E")


def _doc(**changes):
    doc = {
        "players": 1,
        "infosets": [{"id": "I", "player": 1, "actions": ["l", "r"]}],
        "nodes": [
            {"id": "c", "kind": "chance", "edges": [{"prob": "1/3", "child": "p"}, {"prob": "2/3", "child": "z"}]},
            {"id": "p", "kind": "player", "player": 1, "infoset": "I",
             "edges": [{"action": "l", "child": "a"}, {"action": "r", "child": "b"}]},
            {"id": "a", "kind": "leaf", "payoff": ["1/2"]},
            {"id": "b", "kind": "leaf", "payoff": ["-1"]},
            {"id": "z", "kind": "leaf", "payoff": ["0"]},
        ],
        "root": "c",
    }
    doc.update(changes)
    return doc


def test_parse_minimal_document():
    g = parse_game(json.dumps(_doc()))
    assert g.objective == (Fraction(1),)
    assert g.payoff("a", 1) == Fraction(1, 2)
    assert g.chance_reach("a") == Fraction(1, 3)


@pytest.mark.parametrize("mutate, needle", [
    (lambda d: d["nodes"][0]["edges"][0].update(prob="1/2"), "sum to 1"),
    (lambda d: d["nodes"][0]["edges"][0].update(prob="0"), "non-positive"),
    (lambda d: d["nodes"][2].update(payoff=["1", "2"]), "payoff of length"),
    (lambda d: d["nodes"][1]["edges"][1].update(action="l"), "repeats"),
    (lambda d: d["nodes"][1]["edges"][1].update(action="x"), "actions differ"),
    (lambda d: d["nodes"][1].update(infoset="J"), "unknown information set"),
    (lambda d: d.update(root="nope"), "root"),
    (lambda d: d["nodes"][0]["edges"][1].update(child="a"), "two parents"),
    (lambda d: d.update(objective=["1", "1"]), "objective"),
    (lambda d: d["nodes"].append({"id": "q", "kind": "leaf", "payoff": ["0"]}), "not reachable"),
])
def test_parse_rejects(mutate, needle):
    doc = _doc()
    mutate(doc)
    with pytest.raises(GameError, match=needle):
        parse_game(json.dumps(doc))


def test_parse_rejects_malformed_json():
    with pytest.raises(GameError):
        parse_game("{not json")
    with pytest.raises(GameError):
        parse_game(json.dumps({"players": 1}))


def test_rationals():
    assert parse_rational("3/6") == Fraction(1, 2)
    assert parse_rational("-4") == -4
    assert parse_rational(2) == 2
    for bad in (0.5, True, "1/0", "x"):
        with pytest.raises(GameError):
            parse_rational(bad)
    assert format_rational(Fraction(-3, 4)) == "-3/4"
    assert format_rational(Fraction(5)) == "5"


def test_round_trip(signaling, three_player):
    for g in (signaling, three_player):
        again = parse_game(g.dumps())
        assert again.dumps() == g.dumps()
        assert again.histories == g.histories


@given(st.integers(0, 10**6), st.sampled_from([1, 2, 3]))
def test_random_games_are_valid_and_induce_distributions(seed, players):
    g = random_game(random.Random(seed), players=players, max_nodes=14)
    assert parse_game(g.dumps()).dumps() == g.dumps()
    for v in g.order:
        for e in g.nodes[v].edges:
            expected = g.reach[v] * e.prob if g.nodes[v].kind == "chance" else g.reach[v]
            assert g.reach[e.child] == expected
    for sigma in enumerate_profiles(g, cap=10**4)[:16]:
        dist = outcome(g, sigma)
        assert sum(p for _, p in dist) == 1
        reached = {v for v, _ in dist}
        assert reached == {v for v in g.leaves if walk_reaches(g, sigma.table, v)}


@given(st.integers(0, 10**6))
def test_reach_order_is_antisymmetric(seed):
    g = random_game(random.Random(seed), players=2, max_nodes=16)
    for i in (1, 2):
        order = infoset_reach_order(g, i)
        for I in order.infosets:
            for J in order.infosets:
                if I != J and order.leq(I, J):
                    assert not order.leq(J, I)
