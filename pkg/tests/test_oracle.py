from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from efgcorr.game import GameError
from efgcorr.oracle import NormalForm, oracle_solve
from efgcorr.reductions import CnfFormula, reduce_sat3
from efgcorr.strategy import ScaleError, expected_payoffs, profile_payoffs
from efgcorr.verify import Concept, verify

from support import small_games


def _unsat_formula():
    return CnfFormula.of([["x"], ["-x", "y"], ["-x", "-y"]])


def test_signaling_nfce_optimum_is_six(signaling):
    report = oracle_solve(signaling, "nfce", maximize=True)
    assert report.value == 6
    assert report.sigma_size == 16
    assert verify(signaling, report.plan, "nfce").ok
    assert expected_payoffs(signaling, report.plan)[1] == 6


def test_signaling_efce_reaches_ten(signaling):
    report = oracle_solve(signaling, "efce", threshold=10)
    assert report.feasible
    assert verify(signaling, report.plan, "efce").ok
    assert oracle_solve(signaling, "efce", maximize=True).value == 10


def test_unsatisfiable_formula_has_no_welfare_one_afcce():
    phi = _unsat_formula()
    assert not phi.satisfying()
    g = reduce_sat3(phi)
    assert not oracle_solve(g, "afcce", threshold=1).feasible
    assert oracle_solve(g, "afcce", maximize=True).value < 1


def test_cap_and_unknown_concept(signaling):
    with pytest.raises(ScaleError):
        oracle_solve(signaling, "efce", maximize=True, cap=15)
    with pytest.raises(GameError):
        oracle_solve(signaling, "nash", maximize=True)


def test_normal_form_indexing(three_player):
    nf = NormalForm(three_player)
    assert nf.size == 8 * 2 * 2
    for k in (0, 5, nf.size - 1):
        assert profile_payoffs(three_player, nf.profile(k)) == nf.utility[k]
        assert sum(nf.utility[k]) == nf.welfare[k]


def test_report_json(signaling):
    doc = oracle_solve(signaling, "nfce", maximize=True).to_json()
    assert doc["value"] == "6" and doc["concept"] == "nfce" and doc["plan"]


@settings(max_examples=20)
@given(st.integers(0, 10**6))
def test_values_follow_the_inclusion_table(seed):
    g = small_games(seed, 1, max_sigma=150, max_nodes=14)[0]
    val = {c: oracle_solve(g, c, maximize=True) for c in
           (Concept.NFCE, Concept.EFCE, Concept.EFCCE, Concept.NFCCE, Concept.AFCE, Concept.AFCCE)}
    for c, r in val.items():
        assert r.feasible and verify(g, r.plan, c).ok
        assert expected_payoffs(g, r.plan)[1] == r.value
    chain = [(Concept.NFCE, Concept.EFCE), (Concept.EFCE, Concept.EFCCE), (Concept.EFCCE, Concept.NFCCE),
             (Concept.EFCE, Concept.AFCE), (Concept.AFCE, Concept.AFCCE), (Concept.EFCCE, Concept.AFCCE)]
    for small, big in chain:
        assert val[small].value <= val[big].value
    above = val[Concept.NFCCE].value + Fraction(1, 3)
    assert not oracle_solve(g, "nfcce", threshold=above).feasible
