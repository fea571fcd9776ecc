from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import given, strategies as st

from efgcorr.fixtures import signaling_plan
from efgcorr.linsys import LinearSystem, build_system
from efgcorr.lp import solve, solve_square
from gmpy2 import mpq

from support import random_lp


def _box(upper=1, lower=None):
    s = LinearSystem()
    s.declare("x")
    s.add("up", [("x", 1)], "<=", upper)
    if lower is not None:
        s.add("low", [("x", 1)], ">=", lower)
    return s


def test_maximize_on_unit_interval():
    s = _box()
    s.maximize([("x", 1)])
    for method in ("auto", "exact"):
        out = solve(s, method)
        assert out.feasible and out.value == 1 and out.assignment == {"x": 1}


def test_crossed_bounds_are_infeasible():
    for method in ("auto", "exact"):
        assert solve(_box(upper=0, lower=1), method).status == "infeasible"


def test_unbounded_status():
    s = LinearSystem()
    s.declare("x")
    s.maximize([("x", 1)])
    assert solve(s).status == "unbounded"
    assert solve(s, "exact").status == "unbounded"


def test_free_variable_can_go_negative():
    s = LinearSystem()
    s.declare("y", free=True)
    s.add("r", [("y", 1)], "<=", Fraction(-7, 3))
    s.maximize([("y", 1)])
    assert solve(s).value == Fraction(-7, 3)


def test_empty_system():
    s = LinearSystem()
    assert solve(s).feasible
    s.declare("x")
    s.maximize([("x", -1)])
    assert solve(s).value == 0


def test_signaling_efce_system(signaling):
    system = build_system(signaling, "efce", list(signaling_plan(signaling).support), threshold=10)
    assert solve(system).feasible
    assert not solve(build_system(signaling, "efce", list(signaling_plan(signaling).support),
                                  threshold=Fraction(101, 10))).feasible


def test_square_solver():
    rows = [{0: mpq(2), 1: mpq(1)}, {0: mpq(1), 1: mpq(-1)}]
    assert solve_square(rows, [mpq(3), mpq(0)], 2) == [1, 1]
    assert solve_square([{0: mpq(1), 1: mpq(1)}, {0: mpq(2), 1: mpq(2)}], [mpq(1), mpq(2)], 2) is None


@given(st.integers(0, 10**6), st.booleans(), st.sampled_from(["auto", "exact"]))
def test_constructed_systems(seed, feasible, method):
    system, cert = random_lp(random.Random(seed), feasible)
    if feasible:
        assert not system.violations(cert)
        out = solve(system, method)
        assert out.feasible and not system.violations(out.assignment)
    else:
        assert solve(system, method).status == "infeasible"


@given(st.integers(0, 10**6))
def test_optimum_ignores_row_order_and_names(seed):
    rng = random.Random(seed)
    system, x0 = random_lp(rng, True)
    for v in system.variables:
        system.add(f"box_{v}", [(v, 1)], "<=", 10)
        system.add(f"floor_{v}", [(v, 1)], ">=", -10)
    system.maximize([(v, Fraction(rng.randint(-3, 3))) for v in system.variables])
    base = solve(system)
    assert base.feasible and base.value >= system.objective_value(x0)

    rename = {v: f"q{k}" for k, v in enumerate(reversed(system.variables))}
    other = LinearSystem()
    for v in rng.sample(system.variables, len(system.variables)):
        other.declare(rename[v], free=v in system.free)
    for c in rng.sample(system.constraints, len(system.constraints)):
        other.add(c.name, [(rename[v], a) for v, a in c.coeffs], c.sense, c.rhs)
    other.maximize([(rename[v], a) for v, a in system.objective])
    assert solve(other).value == base.value
    assert solve(other, "exact").value == base.value
